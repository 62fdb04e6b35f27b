import numpy as np
import pytest

from scenefuse.classifier import TrainConfig, evaluate, init_model, train
from scenefuse.data import (
    CleaningReport,
    Manifest,
    ManifestRow,
    SynthConfig,
    VqaRecord,
    clean_corpus,
    join_labeled,
    make_synthetic,
)
from scenefuse.text import TranscribedWord, TranscriptionRecord


def record(image_id, *tokens_with_conf):
    words = tuple(TranscribedWord(token=t, confidence=c) for t, c in tokens_with_conf)
    return TranscriptionRecord(image_id=image_id, words=words)


class TestManifest:
    def test_duplicate_ids_rejected(self):
        rows = (
            ManifestRow("a", "x", "train"),
            ManifestRow("a", "y", "test"),
        )
        with pytest.raises(ValueError, match="duplicate"):
            Manifest(rows=rows)

    def test_bad_split_rejected(self):
        with pytest.raises(ValueError):
            ManifestRow("a", "x", "validation")

    def test_class_names_sorted(self):
        m = Manifest(
            rows=(
                ManifestRow("1", "zebra", "train"),
                ManifestRow("2", "ant", "train"),
                ManifestRow("3", "ant", "test"),
            )
        )
        assert m.class_names() == ["ant", "zebra"]


class TestVqaRecord:
    def test_rejects_empty_fields(self):
        with pytest.raises(ValueError):
            VqaRecord("img", "", "yes")


class TestCleanCorpus:
    def test_threshold_zero_is_identity(self):
        corpus = {"a": record("a", ("x", 0.2), ("y", 0.9))}
        cleaned, report = clean_corpus(corpus, 0.0)
        assert cleaned == corpus
        assert report.removed_words == 0

    def test_counting_identity(self):
        corpus = {
            "a": record("a", ("x", 0.2), ("y", 0.9)),
            "b": record("b", ("z", 0.5)),
            "c": record("c"),
        }
        cleaned, report = clean_corpus(corpus, 0.7)
        assert report.total_words == 3
        assert report.kept_words == 1
        assert report.removed_words == report.total_words - report.kept_words
        assert sum(report.removed_per_image.values()) == report.removed_words

    def test_emptied_records_counted_and_retained(self):
        corpus = {"a": record("a", ("x", 0.1)), "b": record("b")}
        cleaned, report = clean_corpus(corpus, 0.7)
        assert set(cleaned) == {"a", "b"}
        assert cleaned["a"].words == ()
        assert report.emptied_records == 1  # "b" was already empty

    def test_idempotent(self):
        corpus = {"a": record("a", ("x", 0.2), ("y", 0.9), ("z", 0.7))}
        once, _ = clean_corpus(corpus, 0.7)
        twice, report = clean_corpus(once, 0.7)
        assert once == twice
        assert report.removed_words == 0

    def test_never_increases_word_counts(self):
        corpus = {"a": record("a", ("x", 0.4), ("y", 0.9))}
        for threshold in (0.0, 0.3, 0.5, 0.95, 1.0):
            cleaned, _ = clean_corpus(corpus, threshold)
            assert len(cleaned["a"].words) <= len(corpus["a"].words)


class TestJoinLabeled:
    def make_manifest(self):
        return Manifest(
            rows=(
                ManifestRow("i1", "cat", "train"),
                ManifestRow("i2", "dog", "train"),
                ManifestRow("i3", "cat", "test"),
            )
        )

    def test_join(self):
        feats = {k: np.array([1.0, float(i)]) for i, k in enumerate(["i1", "i2", "i3"])}
        examples = join_labeled(self.make_manifest(), feats, "train")
        assert len(examples) == 2
        assert examples[0].label == 0  # cat sorts first
        assert examples[1].label == 1

    def test_missing_id_named_in_error(self):
        feats = {"i1": np.zeros(2)}
        with pytest.raises(ValueError, match="i2"):
            join_labeled(self.make_manifest(), feats, "train")

    def test_empty_split_rejected(self):
        manifest = Manifest(rows=(ManifestRow("i1", "cat", "train"),))
        with pytest.raises(ValueError, match="test"):
            join_labeled(manifest, {"i1": np.zeros(2)}, "test")

    def test_inconsistent_dims_rejected(self):
        feats = {"i1": np.zeros(2), "i2": np.zeros(3), "i3": np.zeros(2)}
        with pytest.raises(ValueError, match="dim"):
            join_labeled(self.make_manifest(), feats, "train")

    def test_label_outside_class_set_rejected(self):
        feats = {"i1": np.zeros(2), "i2": np.zeros(2), "i3": np.zeros(2)}
        with pytest.raises(ValueError, match="dog"):
            join_labeled(self.make_manifest(), feats, "train", class_names=["cat"])


class TestSynthConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SynthConfig(n_train=0, n_test=1, dim_a=2, dim_b=2, n_classes=2)
        with pytest.raises(ValueError):
            SynthConfig(n_train=1, n_test=1, dim_a=2, dim_b=2, n_classes=1)
        with pytest.raises(ValueError):
            SynthConfig(n_train=1, n_test=1, dim_a=2, dim_b=2, n_classes=2, interaction="xor")


class TestMakeSynthetic:
    def test_deterministic(self):
        cfg = SynthConfig(n_train=20, n_test=10, dim_a=4, dim_b=3, n_classes=3, seed=42)
        t1, e1 = make_synthetic(cfg)
        t2, e2 = make_synthetic(cfg)
        assert all(np.array_equal(a.a, b.a) and np.array_equal(a.b, b.b) for a, b in zip(t1, t2))
        assert [x.label for x in e1] == [x.label for x in e2]

    def test_shapes_and_label_range(self):
        cfg = SynthConfig(n_train=15, n_test=5, dim_a=6, dim_b=4, n_classes=3, seed=1)
        train_set, test_set = make_synthetic(cfg)
        assert len(train_set) == 15 and len(test_set) == 5
        for ex in train_set + test_set:
            assert ex.a.shape == (6,) and ex.b.shape == (4,)
            assert 0 <= ex.label < 3

    def _single_modality_accuracy(self, cfg, modality):
        train_set, test_set = make_synthetic(cfg)
        def examples(split):
            from scenefuse.classifier import LabeledExample
            return [
                LabeledExample(feature=getattr(ex, modality), label=ex.label) for ex in split
            ]
        model = init_model(getattr(cfg, f"dim_{modality}"), [f"c{i}" for i in range(cfg.n_classes)], seed=0)
        trained, _ = train(
            model,
            examples(train_set),
            TrainConfig(learning_rate=0.5, epochs=60, batch_size=32, seed=1),
        )
        accuracy, _ = evaluate(trained, examples(test_set))
        return accuracy

    def test_additive_single_modality_is_perfect(self):
        cfg = SynthConfig(
            n_train=200, n_test=100, dim_a=8, dim_b=8, n_classes=4,
            interaction="additive", noise_sigma=0.0, seed=7,
        )
        assert self._single_modality_accuracy(cfg, "a") == 1.0

    def test_multiplicative_single_modality_is_chance(self):
        cfg = SynthConfig(
            n_train=600, n_test=500, dim_a=8, dim_b=8, n_classes=4,
            interaction="multiplicative", noise_sigma=0.0, seed=7,
        )
        accuracy = self._single_modality_accuracy(cfg, "a")
        assert abs(accuracy - 0.25) <= 0.1

    def test_multiplicative_labels_come_from_the_pair(self):
        # with sigma=0 the modality vectors are exactly the prototypes, so the
        # prototype indices are recoverable and must satisfy label = (i + j) mod C
        cfg = SynthConfig(
            n_train=50, n_test=10, dim_a=5, dim_b=5, n_classes=4,
            interaction="multiplicative", noise_sigma=0.0, seed=3,
        )
        rng = np.random.default_rng(cfg.seed)
        protos_a = rng.standard_normal((cfg.n_classes, cfg.dim_a))
        protos_b = rng.standard_normal((cfg.n_classes, cfg.dim_b))
        train_set, _ = make_synthetic(cfg)
        for ex in train_set:
            i = int(np.argmin(np.linalg.norm(protos_a - ex.a, axis=1)))
            j = int(np.argmin(np.linalg.norm(protos_b - ex.b, axis=1)))
            assert ex.label == (i + j) % cfg.n_classes


class TestCleaningReport:
    def test_dataclass_equality(self):
        a = CleaningReport(3, 2, 1, 0, {"x": 1})
        b = CleaningReport(3, 2, 1, 0, {"x": 1})
        assert a == b
