"""Dataset assembly: manifests, corpus cleaning, joins, and synthetic benchmarks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .classifier import LabeledExample
from .text import TranscriptionRecord, filter_by_confidence

SPLITS = ("train", "test")
INTERACTIONS = ("additive", "multiplicative")


@dataclass(frozen=True)
class ManifestRow:
    image_id: str
    label: str
    split: str

    def __post_init__(self):
        if not self.image_id:
            raise ValueError("image_id must be non-empty")
        if not self.label:
            raise ValueError("label must be non-empty")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")


@dataclass(frozen=True)
class Manifest:
    rows: tuple[ManifestRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        seen: set[str] = set()
        for row in self.rows:
            if row.image_id in seen:
                raise ValueError(f"duplicate image_id {row.image_id!r} in manifest")
            seen.add(row.image_id)

    def ids(self) -> list[str]:
        return [row.image_id for row in self.rows]

    def split_rows(self, split: str) -> list[ManifestRow]:
        return [row for row in self.rows if row.split == split]

    def class_names(self) -> list[str]:
        return sorted({row.label for row in self.rows})


@dataclass(frozen=True)
class VqaRecord:
    image_id: str
    question: str
    answer: str

    def __post_init__(self):
        if not self.image_id or not self.question or not self.answer:
            raise ValueError("image_id, question and answer must all be non-empty")


@dataclass(frozen=True)
class CleaningReport:
    total_words: int
    kept_words: int
    removed_words: int
    emptied_records: int
    removed_per_image: dict[str, int] = field(default_factory=dict)


def clean_corpus(
    transcriptions: Mapping[str, TranscriptionRecord], threshold: float
) -> tuple[dict[str, TranscriptionRecord], CleaningReport]:
    """Confidence-filter every record; records that empty out are kept and counted."""
    cleaned: dict[str, TranscriptionRecord] = {}
    removed_per_image: dict[str, int] = {}
    total = kept = emptied = 0
    for image_id, record in transcriptions.items():
        out = filter_by_confidence(record, threshold)
        cleaned[image_id] = out
        total += len(record.words)
        kept += len(out.words)
        removed_per_image[image_id] = len(record.words) - len(out.words)
        if record.words and not out.words:
            emptied += 1
    report = CleaningReport(
        total_words=total,
        kept_words=kept,
        removed_words=total - kept,
        emptied_records=emptied,
        removed_per_image=removed_per_image,
    )
    return cleaned, report


def join_labeled(
    manifest: Manifest,
    features: Mapping[str, np.ndarray],
    split: str,
    class_names: Sequence[str] | None = None,
) -> list[LabeledExample]:
    """Line up one split's manifest rows with their feature vectors.

    Every row must have a feature vector of consistent dimension; missing ids
    are reported together.
    """
    rows = manifest.split_rows(split)
    if not rows:
        raise ValueError(f"manifest has no rows in split {split!r}")
    missing = [row.image_id for row in rows if row.image_id not in features]
    if missing:
        raise ValueError(f"manifest ids missing from features: {', '.join(missing)}")
    names = list(class_names) if class_names is not None else manifest.class_names()
    index = {name: i for i, name in enumerate(names)}
    unknown = sorted({row.label for row in rows} - set(index))
    if unknown:
        raise ValueError(f"labels missing from class set: {', '.join(unknown)}")
    dim = next(iter(features.values())).shape[0] if features else 0
    examples = []
    for row in rows:
        vec = np.asarray(features[row.image_id], dtype=float)
        if vec.shape != (dim,):
            raise ValueError(
                f"feature for {row.image_id!r} has dim {vec.size}, expected {dim}"
            )
        examples.append(LabeledExample(feature=vec, label=index[row.label]))
    return examples


@dataclass(frozen=True)
class SynthConfig:
    n_train: int
    n_test: int
    dim_a: int
    dim_b: int
    n_classes: int
    interaction: str = "multiplicative"
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("n_train and n_test must be >= 1")
        if self.dim_a < 1 or self.dim_b < 1:
            raise ValueError("dim_a and dim_b must be >= 1")
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        if self.interaction not in INTERACTIONS:
            raise ValueError(f"interaction must be one of {INTERACTIONS}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")


@dataclass(frozen=True)
class PairedExample:
    a: np.ndarray
    b: np.ndarray
    label: int


def make_synthetic(cfg: SynthConfig) -> tuple[list[PairedExample], list[PairedExample]]:
    """Two-modality benchmark around per-class Gaussian prototypes.

    additive: both modalities carry the label, so either alone suffices.
    multiplicative: prototype indices i, j are drawn independently and the
    label is (i + j) mod n_classes, so each modality alone is uninformative
    and only their pairing decodes the class.
    """
    rng = np.random.default_rng(cfg.seed)
    protos_a = rng.standard_normal((cfg.n_classes, cfg.dim_a))
    protos_b = rng.standard_normal((cfg.n_classes, cfg.dim_b))

    def draw(count: int) -> list[PairedExample]:
        if cfg.interaction == "additive":
            labels = rng.integers(0, cfg.n_classes, size=count)
            ia, ib = labels, labels
        else:
            ia = rng.integers(0, cfg.n_classes, size=count)
            ib = rng.integers(0, cfg.n_classes, size=count)
            labels = (ia + ib) % cfg.n_classes
        a = protos_a[ia] + cfg.noise_sigma * rng.standard_normal((count, cfg.dim_a))
        b = protos_b[ib] + cfg.noise_sigma * rng.standard_normal((count, cfg.dim_b))
        return [PairedExample(a=a[i], b=b[i], label=int(labels[i])) for i in range(count)]

    return draw(cfg.n_train), draw(cfg.n_test)
