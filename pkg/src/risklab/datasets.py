"""Dataset generation, IDX ingestion, teacher relabeling, and splits."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IdxDimensionError, IdxMagicError, IdxTruncatedError
from .perceptron import GaussianClassSpec
from .predictors import PredictorSpec, WeightVector, predict_batch
from .rng import as_generator

__all__ = [
    "LabelledDataset",
    "gen_gaussian_pair",
    "load_idx",
    "write_idx",
    "teacher_relabel",
    "split",
    "dataset_to_csv",
    "dataset_from_csv",
]

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass
class LabelledDataset:
    """Feature matrix with integer class labels in [0, class_count)."""

    features: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise DomainError("features must be a non-empty n x p matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise DomainError("labels must be one integer per feature row")
        if not np.isfinite(self.features).all():
            raise DomainError("feature rows must be finite")
        if self.class_count < 1:
            raise DomainError("class_count must be >= 1")
        if self.labels.min() < 0 or self.labels.max() >= self.class_count:
            raise DomainError("labels out of range [0, class_count)")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "LabelledDataset":
        idx = np.asarray(indices)
        return LabelledDataset(self.features[idx], self.labels[idx], self.class_count)


def gen_gaussian_pair(spec: GaussianClassSpec, n: int, seed) -> LabelledDataset:
    """Draw n examples of the two-Gaussian pair: y uniform, x = (2y−1)·Δ·t + N(0, I)."""
    if n < 1:
        raise DomainError(f"need n >= 1 examples, got {n}")
    rng = as_generator(seed)
    labels = rng.integers(0, 2, size=n)
    signs = 2.0 * labels - 1.0
    features = signs[:, None] * (spec.delta * spec.t)[None, :] + rng.standard_normal((n, spec.p))
    return LabelledDataset(features, labels, class_count=2)


def _read_exact(path, header_fmt):
    with open(path, "rb") as fh:
        head_size = struct.calcsize(header_fmt)
        head = fh.read(head_size)
        if len(head) != head_size:
            raise IdxTruncatedError(f"{path}: header truncated at {len(head)} bytes")
        payload = fh.read()
    return struct.unpack(header_fmt, head), payload


def load_idx(image_path, label_path, class_count: int | None = None) -> LabelledDataset:
    """Parse big-endian IDX image/label files into a dataset.

    Pixels are scaled byte/255 into [0, 1] and images flattened row-major.
    """
    (img_magic, n_img, rows, cols), img_payload = _read_exact(image_path, ">IIII")
    if img_magic != IDX_IMAGE_MAGIC:
        raise IdxMagicError(
            f"{image_path}: magic 0x{img_magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}"
        )
    expected = n_img * rows * cols
    if len(img_payload) != expected:
        raise IdxTruncatedError(
            f"{image_path}: payload holds {len(img_payload)} bytes, header promises {expected}"
        )
    (lbl_magic, n_lbl), lbl_payload = _read_exact(label_path, ">II")
    if lbl_magic != IDX_LABEL_MAGIC:
        raise IdxMagicError(
            f"{label_path}: magic 0x{lbl_magic:08x}, expected 0x{IDX_LABEL_MAGIC:08x}"
        )
    if n_lbl != n_img:
        raise IdxDimensionError(f"{n_img} images but {n_lbl} labels")
    if len(lbl_payload) != n_lbl:
        raise IdxTruncatedError(
            f"{label_path}: payload holds {len(lbl_payload)} bytes, header promises {n_lbl}"
        )
    pixels = np.frombuffer(img_payload, dtype=np.uint8).reshape(n_img, rows * cols)
    features = pixels.astype(float) / 255.0
    labels = np.frombuffer(lbl_payload, dtype=np.uint8).astype(np.int64)
    if class_count is None:
        class_count = int(labels.max()) + 1
    return LabelledDataset(features, labels, class_count)


def write_idx(data: LabelledDataset, image_path, label_path, rows: int, cols: int):
    """Write a dataset with features in [0, 1] back to IDX byte files.

    Inverse of :func:`load_idx` for byte-derived features (values k/255
    round-trip bit-exactly); other floats are quantised to the nearest byte.
    """
    if rows * cols != data.feature_dim:
        raise DomainError(f"rows*cols = {rows * cols} must equal feature_dim = {data.feature_dim}")
    pixels = np.clip(np.rint(data.features * 255.0), 0, 255).astype(np.uint8)
    with open(image_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, data.n, rows, cols))
        fh.write(pixels.tobytes())
    with open(label_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABEL_MAGIC, data.n))
        fh.write(data.labels.astype(np.uint8).tobytes())


def teacher_relabel(data: LabelledDataset, spec: PredictorSpec, w_star: WeightVector) -> LabelledDataset:
    """Replace the labels with the teacher's own predictions.

    The resulting task is realisable by construction: the teacher weights
    achieve empirical risk exactly zero on it.
    """
    labels = predict_batch(spec, w_star, data.features)
    return LabelledDataset(data.features.copy(), labels, class_count=spec.class_count)


def split(data: LabelledDataset, fraction: float, seed) -> tuple[LabelledDataset, LabelledDataset]:
    """Disjoint random partition into (⌈fraction·n⌉, rest)."""
    if not 0.0 < fraction < 1.0:
        raise DomainError(f"fraction must lie in (0, 1), got {fraction}")
    rng = as_generator(seed)
    k = int(np.ceil(fraction * data.n))
    perm = rng.permutation(data.n)
    return data.subset(perm[:k]), data.subset(perm[k:])


def dataset_to_csv(data: LabelledDataset, path):
    """CSV export with header ``label,f0,f1,...`` and 17-significant-digit floats."""
    with open(path, "w", newline="") as fh:
        fh.write("label," + ",".join(f"f{j}" for j in range(data.feature_dim)) + "\n")
        for label, row in zip(data.labels, data.features):
            fh.write(str(int(label)) + "," + ",".join(f"{v:.17g}" for v in row) + "\n")


def dataset_from_csv(path, class_count: int | None = None) -> LabelledDataset:
    """Read a CSV written by :func:`dataset_to_csv`."""
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip().split(",")
        if not header or header[0] != "label":
            raise DomainError(f"{path}: expected a 'label,f0,...' header, got {header[:3]}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if not rows:
        raise DomainError(f"{path}: no data rows")
    labels = np.array([int(r[0]) for r in rows], dtype=np.int64)
    features = np.array([[float(v) for v in r[1:]] for r in rows], dtype=float)
    if class_count is None:
        class_count = int(labels.max()) + 1
    return LabelledDataset(features, labels, class_count)
