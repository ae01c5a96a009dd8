"""Forward-only classifiers whose weight spaces the samplers explore.

Two machine kinds: a unit-norm linear separator through the origin
(``sphere_linear``, two classes, prediction [wᵀx > 0]) and a fully connected
rectifier network (``mlp``, argmax over final-layer scores).  Weights live
in a single flat vector so that proposal moves, serialisation, and risk
evaluation never need to know the architecture.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .rng import as_generator

__all__ = [
    "PredictorSpec",
    "WeightVector",
    "weight_count",
    "predict",
    "predict_batch",
    "empirical_risk",
    "random_weights",
    "save_weight_vector",
    "load_weight_vector",
]

SPHERE_LINEAR = "sphere_linear"
MLP = "mlp"
UNIT_SPHERE = "unit_sphere"
UNCONSTRAINED = "unconstrained"


@dataclass(frozen=True)
class PredictorSpec:
    """Architecture description mapping (weights, features) to a class index."""

    kind: str
    input_dim: int
    layer_sizes: tuple = ()
    activation: str = "relu"

    def __post_init__(self):
        if self.kind not in (SPHERE_LINEAR, MLP):
            raise DomainError(f"unknown predictor kind {self.kind!r}")
        if self.input_dim < 1:
            raise DomainError(f"input_dim must be >= 1, got {self.input_dim}")
        object.__setattr__(self, "layer_sizes", tuple(int(n) for n in self.layer_sizes))
        if self.kind == SPHERE_LINEAR:
            if self.layer_sizes:
                raise DomainError("sphere_linear takes no layer_sizes")
        else:
            if not self.layer_sizes:
                raise DomainError("mlp needs at least one layer size")
            if any(n < 1 for n in self.layer_sizes):
                raise DomainError(f"layer sizes must be positive, got {self.layer_sizes}")
        if self.activation != "relu":
            raise DomainError("only the rectifier activation is supported")

    @property
    def class_count(self) -> int:
        return 2 if self.kind == SPHERE_LINEAR else self.layer_sizes[-1]

    @property
    def weight_constraint(self) -> str:
        return UNIT_SPHERE if self.kind == SPHERE_LINEAR else UNCONSTRAINED


@dataclass(slots=True)
class WeightVector:
    """Flat parameter vector, optionally constrained to the unit sphere."""

    values: np.ndarray
    constraint: str = UNCONSTRAINED

    def validate(self) -> "WeightVector":
        if self.constraint not in (UNIT_SPHERE, UNCONSTRAINED):
            raise DomainError(f"unknown constraint {self.constraint!r}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise DomainError("weight values must be a flat vector")
        if self.constraint == UNIT_SPHERE and abs(np.linalg.norm(self.values) - 1.0) > 1e-10:
            raise DomainError("unit_sphere weights must have norm 1 within 1e-10")
        return self


def weight_count(spec: PredictorSpec) -> int:
    """Exact number of parameters for the architecture."""
    if spec.kind == SPHERE_LINEAR:
        return spec.input_dim
    total = 0
    fan_in = spec.input_dim
    for fan_out in spec.layer_sizes:
        total += (fan_in + 1) * fan_out
        fan_in = fan_out
    return total


def _check_weights(spec: PredictorSpec, w: WeightVector):
    expected = weight_count(spec)
    if w.values.shape != (expected,):
        raise DomainError(f"weight vector has shape {w.values.shape}, spec needs ({expected},)")


def _mlp_layers(spec: PredictorSpec, w: WeightVector):
    """Yield (W, b) per layer from the flat vector: W row-major then b, in layer order."""
    flat = w.values
    pos = 0
    fan_in = spec.input_dim
    for fan_out in spec.layer_sizes:
        n_w = fan_in * fan_out
        W = flat[pos : pos + n_w].reshape(fan_out, fan_in)
        pos += n_w
        b = flat[pos : pos + fan_out]
        pos += fan_out
        yield W, b
        fan_in = fan_out


def predict_batch(spec: PredictorSpec, w: WeightVector, X: np.ndarray) -> np.ndarray:
    """Class indices for a batch of feature rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise DomainError(f"features have shape {X.shape}, spec needs (n, {spec.input_dim})")
    _check_weights(spec, w)
    if spec.kind == SPHERE_LINEAR:
        return (X @ w.values > 0.0).astype(np.int64)
    h = X
    layers = list(_mlp_layers(spec, w))
    for W, b in layers[:-1]:
        h = np.maximum(h @ W.T + b, 0.0)
    W, b = layers[-1]
    scores = h @ W.T + b
    # np.argmax returns the lowest index on ties, which is the tie-break rule
    return np.argmax(scores, axis=1).astype(np.int64)


def predict(spec: PredictorSpec, w: WeightVector, x: np.ndarray) -> int:
    """Class index for a single feature vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.input_dim,):
        raise DomainError(f"feature vector has shape {x.shape}, spec needs ({spec.input_dim},)")
    return int(predict_batch(spec, w, x[None, :])[0])


def empirical_risk(spec: PredictorSpec, w: WeightVector, data, subset=None) -> float:
    """Fraction of misclassified examples, an exact k/n in floating point."""
    features, labels = data.features, data.labels
    if subset is not None:
        subset = np.asarray(subset, dtype=np.intp)
        if subset.size == 0:
            raise DomainError("empty evaluation set")
        features = features[subset]
        labels = labels[subset]
    if len(labels) == 0:
        raise DomainError("empty evaluation set")
    wrong = int(np.count_nonzero(predict_batch(spec, w, features) != labels))
    return wrong / len(labels)


def random_weights(spec: PredictorSpec, scale: float, seed) -> WeightVector:
    """Gaussian weights with per-entry standard deviation ``scale``.

    sphere_linear vectors are renormalised to the unit sphere, so there the
    scale only fixes the (irrelevant) pre-normalisation magnitude.
    """
    if scale <= 0:
        raise DomainError(f"scale must be > 0, got {scale}")
    rng = as_generator(seed)
    values = rng.normal(0.0, scale, size=weight_count(spec))
    if spec.kind == SPHERE_LINEAR:
        values = values / np.linalg.norm(values)
        return WeightVector(values, UNIT_SPHERE).validate()
    return WeightVector(values, UNCONSTRAINED).validate()


def save_weight_vector(w: WeightVector, path):
    """Write the flat vector as little-endian float64 with an 8-byte length header."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", w.values.shape[0]))
        fh.write(np.asarray(w.values, dtype="<f8").tobytes())


def load_weight_vector(path, constraint: str = UNCONSTRAINED) -> WeightVector:
    """Read a vector written by :func:`save_weight_vector`."""
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise DomainError(f"{path}: truncated length header")
        (n,) = struct.unpack("<Q", header)
        payload = fh.read()
    if len(payload) != 8 * n:
        raise DomainError(f"{path}: payload holds {len(payload)} bytes, header promises {8 * n}")
    values = np.frombuffer(payload, dtype="<f8").astype(float)
    return WeightVector(values, constraint).validate()
