"""Linear soft-margin SVM for FP/DP path images, trained from scratch.

The dual problem

    min_a  1/2 a^T Q a - sum(a)   s.t.  0 <= a_i <= C,  y^T a = 0,
    Q_ij = y_i y_j <x_i, x_j>

is solved by SMO with second-order working-set selection. Training stops once
the maximal KKT violation drops below ``tol`` or after ``max_passes * n``
pair updates.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from . import _backend

POSITIVE = "FP"
NEGATIVE = "DP"
MODEL_MAGIC = "# advpath linear-svm v1"


class SingleClassData(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    C: float = 1.0
    tol: float = 1e-3
    max_passes: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.C <= 0 or self.tol <= 0 or self.max_passes < 1:
            raise ValueError("need C > 0, tol > 0, max_passes >= 1")


@dataclass(frozen=True)
class DualState:
    alpha: np.ndarray
    grad: np.ndarray
    y: np.ndarray
    iterations: int
    kkt_violation: float


@dataclass(frozen=True, eq=False)
class LabeledImageSet:
    """Feature rows with FP/DP labels and per-row provenance strings."""

    X: np.ndarray
    labels: tuple
    provenance: tuple = ()
    source: str = ""

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise DimensionMismatch("feature matrix must be 2-D")
        labels = tuple(str(v) for v in self.labels)
        if len(labels) != X.shape[0]:
            raise DimensionMismatch("one label per feature row required")
        bad = set(labels) - {POSITIVE, NEGATIVE}
        if bad:
            raise ValueError(f"labels must be FP or DP, got {sorted(bad)}")
        prov = tuple(self.provenance) or tuple(str(i) for i in range(len(labels)))
        if len(prov) != len(labels):
            raise ValueError("one provenance entry per row required")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "provenance", prov)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def y(self) -> np.ndarray:
        return np.array([1.0 if v == POSITIVE else -1.0 for v in self.labels])

    def subset(self, idx) -> "LabeledImageSet":
        idx = list(idx)
        return LabeledImageSet(
            self.X[idx].reshape(len(idx), self.X.shape[1]),
            tuple(self.labels[i] for i in idx),
            tuple(self.provenance[i] for i in idx),
            self.source,
        )

    def concat(self, other: "LabeledImageSet") -> "LabeledImageSet":
        return LabeledImageSet(
            np.vstack([self.X, other.X]),
            self.labels + other.labels,
            self.provenance + other.provenance,
            self.source,
        )

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update("\n".join(self.labels).encode())
        return h.hexdigest()


class Classifier(Protocol):
    """What the identification pipeline needs from an image classifier."""

    def decision_function(self, X: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    weights: np.ndarray
    bias: float
    hyperparams: Hyperparams = Hyperparams()
    train_hash: str = ""
    dual: DualState | None = field(default=None, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise DimensionMismatch("weights must be a vector")
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias)):
            raise ValueError("model has non-finite parameters")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.dim:
            raise DimensionMismatch(f"expected {self.dim} features, got {X.shape[1]}")
        return X @ self.weights + self.bias

    def same_parameters(self, other: "ClassifierModel") -> bool:
        return (
            self.bias == other.bias
            and self.hyperparams == other.hyperparams
            and self.train_hash == other.train_hash
            and np.array_equal(self.weights, other.weights)
        )


def kkt_violation(alpha: np.ndarray, grad: np.ndarray, y: np.ndarray, C: float) -> float:
    """max over I_up of -y*G minus min over I_low of -y*G (0 when optimal)."""
    pos = y > 0
    up = (pos & (alpha < C)) | (~pos & (alpha > 0))
    low = (pos & (alpha > 0)) | (~pos & (alpha < C))
    if not up.any() or not low.any():
        return 0.0
    m = -y * grad
    return float(max(m[up].max() - m[low].min(), 0.0))


def _bias(alpha, grad, y, C) -> float:
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = yg[free].mean()
    else:
        at_upper = alpha >= C
        ub_mask = (at_upper & (y < 0)) | (~at_upper & (y > 0))
        lb_mask = ~ub_mask
        ub = yg[ub_mask].min() if ub_mask.any() else np.inf
        lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
        rho = (ub + lb) / 2 if np.isfinite(ub) and np.isfinite(lb) else (
            ub if np.isfinite(ub) else lb
        )
    return float(-rho)


def train(data: LabeledImageSet, hyperparams: Hyperparams = Hyperparams()) -> ClassifierModel:
    n = len(data)
    if n < 2 or len(set(data.labels)) < 2:
        raise SingleClassData("training needs examples of both FP and DP")
    # the seed fixes the order examples are visited in, which settles ties in pair selection
    perm = np.random.default_rng(hyperparams.seed).permutation(n)
    X = np.ascontiguousarray(data.X[perm])
    y = np.ascontiguousarray(data.y[perm])
    K = np.ascontiguousarray(X @ X.T)
    alpha_p, grad_p, iters = _backend.smo_solve(
        K, y, float(hyperparams.C), float(hyperparams.tol), int(hyperparams.max_passes * n)
    )
    alpha_p = np.asarray(alpha_p)
    grad_p = np.asarray(grad_p)
    w = X.T @ (alpha_p * y)
    b = _bias(alpha_p, grad_p, y, hyperparams.C)

    inv = np.empty(n, dtype=int)
    inv[perm] = np.arange(n)
    dual = DualState(
        alpha=alpha_p[inv],
        grad=grad_p[inv],
        y=y[inv],
        iterations=int(iters),
        kkt_violation=kkt_violation(alpha_p, grad_p, y, hyperparams.C),
    )
    return ClassifierModel(w, b, hyperparams, data.source or data.content_hash(), dual)


def predict(model: ClassifierModel, x: np.ndarray) -> tuple[str, float]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("predict takes a single feature vector")
    score = float(model.decision_function(x)[0])
    return (POSITIVE if score > 0 else NEGATIVE), score


def predict_many(model: Classifier, X: np.ndarray) -> tuple[list, np.ndarray]:
    scores = np.asarray(model.decision_function(X), dtype=np.float64)
    return [POSITIVE if s > 0 else NEGATIVE for s in scores], scores


def split(data: LabeledImageSet, train_fraction: float = 0.7, seed: int = 0):
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    n = len(data)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(n * train_fraction))
    return data.subset(order[:n_train]), data.subset(order[n_train:])


# -- model file --------------------------------------------------------------

def dumps_model(model: ClassifierModel) -> str:
    hp = model.hyperparams
    lines = [
        MODEL_MAGIC,
        f"dim={model.dim}",
        f"C={hp.C!r}",
        f"tol={hp.tol!r}",
        f"max_passes={hp.max_passes}",
        f"seed={hp.seed}",
        f"train_hash={model.train_hash}",
        f"bias={model.bias!r}",
        "weights:",
    ]
    lines.extend(repr(float(v)) for v in model.weights)
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> ClassifierModel:
    lines = text.splitlines()
    if not lines or lines[0] != MODEL_MAGIC:
        raise ModelFormatError("missing model header")
    try:
        sep = lines.index("weights:")
    except ValueError:
        raise ModelFormatError("missing weights section") from None
    header = {}
    for line in lines[1:sep]:
        key, eq, value = line.partition("=")
        if not eq:
            raise ModelFormatError(f"bad header line {line!r}")
        header[key] = value
    try:
        dim = int(header["dim"])
        hp = Hyperparams(
            C=float(header["C"]),
            tol=float(header["tol"]),
            max_passes=int(header["max_passes"]),
            seed=int(header["seed"]),
        )
        weights = np.array([float(v) for v in lines[sep + 1:]])
        bias = float(header["bias"])
    except (KeyError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from None
    if weights.shape[0] != dim:
        raise ModelFormatError(f"header says {dim} weights, found {weights.shape[0]}")
    return ClassifierModel(weights, bias, hp, header.get("train_hash", ""))


def save_model(path, model: ClassifierModel) -> None:
    from .storage import atomic_write_text

    atomic_write_text(path, dumps_model(model))


def load_model(path) -> ClassifierModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
