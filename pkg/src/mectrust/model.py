"""Linear trust predictor and its soft-margin SVM objective.

A model is a weight vector of length ``d + 1``; the last entry multiplies a
constant-1 feature appended to every sample, so it acts as a bias. The bias
weight is regularized like every other weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BENIGN = 1
HARMFUL = -1


@dataclass
class SvmParams:
    """Hinge cost. ``C=None`` means ``1/n`` for a training set of size ``n``."""

    C: float | None = None

    def __post_init__(self):
        if self.C is not None and not self.C > 0:
            raise ValueError(f"SVM cost C must be positive, got {self.C}")

    def cost(self, n: int) -> float:
        if self.C is not None:
            return float(self.C)
        return 1.0 / n if n > 0 else 1.0


@dataclass
class TrustModel:
    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if not np.all(np.isfinite(self.w)):
            raise ValueError("model weights must be finite")

    @property
    def feature_dim(self) -> int:
        return self.w.shape[0] - 1

    def score(self, x):
        return score(self, x)

    def classify(self, x):
        return classify(self, x)

    @classmethod
    def zeros(cls, feature_dim: int) -> TrustModel:
        return cls(np.zeros(feature_dim + 1))


def augment(X) -> np.ndarray:
    """Append the constant-1 bias feature to each row."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        return np.append(X, 1.0)
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _weights(model) -> np.ndarray:
    return np.asarray(getattr(model, "w", model), dtype=float)


def score(model, x):
    """Prior trust value ``w . [x; 1]`` for one sample or a batch of rows."""
    w = _weights(model)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] + 1 != w.shape[0]:
        raise ValueError(
            f"feature dimension {x.shape[-1]} does not match model dimension {w.shape[0]}"
        )
    return augment(x) @ w


def classify(model, x):
    """+1 (benign) when the score is strictly positive, else -1 (harmful)."""
    s = score(model, x)
    return np.where(s > 0, BENIGN, HARMFUL) if np.ndim(s) else (BENIGN if s > 0 else HARMFUL)


def hinge_sum(w, X, y) -> float:
    if len(y) == 0:
        return 0.0
    margins = y * (augment(X) @ w)
    return float(np.maximum(0.0, 1.0 - margins).sum())


def local_objective(model, X, y, params: SvmParams | None = None) -> float:
    """``0.5 ||w||^2 + C * sum(hinge)`` over the samples ``(X, y)``."""
    w = _weights(model)
    params = params or SvmParams()
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        return 0.5 * float(w @ w)
    return 0.5 * float(w @ w) + params.cost(len(y)) * hinge_sum(w, X, y)
