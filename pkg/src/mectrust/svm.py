"""Solver for the proximal soft-margin SVM subproblem.

Every training step in the package reduces to

    minimize_w  (a/2) ||w - c||^2 + C * sum_i max(0, 1 - y_i x_i . w) + offset

with ``a >= 1``. The plain SVM is ``a = 1, c = 0``; the ADMM node update folds
its quadratic coupling terms into ``a`` and ``c``. The problem is solved by
dual coordinate descent, which yields a duality-gap certificate on the
relative objective error at every epoch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit


class ConvergenceError(RuntimeError):
    """The subproblem solver ran out of epochs before reaching its tolerance."""

    def __init__(self, message, gap=float("nan"), node=None, iteration=None):
        super().__init__(message)
        self.gap = gap
        self.node = node
        self.iteration = iteration


@dataclass
class ProxSvmResult:
    w: np.ndarray
    alpha: np.ndarray
    objective: float
    gap: float
    epochs: int


@njit(cache=True, nogil=True)
def _dual_cd(X, y, C, a, c, offset, alpha, tol, max_epochs, seed):
    n, p = X.shape
    w = c.copy()
    for i in range(n):
        if alpha[i] != 0.0:
            w += (alpha[i] * y[i] / a) * X[i]
    qii = np.empty(n)
    for i in range(n):
        qii[i] = (X[i] @ X[i]) / a
    order = np.arange(n)
    state = np.uint64(seed) * np.uint64(6364136223846793005) + np.uint64(1442695040888963407)
    primal = 0.0
    gap = np.inf
    epoch = 0
    while epoch < max_epochs:
        # Fisher-Yates shuffle driven by a 64-bit LCG
        for i in range(n - 1, 0, -1):
            state = state * np.uint64(6364136223846793005) + np.uint64(1442695040888963407)
            j = np.int64((state >> np.uint64(33)) % np.uint64(i + 1))
            order[i], order[j] = order[j], order[i]
        for k in range(n):
            i = order[k]
            g = y[i] * (w @ X[i]) - 1.0
            if qii[i] > 0.0:
                new = alpha[i] - g / qii[i]
            else:
                new = C if g < 0.0 else 0.0
            if new < 0.0:
                new = 0.0
            elif new > C:
                new = C
            delta = new - alpha[i]
            if delta != 0.0:
                w += (delta * y[i] / a) * X[i]
                alpha[i] = new
        epoch += 1

        # recompute w from alpha to keep the certificate exact
        w = c.copy()
        for i in range(n):
            if alpha[i] != 0.0:
                w += (alpha[i] * y[i] / a) * X[i]
        diff = w - c
        quad = 0.5 * a * (diff @ diff)
        hinge = 0.0
        lin = 0.0
        for i in range(n):
            m = y[i] * (w @ X[i])
            if m < 1.0:
                hinge += 1.0 - m
            lin += alpha[i] * (1.0 - y[i] * (c @ X[i]))
        primal = quad + C * hinge + offset
        dual = lin - quad + offset
        gap = max(primal - dual, 0.0)
        if gap <= tol * primal:
            break
    return w, alpha, primal, gap, epoch


def solve_prox_svm(X, y, C, a=1.0, center=None, offset=0.0, alpha=None,
                   tol=1e-8, max_epochs=10000, seed=0) -> ProxSvmResult:
    """Minimize ``(a/2)||w - center||^2 + C * sum(hinge) + offset``.

    ``X`` must already carry the bias column if one is wanted. ``alpha`` is a
    warm-start dual vector in ``[0, C]``. ``tol`` bounds the relative duality gap,
    which upper-bounds the relative objective error.

    Raises ``ConvergenceError`` when ``max_epochs`` passes do not reach ``tol``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    p = X.shape[1] if X.ndim == 2 else (0 if center is None else len(center))
    center = np.zeros(p) if center is None else np.ascontiguousarray(center, dtype=np.float64)
    if a <= 0:
        raise ValueError("quadratic weight must be positive")
    if n == 0:
        return ProxSvmResult(center.copy(), np.zeros(0), float(offset), 0.0, 0)
    X = X.reshape(n, -1)
    alpha = np.zeros(n) if alpha is None else np.clip(np.array(alpha, dtype=np.float64), 0.0, C)
    w, alpha, primal, gap, epochs = _dual_cd(
        X, y, float(C), float(a), center, float(offset), alpha, float(tol), int(max_epochs), int(seed)
    )
    if gap > tol * primal:
        raise ConvergenceError(
            f"SVM subproblem stopped after {epochs} epochs with relative gap "
            f"{gap / max(primal, 1e-300):.3e} > {tol:.1e}",
            gap=gap / max(primal, 1e-300),
        )
    return ProxSvmResult(w, alpha, primal, gap, epochs)


def train_svm(X, y, C, tol=1e-8, max_epochs=10000) -> ProxSvmResult:
    """Plain soft-margin SVM: ``0.5||w||^2 + C * sum(hinge)`` on pre-augmented ``X``."""
    return solve_prox_svm(X, y, C, tol=tol, max_epochs=max_epochs)
