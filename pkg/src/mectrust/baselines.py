"""Reference variants: one pooled cloud model, and isolated per-node models."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .model import SvmParams, TrustModel, augment
from .svm import train_svm

GLOBAL = "global"
LOCAL = "local"


def train_global(manifest, svm: SvmParams | None = None, tol=1e-8, max_epochs=10000):
    """Pool every node's training rows in the cloud and fit one SVM.

    Returns ``(model, rounds)``; ``rounds`` counts one transmission per pooled
    training record.
    """
    svm = svm or SvmParams()
    X, y = manifest.pooled_train()
    if len(y) == 0:
        raise ValueError("no training samples on any node")
    res = train_svm(augment(X), y.astype(float), svm.cost(len(y)), tol=tol, max_epochs=max_epochs)
    return TrustModel(res.w), int(len(y))


def _fit_node(node, svm, tol, max_epochs, dim):
    if node.n_train == 0:
        return TrustModel(np.zeros(dim + 1))
    res = train_svm(augment(node.X_train), node.y_train.astype(float), svm.cost(node.n_train),
                    tol=tol, max_epochs=max_epochs)
    return TrustModel(res.w)


def train_local(manifest, svm: SvmParams | None = None, tol=1e-8, max_epochs=10000, workers=1):
    """Fit each node on its own data only; empty nodes get the zero model.

    Returns ``(models, rounds)`` with ``rounds = 0``.
    """
    svm = svm or SvmParams()
    fit = lambda n: _fit_node(n, svm, tol, max_epochs, manifest.feature_dim)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            models = list(pool.map(fit, manifest.nodes))
    else:
        models = [fit(n) for n in manifest.nodes]
    return models, 0
