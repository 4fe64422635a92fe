"""scikit-learn style wrappers so the bound pipeline composes with Pipeline/clone/get_params."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .arraymodel import ArraySpec, center, prepare, summarize
from .bounds import C0, theorem_bound
from .permsim import mc_ks_distance, simulate_w


def _square(X) -> np.ndarray:
    X = check_array(X, dtype=np.float64)
    if X.shape[0] != X.shape[1] or X.shape[0] < 2:
        raise ValueError(f"expected a square matrix with n >= 2, got shape {X.shape}")
    return X


class HoeffdingCentering(TransformerMixin, BaseEstimator):
    """Double-center a square matrix of cell means: ``c_ij = mu_ij - mu_i. - mu_.j + mu_..``."""

    def fit(self, X, y=None):
        X = _square(X)
        self.row_means_ = X.mean(axis=1)
        self.col_means_ = X.mean(axis=0)
        self.grand_mean_ = float(X.mean())
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "grand_mean_")
        X = _square(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("matrix size differs from the one seen in fit")
        return X - self.row_means_[:, None] - self.col_means_[None, :] + self.grand_mean_


class CombinatorialCLTBound(BaseEstimator):
    """Center and standardize an array, then certify ``sup_z |P(W<=z) - Phi(z)| <= c0 * gamma``.

    ``fit`` accepts an :class:`ArraySpec` or a square real matrix (treated as a
    deterministic array).  After fitting:

    ``array_``     the centered, standardized array
    ``summary_``   its MomentSummary
    ``report_``    the BoundReport
    ``var_w_``     Var(W) of the centered input before scaling
    """

    def __init__(self, c0=C0, n_replicates=10_000, alpha=0.05, random_state=0):
        self.c0 = c0
        self.n_replicates = n_replicates
        self.alpha = alpha
        self.random_state = random_state

    def fit(self, X, y=None):
        a = X if isinstance(X, ArraySpec) else ArraySpec.from_means(_square(X))
        self.var_w_ = summarize(center(a).base).varW
        self.array_, self.summary_ = prepare(a)
        self.report_ = theorem_bound(self.summary_, self.c0)
        self.gamma_ = self.report_.gamma
        self.bound_ = self.report_.bound
        return self

    def sample(self, size=None):
        """Draws of the standardized W from the fitted array."""
        check_is_fitted(self, "array_")
        return simulate_w(self.array_, size or self.n_replicates, self.random_state)

    def monte_carlo(self):
        """Estimated Kolmogorov distance, its DKW radius, and whether it respects the bound."""
        check_is_fitted(self, "array_")
        est = mc_ks_distance(self.array_, self.n_replicates, self.random_state, self.alpha)
        return {
            "ks": est.ks,
            "dkw_eps": est.dkw_eps,
            "bound": self.bound_,
            "within_certificate": bool(est.ks - est.dkw_eps <= self.bound_),
        }
