"""Scikit-learn estimator wrapping the robust-SVM trainer."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset, set_radii
from .model import Hyperparams
from .screening import dynamic_screen
from .solver import solve

__all__ = ["RobustSVC"]


class RobustSVC(BaseEstimator, ClassifierMixin):
    """Linear classifier that is robust to bounded feature noise.

    Minimizes 0.5 ||w||^2 + C * sum_i of the worst-case hinge loss over an
    l2 ball of radius `rho` around each training sample. With rho = 0 this
    is the classical soft-margin linear SVM (without intercept). Training
    maximizes the box-constrained dual; with `screening` enabled, samples
    whose dual variables are certified to sit on the box boundary are
    eliminated on the fly, which typically speeds up training on larger
    datasets without changing the solution.

    Parameters
    ----------
    C : float, regularization strength.
    rho : float or array-like of shape (n_samples,), uncertainty radii.
    tol : float, duality-gap tolerance certifying convergence.
    max_epochs : int, gradient-step budget.
    screening : bool, eliminate provably inactive/saturated samples during
        training.
    f_min : int, stop screening once at most this many samples remain free.
    screen_every : int, epochs between screening passes.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,), learned weights.
    classes_ : ndarray of shape (2,), class labels (second one is positive).
    gap_ : float, final duality gap.
    converged_ : bool, whether gap_ <= tol was certified.
    n_iter_ : int, accepted gradient steps.
    partition_, trace_ : screening outcome (only when screening=True).
    """

    def __init__(
        self,
        C: float = 1.0,
        rho=0.0,
        tol: float = 1e-6,
        max_epochs: int = 100_000,
        screening: bool = True,
        f_min: int = 0,
        screen_every: int = 10,
    ):
        self.C = C
        self.rho = rho
        self.tol = tol
        self.max_epochs = max_epochs
        self.screening = screening
        self.f_min = f_min
        self.screen_every = screen_every

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] != 2:
            raise ValueError(
                f"this classifier is binary, got {self.classes_.shape[0]} classes"
            )
        signed = np.where(y == self.classes_[1], 1.0, -1.0)
        ds = set_radii(Dataset(X, signed, np.zeros(X.shape[0])), self.rho)
        hp = Hyperparams(C=self.C, gap_tol=self.tol, max_epochs=self.max_epochs)
        if self.screening:
            result = dynamic_screen(
                ds, hp, f_min=self.f_min, screen_every=self.screen_every
            )
            report = result.report
            self.partition_ = result.partition
            self.trace_ = result.trace
        else:
            report = solve(ds, hp)
        self.coef_ = report.iterate.w
        self.dual_coef_ = report.iterate.alpha
        self.gap_ = report.iterate.gap
        self.converged_ = report.converged
        self.n_iter_ = report.epochs
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.coef_.shape[0]:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.coef_.shape[0]}"
            )
        return X @ self.coef_

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return self.classes_[(scores >= 0).astype(int)]
