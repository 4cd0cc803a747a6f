"""Closed-form quantities of the robust-SVM primal/dual pair.

The classifier minimizes

    P(w) = 0.5 ||w||^2 + C * sum_i [1 - y_i <w, x_i> + rho_i ||w||]_+

where each hinge term is the worst case of the usual hinge loss over an
l2 perturbation ball of radius rho_i around sample i. Its box-constrained
dual is

    D(alpha) = 1' alpha - 0.5 [ ||d|| - s ]_+^2,   alpha in [0, C]^n

with the aggregates d = sum_i alpha_i y_i x_i and s = sum_i alpha_i rho_i.
A primal point is recovered from any feasible alpha, and the difference
P - D >= 0 certifies how far the pair is from optimal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, Sample

__all__ = [
    "GAP_FLOOR",
    "GapConsistencyError",
    "Hyperparams",
    "DualIterate",
    "Margin",
    "KKTReport",
    "robust_loss",
    "robust_losses",
    "primal_objective",
    "dual_aggregates",
    "dual_objective",
    "primal_from_dual",
    "evaluate_iterate",
    "duality_gap",
    "margin",
    "margins",
    "kkt_residuals",
]

# Gaps in [GAP_FLOOR, 0) are floating-point jitter and clamp to 0; anything
# below GAP_FLOOR indicates a genuine primal/dual inconsistency.
GAP_FLOOR = -1e-9


class GapConsistencyError(RuntimeError):
    """The computed duality gap fell below the negative-jitter floor."""


@dataclass(frozen=True)
class Hyperparams:
    """Training hyperparameters: regularization C, gap tolerance, epoch cap."""

    C: float = 1.0
    gap_tol: float = 1e-6
    max_epochs: int = 100_000

    def __post_init__(self):
        if not (self.C > 0):
            raise ValueError(f"C must be positive, got {self.C}")
        if not (self.gap_tol > 0):
            raise ValueError(f"gap_tol must be positive, got {self.gap_tol}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")


@dataclass(frozen=True)
class DualIterate:
    """A feasible dual vector with its cached aggregates and certificates."""

    alpha: np.ndarray
    d: np.ndarray
    s: float
    w: np.ndarray
    dual_value: float
    primal_value: float
    gap: float


@dataclass(frozen=True)
class Margin:
    """Worst-case functional margin psi = y <w, x> - rho ||w||."""

    psi: float


@dataclass(frozen=True)
class KKTReport:
    """Per-sample violations of the optimality case table, zeroed within `tol`."""

    residuals: np.ndarray
    max_violation: float
    tol: float


def _check_dims(w: np.ndarray, dim: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape[0] != dim:
        raise ValueError(f"weight vector has dimension {w.shape[0]}, expected {dim}")
    return w


def _check_box(alpha: np.ndarray, n: int, C: float) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64).ravel()
    if alpha.shape[0] != n:
        raise ValueError(f"expected {n} dual variables, got {alpha.shape[0]}")
    slack = 1e-12 * max(C, 1.0)
    if alpha.min(initial=0.0) < -slack or alpha.max(initial=0.0) > C + slack:
        raise ValueError(f"alpha violates the box [0, {C}]")
    return np.clip(alpha, 0.0, C)


def robust_loss(w, sample: Sample) -> float:
    """Worst-case hinge loss of one sample over its l2 uncertainty ball."""
    w = _check_dims(w, sample.features.shape[0])
    value = 1.0 - sample.label * float(sample.features @ w) + sample.radius * float(
        np.linalg.norm(w)
    )
    return max(value, 0.0)


def robust_losses(w, ds: Dataset) -> np.ndarray:
    """Vector of worst-case hinge losses, one per sample."""
    w = _check_dims(w, ds.dim)
    values = 1.0 - ds.y * (ds.X @ w) + ds.rho * np.linalg.norm(w)
    return np.maximum(values, 0.0)


def primal_objective(w, ds: Dataset, hp: Hyperparams) -> float:
    """0.5 ||w||^2 + C * sum of worst-case hinge losses."""
    w = _check_dims(w, ds.dim)
    return 0.5 * float(w @ w) + hp.C * float(robust_losses(w, ds).sum())


def dual_aggregates(alpha, ds: Dataset) -> tuple[np.ndarray, float]:
    """d = sum_i alpha_i y_i x_i and s = sum_i alpha_i rho_i."""
    alpha = np.asarray(alpha, dtype=np.float64).ravel()
    if alpha.shape[0] != ds.n:
        raise ValueError(f"expected {ds.n} dual variables, got {alpha.shape[0]}")
    d = ds.X.T @ (alpha * ds.y)
    s = float(ds.rho @ alpha)
    return d, s


def dual_objective(alpha, ds: Dataset, hp: Hyperparams) -> float:
    """1' alpha - 0.5 [||d|| - s]_+^2 on the box [0, C]^n."""
    alpha = _check_box(alpha, ds.n, hp.C)
    d, s = dual_aggregates(alpha, ds)
    excess = max(float(np.linalg.norm(d)) - s, 0.0)
    return float(alpha.sum()) - 0.5 * excess * excess


def primal_from_dual(alpha, ds: Dataset) -> np.ndarray:
    """Recover the primal weights: w = 0 if ||d|| <= s, else (1 - s/||d||) d."""
    alpha = np.asarray(alpha, dtype=np.float64).ravel()
    d, s = dual_aggregates(alpha, ds)
    norm_d = float(np.linalg.norm(d))
    if norm_d <= s:
        return np.zeros(ds.dim)
    return (1.0 - s / norm_d) * d


def evaluate_iterate(alpha, ds: Dataset, hp: Hyperparams) -> DualIterate:
    """Evaluate a feasible dual vector: aggregates, recovered primal, both
    objectives, and the clamped duality gap."""
    alpha = _check_box(alpha, ds.n, hp.C)
    d, s = dual_aggregates(alpha, ds)
    norm_d = float(np.linalg.norm(d))
    excess = max(norm_d - s, 0.0)
    dual_value = float(alpha.sum()) - 0.5 * excess * excess
    if norm_d <= s:
        w = np.zeros(ds.dim)
    else:
        w = (1.0 - s / norm_d) * d
    primal_value = primal_objective(w, ds, hp)
    if not (np.isfinite(primal_value) and np.isfinite(dual_value)):
        raise ArithmeticError("non-finite objective value")
    gap = primal_value - dual_value
    if gap < GAP_FLOOR:
        raise GapConsistencyError(
            f"gap {gap} is below the weak-duality floor {GAP_FLOOR}"
        )
    return DualIterate(
        alpha=alpha,
        d=d,
        s=s,
        w=w,
        dual_value=dual_value,
        primal_value=primal_value,
        gap=max(gap, 0.0),
    )


def duality_gap(alpha, ds: Dataset, hp: Hyperparams) -> tuple[float, float, float]:
    """(primal value at the recovered w, dual value, clamped gap)."""
    it = evaluate_iterate(alpha, ds, hp)
    return it.primal_value, it.dual_value, it.gap


def margin(w, sample: Sample) -> Margin:
    """Worst-case functional margin of one sample."""
    w = _check_dims(w, sample.features.shape[0])
    psi = sample.label * float(sample.features @ w) - sample.radius * float(
        np.linalg.norm(w)
    )
    return Margin(psi=psi)


def margins(w, ds: Dataset) -> np.ndarray:
    """Vector of worst-case functional margins, one per sample."""
    w = _check_dims(w, ds.dim)
    return ds.y * (ds.X @ w) - ds.rho * np.linalg.norm(w)


def kkt_residuals(
    alpha,
    ds: Dataset,
    hp: Hyperparams,
    tol: float = 1e-4,
    boundary_tol: float = 1e-8,
) -> KKTReport:
    """Check each sample against the optimality case table.

    At an optimum: alpha_i = 0 requires psi_i >= 1, alpha_i = C requires
    psi_i <= 1, and interior alpha_i requires psi_i = 1. Violations within
    `tol` are reported as 0. `boundary_tol` decides (relative to C) when a
    coordinate counts as sitting on the box boundary.
    """
    alpha = _check_box(alpha, ds.n, hp.C)
    w = primal_from_dual(alpha, ds)
    psi = margins(w, ds)
    C = hp.C
    at_zero = alpha <= boundary_tol * C
    at_c = alpha >= C * (1.0 - boundary_tol)
    interior = ~(at_zero | at_c)
    raw = np.zeros(ds.n)
    raw[at_zero] = np.maximum(1.0 - psi[at_zero], 0.0)
    raw[at_c] = np.maximum(psi[at_c] - 1.0, 0.0)
    raw[interior] = np.abs(psi[interior] - 1.0)
    residuals = np.where(raw > tol, raw, 0.0)
    return KKTReport(residuals=residuals, max_violation=float(residuals.max()), tol=tol)
