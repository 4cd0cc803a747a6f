"""Projected gradient ascent for the box-constrained dual.

The dual D(alpha) = 1' alpha - 0.5 [||d|| - s]_+^2 is concave on [0, C]^n
and smooth wherever ||d|| > s; at the kink the all-ones vector is a valid
supergradient (the quadratic term vanishes identically below it). Ascent
steps follow the raw gradient and project back onto the box. The step size
starts at 1/L (L a crude curvature bound on the smooth branch) and is
re-estimated each epoch by a spectral (Barzilai-Borwein) rule, safeguarded
by Armijo halving along the projection arc: a trial alpha+ = P(alpha + eta g)
is accepted when D(alpha+) - D(alpha) >= sigma * <g, alpha+ - alpha> (the
classical sigma * eta * ||g_free||^2 test whenever nothing is clamped).

The dual optimum is generally a flat face and the recovered primal point
varies along it, so gradient steps alone cannot certify tight gaps: they
stop anywhere on the face once float resolution is hit. When the line
search stalls, a polishing phase takes over: one exact coordinate-
maximization sweep (each 1-d restriction is concave and solved to machine
precision) to settle the active set, then Newton iterations on the interior
coordinates, whose optimality system is low-dimensional. This slides the
iterate along the face to a KKT-clean point, which is what shrinks the
recovered-primal side of the gap. One polishing pass counts as one epoch.

Screening pins coordinates through `FrozenAssignment`; pinned contributions
to the aggregates are cached so an epoch costs O(|free| * d), while the
duality gap is always evaluated on the full problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data import Dataset
from .model import DualIterate, Hyperparams, evaluate_iterate

__all__ = [
    "FrozenAssignment",
    "SolveReport",
    "dual_gradient",
    "project_box",
    "solve",
    "brute_force_dual",
]

ARMIJO_SIGMA = 1e-4
MAX_BACKTRACKS = 120
# Spectral step bounds, relative to the 1/L base step.
STEP_GROWTH_MAX = 1e12
STEP_SHRINK_MIN = 1e-6
# Polishing continues while each pass improves the gap by at least 10%.
POLISH_IMPROVEMENT = 0.9
# Accept a polishing pass unless it loses more than ~32 ulp of dual value.
POLISH_SLACK = 32 * np.finfo(np.float64).eps
NEWTON_MAX_INTERIOR = 2000


@dataclass(frozen=True)
class FrozenAssignment:
    """Coordinates pinned at 0 or at C for the duration of a solve."""

    fixed_zero: np.ndarray
    fixed_C: np.ndarray

    def __post_init__(self):
        fz = np.unique(np.asarray(self.fixed_zero, dtype=np.intp))
        fc = np.unique(np.asarray(self.fixed_C, dtype=np.intp))
        if np.intersect1d(fz, fc).size > 0:
            raise ValueError("fixed_zero and fixed_C overlap")
        object.__setattr__(self, "fixed_zero", fz)
        object.__setattr__(self, "fixed_C", fc)

    @classmethod
    def empty(cls) -> "FrozenAssignment":
        return cls(np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp))

    def free_mask(self, n: int) -> np.ndarray:
        mask = np.ones(n, dtype=bool)
        mask[self.fixed_zero] = False
        mask[self.fixed_C] = False
        return mask


@dataclass
class SolveReport:
    """Outcome of one solve.

    `iterate` is the first gap-certified iterate when converged, otherwise
    the best (smallest-gap) one evaluated. `last` is the iterate at the
    final dual vector regardless of its gap; resumed solves should warm
    start from it, since the dual ascends monotonically while the gap can
    bump transiently.
    """

    iterate: DualIterate
    epochs: int
    converged: bool
    gap_history: list[float] = field(default_factory=list)
    dual_history: list[float] = field(default_factory=list)
    final_eta: float = 0.0  # warm-start hint for resumed solves
    last: DualIterate | None = None
    resume_state: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if self.last is None:
            self.last = self.iterate


def dual_gradient(alpha, ds: Dataset) -> np.ndarray:
    """Gradient of the dual at a feasible alpha (all-ones at the kink)."""
    alpha = np.asarray(alpha, dtype=np.float64).ravel()
    if alpha.shape[0] != ds.n:
        raise ValueError(f"expected {ds.n} dual variables, got {alpha.shape[0]}")
    d = ds.X.T @ (alpha * ds.y)
    s = float(ds.rho @ alpha)
    norm_d = float(np.linalg.norm(d))
    m = norm_d - s
    if m <= 0.0:
        return np.ones(ds.n)
    return 1.0 - m * (ds.y * (ds.X @ (d / norm_d)) - ds.rho)


def project_box(v, hp: Hyperparams, frozen: FrozenAssignment | None = None) -> np.ndarray:
    """Clamp elementwise to [0, C]; frozen coordinates get their pinned values."""
    out = np.clip(np.asarray(v, dtype=np.float64).ravel(), 0.0, hp.C)
    if frozen is not None:
        out[frozen.fixed_zero] = 0.0
        out[frozen.fixed_C] = hp.C
    return out


def _free_gradient(g: np.ndarray, af: np.ndarray, C: float) -> np.ndarray:
    """Zero the gradient components blocked by the box."""
    pg = g.copy()
    pg[(af <= 0.0) & (g < 0.0)] = 0.0
    pg[(af >= C) & (g > 0.0)] = 0.0
    return pg


def _coordinate_max(
    ndd: float, ddz: float, zz: float, s0: float, r: float, C: float
) -> float:
    """Maximizer over t in [0, C] of the dual's 1-d coordinate restriction

        phi(t) = const + t - 0.5 [ sqrt(ndd + 2 t ddz + t^2 zz) - (s0 + t r) ]_+^2.

    phi is concave; find the root of its (nonincreasing) derivative by
    bisection with Newton acceleration.
    """

    def derivative(t: float) -> float:
        q = ndd + 2.0 * t * ddz + t * t * zz
        norm_dt = np.sqrt(q) if q > 0.0 else 0.0
        m = norm_dt - (s0 + t * r)
        if m <= 0.0 or norm_dt == 0.0:
            return 1.0
        return 1.0 - m * ((ddz + t * zz) / norm_dt - r)

    if derivative(C) >= 0.0:
        return C
    if derivative(0.0) <= 0.0:
        return 0.0
    lo, hi = 0.0, C
    t = 0.5 * C
    for _ in range(80):
        dphi = derivative(t)
        if dphi > 0.0:
            lo = t
        else:
            hi = t
        if hi - lo <= 1e-16 * C:
            break
        # Newton step on the smooth branch, bisection fallback.
        q = ndd + 2.0 * t * ddz + t * t * zz
        norm_dt = np.sqrt(q) if q > 0.0 else 0.0
        t_next = None
        if norm_dt > 0.0:
            u = (ddz + t * zz) / norm_dt
            m = norm_dt - (s0 + t * r)
            curv = -((u - r) ** 2) - m * max(zz * q - (ddz + t * zz) ** 2, 0.0) / (
                q * norm_dt
            )
            if curv < 0.0:
                t_next = t - dphi / curv
        if t_next is None or not (lo < t_next < hi):
            t_next = 0.5 * (lo + hi)
        t = t_next
    return min(max(t, 0.0), C)


def solve(
    ds: Dataset,
    hp: Hyperparams,
    frozen: FrozenAssignment | None = None,
    alpha0=None,
    tol: float | None = None,
    max_epochs: int | None = None,
    *,
    gap_check_every: int = 1,
    grad_norm_target: float | None = None,
    grad_drop: float | None = None,
    eta0: float | None = None,
    resume: tuple[np.ndarray, np.ndarray] | None = None,
    entry_eval: bool = True,
    callback: Callable[[int, DualIterate], None] | None = None,
) -> SolveReport:
    """Maximize the dual over the box by projected gradient ascent.

    Stops at the first iterate whose full-problem duality gap is <= `tol`
    (converged), or after `max_epochs` epochs, or when the free-gradient
    norm drops below `grad_norm_target` (used by the screening driver's
    inner schedule). One epoch is one gradient step or one polishing pass;
    the gap is recomputed every `gap_check_every` epochs and always at
    exit. On a non-converged exit the best (smallest-gap) evaluated iterate
    is returned.

    `eta0` and `resume` (a full-length earlier point and its gradient) warm
    start the spectral step estimate when continuing a previous solve in
    bursts, as the screening driver does; `entry_eval=False` skips the
    initial full-gap evaluation for such bursts, and `grad_drop` sets the
    gradient-norm stop target to (first-epoch norm) / grad_drop.
    """
    if frozen is None:
        frozen = FrozenAssignment.empty()
    if tol is None:
        tol = hp.gap_tol
    if max_epochs is None:
        max_epochs = hp.max_epochs
    n, C = ds.n, hp.C

    if alpha0 is None:
        alpha = np.zeros(n)
    else:
        alpha = np.array(alpha0, dtype=np.float64).ravel()
        if alpha.shape[0] != n:
            raise ValueError(f"alpha0 has length {alpha.shape[0]}, expected {n}")
        if alpha.min(initial=0.0) < 0.0 or alpha.max(initial=0.0) > C:
            raise ValueError("alpha0 violates the box")
    if frozen.fixed_zero.size and np.any(alpha[frozen.fixed_zero] != 0.0):
        raise ValueError("alpha0 is inconsistent with fixed_zero")
    if frozen.fixed_C.size and np.any(alpha[frozen.fixed_C] != C):
        raise ValueError("alpha0 is inconsistent with fixed_C")

    free = frozen.free_mask(n)
    pinned = ~free
    Z = ds.X * ds.y[:, None]
    Zf = Z[free]
    rho_f = ds.rho[free]
    af = alpha[free].copy()
    base = alpha.copy()  # pinned values; free slots overwritten on assembly
    nf = af.shape[0]

    if pinned.any():
        d_pin = Z[pinned].T @ alpha[pinned]
        s_pin = float(ds.rho[pinned] @ alpha[pinned])
        sum_pin = float(alpha[pinned].sum())
    else:
        d_pin = np.zeros(ds.dim)
        s_pin = 0.0
        sum_pin = 0.0

    def full_iterate(af_now: np.ndarray) -> DualIterate:
        full = base.copy()
        full[free] = af_now
        return evaluate_iterate(full, ds, hp)

    def cheap_dual(d_vec: np.ndarray, s: float, total: float) -> float:
        m = float(np.linalg.norm(d_vec)) - s
        return total - 0.5 * m * m if m > 0.0 else total

    L = float(((np.linalg.norm(ds.X, axis=1) + ds.rho) ** 2).sum())
    eta_base = 1.0 / L if L > 0 else 1.0
    eta = eta0 if eta0 else eta_base

    evaluated: DualIterate | None = None
    best: DualIterate | None = None
    gap_history: list[float] = []
    dual_history: list[float] = []
    if entry_eval or nf == 0:
        evaluated = full_iterate(af)
        best = evaluated
        gap_history.append(evaluated.gap)
        dual_history.append(evaluated.dual_value)
        if callback is not None:
            callback(0, evaluated)
        if evaluated.gap <= tol:
            return SolveReport(evaluated, 0, True, gap_history, dual_history, eta)
        if nf == 0:
            return SolveReport(evaluated, 0, False, gap_history, dual_history, eta)

    zz_f = np.einsum("ij,ij->i", Zf, Zf)

    def refresh(af_now):
        d_vec = d_pin + Zf.T @ af_now
        s = s_pin + float(rho_f @ af_now)
        total = sum_pin + float(af_now.sum())
        return d_vec, s, total, cheap_dual(d_vec, s, total)

    d_vec, s, total, D = refresh(af)

    epochs = 0
    converged = False
    stale = False  # whether `evaluated` lags behind af
    prev_af: np.ndarray | None = None
    prev_g: np.ndarray | None = None
    if resume is not None:
        prev_alpha, prev_grad = resume
        prev_af = np.asarray(prev_alpha, dtype=np.float64)[free]
        prev_g = np.asarray(prev_grad, dtype=np.float64)[free]

    def checkpoint(label: int) -> bool:
        nonlocal evaluated, stale, best, converged
        evaluated = full_iterate(af)
        stale = False
        gap_history.append(evaluated.gap)
        if callback is not None:
            callback(label, evaluated)
        if best is None or evaluated.gap < best.gap:
            best = evaluated
        if evaluated.gap <= tol:
            converged = True
        return converged

    def coordinate_sweep() -> None:
        nonlocal d_vec, s, total
        for j in range(nf):
            aj = af[j]
            z = Zf[j]
            r = rho_f[j]
            d0 = d_vec - aj * z
            s0 = s - aj * r
            t = _coordinate_max(float(d0 @ d0), float(d0 @ z), float(zz_f[j]), s0, r, C)
            if t != aj:
                d_vec = d0 + t * z
                s = s0 + t * r
                total += t - aj
                af[j] = t

    def newton_on_interior() -> None:
        # Solve the stationarity system on the strictly interior coordinates;
        # their count is typically near the feature dimension, so each
        # iteration is a small dense solve.
        nonlocal d_vec, s, total
        band = 1e-11 * C
        for _ in range(30):
            interior = np.flatnonzero((af > band) & (af < C - band))
            k = interior.size
            if k == 0 or k > NEWTON_MAX_INTERIOR:
                return
            norm_d = float(np.linalg.norm(d_vec))
            m = norm_d - s
            if m <= 0.0 or norm_d == 0.0:
                return
            u = d_vec / norm_d
            B = Zf[interior]
            Bu = B @ u
            a_vec = Bu - rho_f[interior]
            grad = 1.0 - m * a_vec
            if float(np.abs(grad).max()) <= 1e-15 * (1.0 + abs(D)):
                return
            neg_hess = np.outer(a_vec, a_vec) + (m / norm_d) * (B @ B.T - np.outer(Bu, Bu))
            ridge = 1e-13 * (np.trace(neg_hess) / k + 1.0)
            try:
                delta = np.linalg.solve(neg_hess + ridge * np.eye(k), grad)
            except np.linalg.LinAlgError:
                return
            if not np.all(np.isfinite(delta)):
                return
            af[interior] = np.clip(af[interior] + delta, 0.0, C)
            d_vec, s, total, _ = refresh(af)

    while epochs < max_epochs:
        norm_d = float(np.linalg.norm(d_vec))
        m = norm_d - s
        if m > 0.0:
            g = 1.0 - m * (Zf @ (d_vec / norm_d) - rho_f)
        else:
            g = np.ones(nf)
        pg = _free_gradient(g, af, C)
        pg_sq = float(pg @ pg)
        if grad_drop is not None and grad_norm_target is None:
            grad_norm_target = np.sqrt(pg_sq) / grad_drop
        if grad_norm_target is not None and pg_sq <= grad_norm_target**2:
            break

        step = None
        if pg_sq > 0.0:
            if prev_af is not None:
                step_diff = af - prev_af
                curvature = -float(step_diff @ (g - prev_g))
                if np.isfinite(curvature) and curvature > 0.0:
                    eta = float(step_diff @ step_diff) / curvature
                eta = min(max(eta, STEP_SHRINK_MIN * eta_base), STEP_GROWTH_MAX * eta_base)
            prev_af, prev_g = af.copy(), g

            for _ in range(MAX_BACKTRACKS):
                af_new = np.clip(af + eta * g, 0.0, C)
                gain = float(g @ (af_new - af))
                if gain <= 0.0:
                    if eta < eta_base:
                        # Step too small to move any coordinate in floats.
                        eta = max(eta * 8.0, eta_base)
                        continue
                    break  # projection arc genuinely blocked on the active face
                d_new = d_pin + Zf.T @ af_new
                s_new = s_pin + float(rho_f @ af_new)
                total_new = sum_pin + float(af_new.sum())
                D_new = cheap_dual(d_new, s_new, total_new)
                if D_new - D >= ARMIJO_SIGMA * gain:
                    step = (af_new, d_new, s_new, total_new, D_new)
                    break
                eta *= 0.5

        if step is not None:
            af, d_vec, s, total, D = step
            epochs += 1
            dual_history.append(D)
            stale = True
            if epochs % gap_check_every == 0:
                if checkpoint(epochs):
                    break
            continue

        eta = eta_base  # don't carry a backtracked-to-nothing step forward
        if grad_norm_target is not None or grad_drop is not None:
            break  # burst mode: leave endgame polishing to the final solve
        # Gradient steps are below float resolution: polish.
        gap_at_entry = best.gap if best is not None else np.inf
        while epochs < max_epochs:
            d_vec, s, total, D = refresh(af)
            af_before = af.copy()
            D_before = D
            coordinate_sweep()
            newton_on_interior()
            d_vec, s, total, D = refresh(af)
            if D < D_before - POLISH_SLACK * (1.0 + abs(D_before)):
                af = af_before
                d_vec, s, total, D = refresh(af)
                break
            epochs += 1
            dual_history.append(D)
            stale = True
            gap_before = evaluated.gap if evaluated is not None else np.inf
            if checkpoint(epochs):
                break
            if not np.any(af != af_before) or evaluated.gap > POLISH_IMPROVEMENT * gap_before:
                break
        if converged or best is None or best.gap >= gap_at_entry:
            break
        prev_af = prev_g = None  # spectral state is stale after polishing
        eta = eta_base

    if stale or evaluated is None:
        checkpoint(epochs)
    final = evaluated if converged else best
    if prev_af is not None:
        carry_alpha = base.copy()
        carry_alpha[free] = prev_af
        carry_grad = np.zeros(n)
        carry_grad[free] = prev_g
        resume_out = (carry_alpha, carry_grad)
    else:
        resume_out = None
    return SolveReport(
        final,
        epochs,
        converged,
        gap_history,
        dual_history,
        eta,
        last=evaluated,
        resume_state=resume_out,
    )


def brute_force_dual(
    ds: Dataset, hp: Hyperparams, grid_steps: int
) -> tuple[np.ndarray, float]:
    """Exhaustive grid maximization of the dual over the box (test oracle).

    Evaluates all (grid_steps+1)^n points of the uniform box grid. Only
    meant for n <= 4 and modest grids.
    """
    n, C = ds.n, hp.C
    if n > 4:
        raise ValueError(f"brute force is limited to n <= 4, got n = {n}")
    if grid_steps < 1:
        raise ValueError("grid_steps must be >= 1")
    points = (grid_steps + 1) ** n
    if points > 3e8:
        raise ValueError(f"grid of {points} points is too large")

    axis = np.linspace(0.0, C, grid_steps + 1)
    Z = ds.X * ds.y[:, None]

    if n == 1:
        tail = np.zeros((1, 0))
    else:
        grids = np.meshgrid(*([axis] * (n - 1)), indexing="ij")
        tail = np.stack([g.ravel() for g in grids], axis=1)
    # Contributions of coordinates 2..n are shared across the first axis.
    tail_d = tail @ Z[1:]
    tail_s = tail @ ds.rho[1:]
    tail_sum = tail.sum(axis=1)

    best_value = -np.inf
    best_first = 0.0
    best_row = 0
    for a0 in axis:
        d_all = tail_d + a0 * Z[0]
        s_all = tail_s + a0 * ds.rho[0]
        excess = np.maximum(np.sqrt(np.einsum("ij,ij->i", d_all, d_all)) - s_all, 0.0)
        values = tail_sum + a0 - 0.5 * excess * excess
        row = int(np.argmax(values))
        if values[row] > best_value:
            best_value = float(values[row])
            best_first = float(a0)
            best_row = row
    alpha_star = np.concatenate([[best_first], tail[best_row]])
    return alpha_star, best_value
