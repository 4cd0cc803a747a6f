"""Safe sample screening driven by duality-gap balls.

By 1-strong convexity of the primal, the optimal weights always lie within
distance sqrt(2 * gap) of the primal point recovered from any feasible dual
vector. Bounding each sample's worst-case margin over that ball gives a
certified interval [LB_i, UB_i]; LB_i > 1 pins the sample's dual variable to
0 and UB_i < 1 pins it to C, before the problem is solved to completion.
The dynamic driver re-applies these rules as the ball shrinks, solving ever
smaller subproblems.

The gap and its ball are always computed for the original full problem,
with pinned values (0 / C) embedded in the full dual vector; screening on a
reduced problem's gap would void the containment guarantee.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, Sample
from .model import DualIterate, GAP_FLOOR, GapConsistencyError, Hyperparams, margins
from .solver import FrozenAssignment, SolveReport, solve

__all__ = [
    "SafeBall",
    "Partition",
    "TraceRow",
    "ScreenTrace",
    "ScreenDecision",
    "DynamicScreenResult",
    "AuditReport",
    "gap_ball",
    "margin_bounds",
    "classify",
    "ideal_screen",
    "dynamic_screen",
    "verify_no_false_screening",
]


@dataclass(frozen=True)
class SafeBall:
    """Euclidean ball certified to contain the optimal weights."""

    center: np.ndarray
    radius: float
    gap: float  # the duality gap the radius was built from


@dataclass(frozen=True)
class Partition:
    """Disjoint split of sample indices: pinned to 0, pinned to C, undetermined."""

    screened_zero: np.ndarray
    screened_C: np.ndarray
    free: np.ndarray

    def __post_init__(self):
        sz = np.unique(np.asarray(self.screened_zero, dtype=np.intp))
        sc = np.unique(np.asarray(self.screened_C, dtype=np.intp))
        fr = np.unique(np.asarray(self.free, dtype=np.intp))
        n = sz.size + sc.size + fr.size
        combined = np.concatenate([sz, sc, fr])
        if not np.array_equal(np.sort(combined), np.arange(n)):
            raise ValueError("partition sets must be disjoint and cover 0..n-1")
        object.__setattr__(self, "screened_zero", sz)
        object.__setattr__(self, "screened_C", sc)
        object.__setattr__(self, "free", fr)

    @property
    def n(self) -> int:
        return self.screened_zero.size + self.screened_C.size + self.free.size

    @property
    def screened_fraction(self) -> float:
        return (self.screened_zero.size + self.screened_C.size) / self.n

    def to_dict(self) -> dict:
        return {
            "screened_zero": self.screened_zero.tolist(),
            "screened_C": self.screened_C.tolist(),
            "free": self.free.tolist(),
        }


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    gap: float
    radius: float
    n_zero: int
    n_C: int
    n_free: int
    seconds: float


@dataclass
class ScreenTrace:
    """Per-outer-iteration record of the screening run."""

    rows: list[TraceRow] = field(default_factory=list)

    CSV_HEADER = "iter,gap,radius,n_zero,n_C,n_free,seconds"

    def append(self, row: TraceRow) -> None:
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.iteration},{r.gap:.12g},{r.radius:.12g},"
                f"{r.n_zero},{r.n_C},{r.n_free},{r.seconds:.6f}"
            )
        return "\n".join(lines) + "\n"


class ScreenDecision(enum.Enum):
    SCREEN_ZERO = "screen_zero"
    SCREEN_C = "screen_C"
    KEEP = "keep"


@dataclass
class DynamicScreenResult:
    """Certified weights plus the partition and trace that produced them."""

    w: np.ndarray
    partition: Partition
    trace: ScreenTrace
    report: SolveReport
    converged: bool
    screened_at: np.ndarray  # outer iteration at which each index was pinned; -1 = never


@dataclass(frozen=True)
class AuditReport:
    """Outcome of re-checking a partition against a high-precision solve."""

    passed: bool
    zero_violations: np.ndarray
    C_violations: np.ndarray
    reference_gap: float
    w_star: np.ndarray


def gap_ball(iterate: DualIterate) -> SafeBall:
    """Ball of radius sqrt(2 * gap) around the recovered primal point."""
    gap = iterate.gap
    if gap < 0.0:
        if gap < GAP_FLOOR:
            raise GapConsistencyError(f"gap {gap} below clamp threshold")
        gap = 0.0
    return SafeBall(center=iterate.w, radius=float(np.sqrt(2.0 * gap)), gap=gap)


def _screening_ball(iterate: DualIterate) -> SafeBall:
    """Gap ball inflated by the float-evaluation noise of P - D.

    A fully cancelled gap would give a point ball, and a degenerate support
    vector (margin exactly 1, interior dual value) could then be pinned off
    a single ulp of margin jitter. The true gap is only known up to the
    rounding noise of the two objectives, so screening decisions use a ball
    no smaller than that.
    """
    noise = 64.0 * np.finfo(np.float64).eps * (
        abs(iterate.primal_value) + abs(iterate.dual_value) + 1.0
    )
    gap = max(iterate.gap, noise)
    return SafeBall(center=iterate.w, radius=float(np.sqrt(2.0 * gap)), gap=gap)


def margin_bounds(ball: SafeBall, sample: Sample) -> tuple[float, float]:
    """Certified interval for the sample's worst-case margin at the optimum.

    LB = y <c, x> - rho (||c|| + R) - R ||x||
    UB = y <c, x> - rho [||c|| - R]_+ + R ||x||
    """
    w, R = ball.center, ball.radius
    if sample.features.shape[0] != w.shape[0]:
        raise ValueError(
            f"sample dimension {sample.features.shape[0]} != ball dimension {w.shape[0]}"
        )
    score = sample.label * float(sample.features @ w)
    w_norm = float(np.linalg.norm(w))
    x_norm = float(np.linalg.norm(sample.features))
    lb = score - sample.radius * (w_norm + R) - R * x_norm
    ub = score - sample.radius * max(w_norm - R, 0.0) + R * x_norm
    return lb, ub


def _margin_bounds_many(
    ball: SafeBall, ds: Dataset, idx: np.ndarray, x_norms: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    w, R = ball.center, ball.radius
    scores = ds.y[idx] * (ds.X[idx] @ w)
    w_norm = float(np.linalg.norm(w))
    rho = ds.rho[idx]
    lb = scores - rho * (w_norm + R) - R * x_norms[idx]
    ub = scores - rho * max(w_norm - R, 0.0) + R * x_norms[idx]
    return lb, ub


def classify(lb: float, ub: float) -> ScreenDecision:
    """Screening rule: LB > 1 pins to 0, UB < 1 pins to C, ties keep.

    The inequalities are strict, so exact boundary values are kept.
    """
    if lb > ub:
        raise ValueError(f"invalid bounds: LB {lb} > UB {ub}")
    if lb > 1.0:
        return ScreenDecision.SCREEN_ZERO
    if ub < 1.0:
        return ScreenDecision.SCREEN_C
    return ScreenDecision.KEEP


def ideal_screen(
    iterate: DualIterate,
    ds: Dataset,
    tol: float = 1e-7,
    max_gap: float = 1e-10,
) -> Partition:
    """Partition by exact margins at a certified high-precision optimum.

    psi_i > 1 + tol pins to 0, psi_i < 1 - tol pins to C, the rest (the
    support vectors up to ties) stay free. Requires iterate.gap <= max_gap.
    """
    if iterate.gap > max_gap:
        raise ValueError(
            f"ideal screening needs a certified optimum (gap {iterate.gap} > {max_gap})"
        )
    psi = margins(iterate.w, ds)
    screened_zero = np.flatnonzero(psi > 1.0 + tol)
    screened_c = np.flatnonzero(psi < 1.0 - tol)
    free = np.flatnonzero((psi >= 1.0 - tol) & (psi <= 1.0 + tol))
    return Partition(screened_zero, screened_c, free)


def dynamic_screen(
    ds: Dataset,
    hp: Hyperparams,
    f_min: int = 0,
    screen_every: int = 10,
    grad_drop: float = 10.0,
) -> DynamicScreenResult:
    """Alternate short dual solves with gap-ball screening until certified.

    Each outer iteration (a) advances the dual over the still-free
    coordinates, with screened coordinates pinned at 0 / C, until the free
    gradient norm drops by `grad_drop` or `screen_every` epochs elapse;
    (b) evaluates the full-problem gap and its safe ball; (c) screens the
    free samples. The loop stops when the gap reaches hp.gap_tol or at most
    `f_min` samples remain free; a final solve over the active set (pinned
    zeros stay out, pinned-C samples are released) certifies the result.
    When the loop already certified the gap, that final solve returns
    immediately, so it is a consistency step rather than extra work.

    hp.max_epochs is the total epoch budget across the screening loop; the
    final solve gets its own hp.max_epochs.
    """
    if f_min < 0:
        raise ValueError(f"f_min must be >= 0, got {f_min}")
    if screen_every < 1:
        raise ValueError(f"screen_every must be >= 1, got {screen_every}")
    if grad_drop <= 1.0:
        raise ValueError(f"grad_drop must exceed 1, got {grad_drop}")

    n = ds.n
    eps = hp.gap_tol
    start = time.perf_counter()
    in_zero = np.zeros(n, dtype=bool)
    in_c = np.zeros(n, dtype=bool)
    screened_at = np.full(n, -1, dtype=np.intp)
    alpha = np.zeros(n)
    x_norms = np.linalg.norm(ds.X, axis=1)
    trace = ScreenTrace()
    budget = hp.max_epochs
    used = 0
    certified = False
    k = 0
    warm_eta: float | None = None
    resume: tuple[np.ndarray, np.ndarray] | None = None
    best_it = None  # tightest certified (w, gap) pair seen so far
    prev_dual = -np.inf
    stagnant = 0

    while int(n - in_zero.sum() - in_c.sum()) > f_min and used < budget:
        k += 1
        frozen = FrozenAssignment(np.flatnonzero(in_zero), np.flatnonzero(in_c))
        free_idx = np.flatnonzero(frozen.free_mask(n))
        rep = solve(
            ds,
            hp,
            frozen=frozen,
            alpha0=alpha,
            tol=eps,
            max_epochs=min(screen_every, budget - used),
            gap_check_every=10**9,  # the outer loop owns the gap evaluation
            grad_drop=grad_drop,
            eta0=warm_eta,
            resume=resume,
            entry_eval=False,
        )
        warm_eta = rep.final_eta
        resume = rep.resume_state
        used += max(rep.epochs, 1)  # a zero-progress burst still spends budget
        # Resume from the final dual vector (dual value is monotone across
        # bursts even when its gap bumps transiently), but screen with the
        # tightest certified pair seen so far.
        if best_it is None or rep.iterate.gap < best_it.gap:
            best_it = rep.iterate
        alpha = np.array(rep.last.alpha)
        ball = _screening_ball(best_it)

        lb, ub = _margin_bounds_many(ball, ds, free_idx, x_norms)
        new_zero = free_idx[lb > 1.0]
        new_c = free_idx[ub < 1.0]
        in_zero[new_zero] = True
        in_c[new_c] = True
        screened_at[new_zero] = k
        screened_at[new_c] = k
        alpha[new_zero] = 0.0
        alpha[new_c] = hp.C

        trace.append(
            TraceRow(
                iteration=k,
                gap=best_it.gap,
                radius=ball.radius,
                n_zero=int(in_zero.sum()),
                n_C=int(in_c.sum()),
                n_free=int(n - in_zero.sum() - in_c.sum()),
                seconds=time.perf_counter() - start,
            )
        )
        if best_it.gap <= eps:
            certified = True
            break
        # The dual is monotone across bursts, so a run of iterations with no
        # dual progress and no new screenings is wedged on the flat optimal
        # face; hand over to the final active-set solve instead of spinning.
        dual_now = rep.last.dual_value
        if (
            dual_now <= prev_dual + 1e-12 * (1.0 + abs(prev_dual))
            and new_zero.size == 0
            and new_c.size == 0
        ):
            stagnant += 1
            if stagnant >= 3:
                break
        else:
            stagnant = 0
        prev_dual = dual_now

    # Final solve over the active set: screened zeros stay excluded, the
    # pinned-C samples are released again.
    final_frozen = FrozenAssignment(np.flatnonzero(in_zero), np.empty(0, dtype=np.intp))
    report = solve(ds, hp, frozen=final_frozen, alpha0=alpha, tol=eps)
    if not certified:
        it = report.iterate
        trace.append(
            TraceRow(
                iteration=k + 1,
                gap=it.gap,
                radius=float(np.sqrt(2.0 * it.gap)),
                n_zero=int(in_zero.sum()),
                n_C=int(in_c.sum()),
                n_free=int(n - in_zero.sum() - in_c.sum()),
                seconds=time.perf_counter() - start,
            )
        )

    partition = Partition(
        np.flatnonzero(in_zero),
        np.flatnonzero(in_c),
        np.flatnonzero(~in_zero & ~in_c),
    )
    return DynamicScreenResult(
        w=report.iterate.w,
        partition=partition,
        trace=trace,
        report=report,
        converged=report.converged,
        screened_at=screened_at,
    )


def verify_no_false_screening(
    partition: Partition, ds: Dataset, hp: Hyperparams
) -> AuditReport:
    """Audit a partition against an unscreened high-precision solve.

    Each pinned index must either land on its pinned dual value (within
    1e-5 relative to C) or, since the dual optimum may be non-unique,
    satisfy the margin implication at the unique primal optimum:
    psi >= 1 - 1e-6 for pinned zeros and psi <= 1 + 1e-6 for pinned Cs.
    """
    reference_hp = replace(hp, gap_tol=1e-10)
    rep = solve(ds, reference_hp)
    if not rep.converged:
        raise RuntimeError(
            f"reference solve failed to certify gap <= 1e-10 (got {rep.iterate.gap})"
        )
    alpha = rep.iterate.alpha
    psi = margins(rep.iterate.w, ds)
    C = hp.C

    rz = partition.screened_zero
    rc = partition.screened_C
    zero_bad = rz[(alpha[rz] > 1e-5 * C) & (psi[rz] < 1.0 - 1e-6)]
    c_bad = rc[(alpha[rc] < C * (1.0 - 1e-5)) & (psi[rc] > 1.0 + 1e-6)]
    return AuditReport(
        passed=zero_bad.size == 0 and c_bad.size == 0,
        zero_violations=zero_bad,
        C_violations=c_bad,
        reference_gap=rep.iterate.gap,
        w_star=rep.iterate.w,
    )
