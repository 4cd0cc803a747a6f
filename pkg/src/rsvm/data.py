"""Dataset ingestion, validation, and synthesis.

Binary-classification datasets are dense: a feature matrix, labels in
{-1, +1}, and one nonnegative uncertainty radius per sample. Every
transformation returns a new `Dataset`; instances are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ParseError",
    "Sample",
    "Dataset",
    "parse_libsvm",
    "parse_csv",
    "to_libsvm",
    "augment_bias",
    "standardize",
    "gen_gaussian",
    "set_radii",
]


class ParseError(ValueError):
    """Malformed dataset text. `line` is the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


@dataclass(frozen=True)
class Sample:
    """One training point: dense features, a +/-1 label, and its uncertainty radius."""

    features: np.ndarray
    label: float
    radius: float


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense dataset with per-sample uncertainty radii.

    Attributes
    ----------
    X : ndarray of shape (n, dim)
        Nominal feature vectors, one row per sample.
    y : ndarray of shape (n,)
        Labels in {-1.0, +1.0}.
    rho : ndarray of shape (n,)
        Nonnegative radius of the l2 perturbation ball around each sample.

    Original sample order (indices 0..n-1) is preserved by every
    transformation in this module.
    """

    X: np.ndarray
    y: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.float64).ravel().copy()
        rho = np.asarray(self.rho, dtype=np.float64).ravel().copy()
        if X.ndim != 2:
            raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
        n, dim = X.shape
        if n < 1 or dim < 1:
            raise ValueError(f"dataset must be nonempty, got shape {X.shape}")
        if y.shape[0] != n:
            raise ValueError(f"expected {n} labels, got {y.shape[0]}")
        if rho.shape[0] != n:
            raise ValueError(f"expected {n} radii, got {rho.shape[0]}")
        if not np.isfinite(X).all():
            raise ValueError("features contain NaN or Inf")
        if not np.all((y == 1.0) | (y == -1.0)):
            raise ValueError("labels must be -1 or +1")
        if not np.isfinite(rho).all() or (rho < 0).any():
            raise ValueError("radii must be finite and nonnegative")
        for arr in (X, y, rho):
            arr.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "rho", rho)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def sample(self, i: int) -> Sample:
        return Sample(self.X[i], float(self.y[i]), float(self.rho[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.rho, other.rho)
        )


def _coerce_label(value: float) -> float:
    # Accepts {0,1} and {-1,+1} corpora: anything > 0 is the positive class.
    return 1.0 if value > 0 else -1.0


def parse_libsvm(text: str) -> Dataset:
    """Parse LIBSVM sparse text (`label idx:val ...`, 1-based indices) into a dense Dataset.

    The dimension is the largest index seen anywhere in the input; absent
    indices are zero. Labels are coerced to +/-1 (any value > 0 maps to +1).
    Radii are initialized to 0 and set later via `set_radii`.
    """
    entries: list[tuple[float, list[tuple[int, float]]]] = []
    dim = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise ParseError(f"bad label {tokens[0]!r}", line=lineno) from None
        pairs: list[tuple[int, float]] = []
        prev = 0
        for token in tokens[1:]:
            idx_str, sep, val_str = token.partition(":")
            if not sep:
                raise ParseError(f"expected index:value, got {token!r}", line=lineno)
            try:
                idx = int(idx_str)
                val = float(val_str)
            except ValueError:
                raise ParseError(f"bad index:value pair {token!r}", line=lineno) from None
            if idx < 1:
                raise ParseError(f"index {idx} is not 1-based", line=lineno)
            if idx <= prev:
                raise ParseError(
                    f"indices must be strictly increasing, got {idx} after {prev}",
                    line=lineno,
                )
            prev = idx
            pairs.append((idx, val))
        dim = max(dim, prev)
        entries.append((_coerce_label(label), pairs))
    if not entries:
        raise ParseError("empty input")
    if dim == 0:
        raise ParseError("no feature indices found")
    X = np.zeros((len(entries), dim))
    y = np.empty(len(entries))
    for i, (label, pairs) in enumerate(entries):
        y[i] = label
        for idx, val in pairs:
            X[i, idx - 1] = val
    return Dataset(X, y, np.zeros(len(entries)))


def parse_csv(text: str, label_column: int = 0, header: bool = False) -> Dataset:
    """Parse a rectangular numeric CSV; one column holds the label (coerced to +/-1)."""
    rows = [row for row in csv.reader(io.StringIO(text)) if any(c.strip() for c in row)]
    offset = 0
    if header and rows:
        rows = rows[1:]
        offset = 1
    if not rows:
        raise ParseError("empty input")
    width = len(rows[0])
    if width < 2:
        raise ParseError("need at least one feature column besides the label")
    if not (0 <= label_column < width):
        raise ParseError(f"label column {label_column} out of range for width {width}")
    X = np.empty((len(rows), width - 1))
    y = np.empty(len(rows))
    for i, row in enumerate(rows):
        lineno = i + 1 + offset
        if len(row) != width:
            raise ParseError(f"ragged row: expected {width} cells, got {len(row)}", line=lineno)
        values = []
        for j, cell in enumerate(row):
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(f"non-numeric cell {cell!r} in column {j}", line=lineno) from None
        y[i] = _coerce_label(values[label_column])
        X[i] = values[:label_column] + values[label_column + 1 :]
    return Dataset(X, y, np.zeros(len(rows)))


def to_libsvm(ds: Dataset) -> str:
    """Serialize to LIBSVM text. All coordinates are written (including zeros)
    so the dimension survives a round trip through `parse_libsvm`."""
    lines = []
    for i in range(ds.n):
        label = "+1" if ds.y[i] > 0 else "-1"
        feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in enumerate(ds.X[i]))
        lines.append(f"{label} {feats}")
    return "\n".join(lines) + "\n"


def augment_bias(ds: Dataset) -> Dataset:
    """Append a constant 1.0 feature so the bias is absorbed into the weights.

    Caveat: the per-sample uncertainty ball then perturbs the constant
    coordinate too. Apply radii with that geometry in mind.
    """
    X = np.hstack([ds.X, np.ones((ds.n, 1))])
    return Dataset(X, ds.y, ds.rho)


def standardize(ds: Dataset) -> tuple[Dataset, np.ndarray, np.ndarray]:
    """Center each feature and scale it to unit standard deviation.

    Zero-variance features are centered only. Returns the transformed
    dataset plus the per-feature means and (population) standard deviations
    of the input.
    """
    if ds.n < 2:
        raise ValueError("standardize requires at least 2 samples")
    mean = ds.X.mean(axis=0)
    centered = ds.X - mean
    std = centered.std(axis=0)
    nonconstant = std > 1e-12 * (1.0 + np.abs(mean))
    scale = np.where(nonconstant, std, 1.0)
    return Dataset(centered / scale, ds.y, ds.rho), mean, std


def gen_gaussian(n: int, d: int, separation: float, noise_std: float, seed: int) -> Dataset:
    """Two isotropic Gaussian classes centered at +/-(separation/2) along the
    first axis, n/2 samples each.

    Uses numpy's PCG64 generator so identical seeds give bit-identical
    datasets across runs and platforms.
    """
    if n < 2 or n % 2 != 0:
        raise ValueError(f"n must be even and >= 2, got {n}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if noise_std <= 0:
        raise ValueError(f"noise_std must be positive, got {noise_std}")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d)) * noise_std
    half = n // 2
    X[:half, 0] += separation / 2.0
    X[half:, 0] -= separation / 2.0
    y = np.concatenate([np.ones(half), -np.ones(half)])
    return Dataset(X, y, np.zeros(n))


def set_radii(ds: Dataset, rho) -> Dataset:
    """Overwrite the uncertainty radii with a scalar or one value per sample."""
    r = np.asarray(rho, dtype=np.float64)
    if r.ndim == 0:
        radii = np.full(ds.n, float(r))
    elif r.shape == (ds.n,):
        radii = r.copy()
    else:
        raise ValueError(f"expected a scalar or {ds.n} radii, got shape {r.shape}")
    if not np.isfinite(radii).all() or (radii < 0).any():
        raise ValueError("radii must be finite and nonnegative")
    return Dataset(ds.X, ds.y, radii)
