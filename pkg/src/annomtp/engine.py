"""Resampling-based single-step common-cut-off maxT testing.

The engine builds a bootstrap (or permutation) matrix of test statistics,
recenters (and optionally rescales) it row-wise into a null-transformed
matrix Z, and derives the common cutoff and adjusted p-values from the
per-column maxima of Z.

Replicates are evaluated on independent keyed random streams (see
``annomtp.rng``), so output is bit-identical for any worker count.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from .errors import (
    ComputationError,
    DegenerateReplicate,
    LengthMismatch,
    OutOfRangeP,
    ZeroStandardError,
)
from .profiles import SampleData
from .rng import DOMAIN_RESAMPLE, stream

Sidedness = Literal["two_sided", "one_sided_upper"]
Scheme = Literal["bootstrap_nonparam", "permutation"]
Transform = Literal["shift_only", "shift_and_scale"]

_SCHEME_CODE = {"bootstrap_nonparam": 0, "permutation": 1}
_SIDEDNESS_CODE = {"two_sided": 0, "one_sided_upper": 1}


def _magnitude(values: np.ndarray, sidedness: Sidedness) -> np.ndarray:
    return np.abs(values) if sidedness == "two_sided" else values


@dataclass(frozen=True)
class StatisticComputer:
    """Maps a (resampled) dataset to a length-M statistic vector.

    ``func`` must be deterministic given its input dataset; any
    randomness it needs (e.g. an inner resampling run) must come from
    streams keyed by the replicate index, which the engine passes as a
    second argument when ``pass_replicate`` is set (None = observed data).
    """

    func: Callable[..., np.ndarray]
    n_stats: int
    sidedness: Sidedness
    lambda0: np.ndarray | None = None
    tau0: np.ndarray | None = None
    pass_replicate: bool = False

    def __post_init__(self):
        if self.sidedness not in ("two_sided", "one_sided_upper"):
            raise ValueError(f"unknown sidedness {self.sidedness!r}")

    def null_shift(self) -> np.ndarray:
        if self.lambda0 is None:
            return np.zeros(self.n_stats)
        return np.broadcast_to(np.asarray(self.lambda0, float), (self.n_stats,))

    def null_scale_bound(self) -> np.ndarray:
        if self.tau0 is None:
            return np.ones(self.n_stats)
        return np.broadcast_to(np.asarray(self.tau0, float), (self.n_stats,))


@dataclass(frozen=True)
class NullDistributionEstimate:
    """M x B matrix of null-transformed resampled statistics plus the
    per-column maxima the maxT procedure consumes."""

    z_matrix: np.ndarray
    col_maxima: np.ndarray
    row_means: np.ndarray
    row_vars: np.ndarray
    scheme: Scheme
    seed: int
    sidedness: Sidedness
    n_redraws: int = 0

    def __post_init__(self):
        # copy before freezing so callers' arrays stay writable
        z = np.array(self.z_matrix, dtype=float)
        z.setflags(write=False)
        object.__setattr__(self, "z_matrix", z)
        for name in ("col_maxima", "row_means", "row_vars"):
            v = np.array(getattr(self, name), dtype=float)
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if z.ndim != 2:
            raise LengthMismatch("z matrix must be M x B")
        if not np.isfinite(z).all():
            raise ValueError("null matrix contains non-finite entries")
        expected = np.max(_magnitude(z, self.sidedness), axis=0)
        if self.col_maxima.shape != expected.shape or not np.array_equal(
            self.col_maxima, expected
        ):
            raise ValueError("column maxima inconsistent with z matrix")

    @property
    def n_stats(self) -> int:
        return self.z_matrix.shape[0]

    @property
    def n_resamples(self) -> int:
        return self.z_matrix.shape[1]


@dataclass(frozen=True)
class MtpResult:
    """Observed statistics, common cutoff, adjusted p-values, rejections,
    and the significance ordering of one single-step maxT run."""

    observed: np.ndarray
    cutoff: float
    adjusted_p: np.ndarray
    alpha: float
    rejected: frozenset[int]
    ordering: tuple[int, ...]
    n_resamples: int
    sidedness: Sidedness

    def __post_init__(self):
        obs = np.array(self.observed, dtype=float)
        p = np.array(self.adjusted_p, dtype=float)
        for name, v in (("observed", obs), ("adjusted_p", p)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        object.__setattr__(self, "rejected", frozenset(self.rejected))
        object.__setattr__(self, "ordering", tuple(self.ordering))
        if obs.shape != p.shape:
            raise LengthMismatch("observed and adjusted_p lengths differ")
        counts = p * self.n_resamples
        if not np.allclose(counts, np.round(counts), atol=1e-9):
            raise ValueError("adjusted p-values are not multiples of 1/B")
        if ((p < 0) | (p > 1)).any():
            raise OutOfRangeP("adjusted p-values outside [0, 1]")
        if self.rejected != frozenset(int(m) for m in np.flatnonzero(p <= self.alpha)):
            raise ValueError("rejection set violates the adjusted-p duality")
        if sorted(self.ordering) != list(range(obs.shape[0])):
            raise ValueError("ordering is not a permutation")


# ---------------------------------------------------------------------------
# test statistics
# ---------------------------------------------------------------------------


def difference_statistics(
    psi_hat: np.ndarray, psi0: np.ndarray, n: int
) -> np.ndarray:
    """Unstandardized difference statistics sqrt(n) * (psi_hat - psi0)."""
    a = np.asarray(psi_hat, dtype=float).ravel()
    b = np.asarray(psi0, dtype=float).ravel()
    if a.shape != b.shape:
        raise LengthMismatch("psi_hat and psi0 lengths differ")
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.sqrt(n) * (a - b)


def t_statistics(
    psi_hat: np.ndarray, psi0: np.ndarray, se: np.ndarray, n: int
) -> np.ndarray:
    """Standardized statistics sqrt(n) * (psi_hat - psi0) / se."""
    diff = difference_statistics(psi_hat, psi0, n)
    s = np.asarray(se, dtype=float).ravel()
    if s.shape != diff.shape:
        raise LengthMismatch("standard error length differs")
    bad = np.flatnonzero(s <= 0)
    if bad.size:
        raise ZeroStandardError(f"nonpositive standard error at indices {bad.tolist()}")
    return diff / s


# ---------------------------------------------------------------------------
# null distribution estimation
# ---------------------------------------------------------------------------


def _evaluate_replicate(
    b: int,
    data: SampleData,
    stat: StatisticComputer,
    scheme: Scheme,
    seed: int,
    stream_prefix: tuple[int, ...],
    retry_cap: int,
) -> tuple[np.ndarray, int]:
    rng = stream(seed, stream_prefix + (b,))
    n = data.n_samples
    last: ComputationError | None = None
    for attempt in range(retry_cap + 1):
        try:
            if scheme == "bootstrap_nonparam":
                resampled = data.take(rng.integers(0, n, size=n))
            else:
                resampled = data.with_permuted_labels(rng.permutation(n))
            if stat.pass_replicate:
                t = np.asarray(stat.func(resampled, b), dtype=float).ravel()
            else:
                t = np.asarray(stat.func(resampled), dtype=float).ravel()
        except ComputationError as exc:
            last = exc
            continue
        if t.shape[0] != stat.n_stats:
            raise LengthMismatch(
                f"statistic returned length {t.shape[0]}, expected {stat.n_stats}"
            )
        if not np.isfinite(t).all():
            last = ComputationError("non-finite statistic value")
            continue
        return t, attempt
    raise DegenerateReplicate(
        f"replicate {b} stayed degenerate after {retry_cap} redraws: {last}"
    )


def resample_null(
    data: SampleData,
    stat: StatisticComputer,
    B: int,
    scheme: Scheme = "bootstrap_nonparam",
    seed: int = 0,
    transform: Transform = "shift_only",
    tau0: np.ndarray | None = None,
    stream_prefix: tuple[int, ...] = (DOMAIN_RESAMPLE,),
    workers: int = 1,
    retry_cap: int = 100,
) -> NullDistributionEstimate:
    """Estimate the null-transformed statistic distribution by resampling.

    Draws B unit resamples (bootstrap: joint (X, Y) with replacement;
    permutation: labels against fixed X), evaluates ``stat`` on each,
    recenters rows at their resampling means, and, for shift_and_scale,
    shrinks each row's spread to at most ``tau0`` (variances computed
    with divisor B).  Degenerate replicates are redrawn on their own
    stream up to ``retry_cap`` times so exactly B columns come back.
    """
    if B < 2:
        raise ValueError("B must be >= 2")
    if scheme not in ("bootstrap_nonparam", "permutation"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if transform not in ("shift_only", "shift_and_scale"):
        raise ValueError(f"unknown transform {transform!r}")

    m = stat.n_stats
    t_matrix = np.empty((m, B))
    redraws = np.zeros(B, dtype=int)

    def run(b: int) -> None:
        t, attempts = _evaluate_replicate(
            b, data, stat, scheme, seed, stream_prefix, retry_cap
        )
        t_matrix[:, b] = t
        redraws[b] = attempts

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(B)))
    else:
        for b in range(B):
            run(b)

    row_means = np.sum(t_matrix, axis=1) / B
    centered = t_matrix - row_means[:, None]
    row_vars = np.sum(centered**2, axis=1) / B
    if transform == "shift_and_scale":
        bound = (
            stat.null_scale_bound()
            if tau0 is None
            else np.broadcast_to(np.asarray(tau0, float), (m,))
        )
        scale = np.ones(m)
        positive = row_vars > 0
        scale[positive] = np.sqrt(
            np.minimum(1.0, bound[positive] / row_vars[positive])
        )
    else:
        scale = np.ones(m)
    z = scale[:, None] * centered + stat.null_shift()[:, None]
    col_maxima = np.max(_magnitude(z, stat.sidedness), axis=0)
    return NullDistributionEstimate(
        z_matrix=z,
        col_maxima=col_maxima,
        row_means=row_means,
        row_vars=row_vars,
        scheme=scheme,
        seed=seed,
        sidedness=stat.sidedness,
        n_redraws=int(np.sum(redraws)),
    )


# ---------------------------------------------------------------------------
# cutoffs, adjusted p-values, rejections
# ---------------------------------------------------------------------------


def _order_statistic_index(alpha: float, B: int) -> int:
    """Smallest k with k/B >= 1 - alpha, guarded against float noise."""
    k = B - int(math.floor(alpha * B + 1e-9))
    return min(max(k, 1), B)


def maxt_cutoff(null: NullDistributionEstimate, alpha: float) -> float:
    """Common cutoff: the smallest value whose empirical coverage among
    the B column maxima reaches 1 - alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    ordered = np.sort(null.col_maxima)
    k = _order_statistic_index(alpha, null.n_resamples)
    return float(ordered[k - 1])


def maxt_adjusted_p(
    null: NullDistributionEstimate, observed: np.ndarray
) -> np.ndarray:
    """Proportion of column maxima at or above each observed statistic."""
    t = np.asarray(observed, dtype=float).ravel()
    if t.shape[0] != null.n_stats:
        raise LengthMismatch(
            f"observed length {t.shape[0]} != statistic count {null.n_stats}"
        )
    magnitudes = _magnitude(t, null.sidedness)
    hits = null.col_maxima[None, :] >= magnitudes[:, None]
    return np.sum(hits, axis=1) / null.n_resamples


def rejection_set(
    adjusted_p: np.ndarray,
    alpha: float,
    magnitudes: np.ndarray | None = None,
) -> tuple[frozenset[int], tuple[int, ...]]:
    """Indices with adjusted p <= alpha, plus the significance ordering.

    Ordering: adjusted p ascending, then statistic magnitude descending,
    then index ascending; the magnitude tie-break keeps output files
    stable when p-values tie.
    """
    p = np.asarray(adjusted_p, dtype=float).ravel()
    if ((p < 0) | (p > 1)).any() or not np.isfinite(p).all():
        raise OutOfRangeP("adjusted p-values must lie in [0, 1]")
    m = p.shape[0]
    mag = np.zeros(m) if magnitudes is None else np.asarray(magnitudes, float).ravel()
    if mag.shape[0] != m:
        raise LengthMismatch("magnitude length differs from p-values")
    order = np.lexsort((np.arange(m), -mag, p))
    rejected = frozenset(int(i) for i in np.flatnonzero(p <= alpha))
    return rejected, tuple(int(i) for i in order)


def single_step_maxt(
    observed: np.ndarray, null: NullDistributionEstimate, alpha: float
) -> MtpResult:
    """Assemble the full maxT decision record for observed statistics."""
    t = np.asarray(observed, dtype=float).ravel()
    p = maxt_adjusted_p(null, t)
    cutoff = maxt_cutoff(null, alpha)
    rejected, ordering = rejection_set(p, alpha, _magnitude(t, null.sidedness))
    return MtpResult(
        observed=t,
        cutoff=cutoff,
        adjusted_p=p,
        alpha=alpha,
        rejected=rejected,
        ordering=ordering,
        n_resamples=null.n_resamples,
        sidedness=null.sidedness,
    )


# ---------------------------------------------------------------------------
# error accounting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfusionCounts:
    """Cell counts of the rejection-by-truth table for one trial."""

    V: int
    U: int
    W: int
    S: int
    R: int
    h0: int
    h1: int
    M: int

    def __post_init__(self):
        if min(self.V, self.U, self.W, self.S, self.R, self.h0, self.h1) < 0:
            raise ValueError("negative count")
        ok = (
            self.W == self.h0 - self.V
            and self.S == self.R - self.V
            and self.U == self.h1 - self.S
            and self.R == self.V + self.S
            and self.M == self.h0 + self.h1
        )
        if not ok:
            raise ValueError("confusion counts violate table identities")

    @property
    def false_positive_proportion(self) -> float:
        # convention: V/R is 0 when nothing is rejected
        return self.V / self.R if self.R > 0 else 0.0


def confusion(
    truth: set[int], rejected: set[int], m_total: int
) -> ConfusionCounts:
    """Tally one trial's decisions against the true-null index set."""
    truth = set(truth)
    rejected = set(rejected)
    universe = set(range(m_total))
    if not truth <= universe or not rejected <= universe:
        raise ValueError("indices outside 0..M-1")
    v = len(rejected & truth)
    s = len(rejected - truth)
    h0 = len(truth)
    return ConfusionCounts(
        V=v,
        U=(m_total - h0) - s,
        W=h0 - v,
        S=s,
        R=len(rejected),
        h0=h0,
        h1=m_total - h0,
        M=m_total,
    )


@dataclass(frozen=True)
class ErrorRates:
    """Monte-Carlo error rates over repeated trials, with standard errors."""

    gfwer: float
    tppfp: float
    fdr: float
    gfwer_stderr: float
    tppfp_stderr: float
    fdr_stderr: float
    q: float
    n_trials: int

    @property
    def fwer(self) -> float:
        # gFWER at q = 0 is the plain family-wise error rate
        return self.gfwer if self.q == 0 else float("nan")


def error_rates(samples: Sequence[ConfusionCounts], q: float = 0.0) -> ErrorRates:
    """gFWER(q) = P(V > q), TPPFP(q) = P(V/R > q), FDR = E[V/R]."""
    if not samples:
        raise ValueError("no trials supplied")
    n = len(samples)
    v = np.array([c.V for c in samples], dtype=float)
    prop = np.array([c.false_positive_proportion for c in samples])
    gfwer = float(np.mean(v > q))
    tppfp = float(np.mean(prop > q))
    fdr = float(np.mean(prop))
    se_prop = lambda p: math.sqrt(p * (1 - p) / n)  # noqa: E731
    fdr_se = float(np.std(prop, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ErrorRates(
        gfwer=gfwer,
        tppfp=tppfp,
        fdr=fdr,
        gfwer_stderr=se_prop(gfwer),
        tppfp_stderr=se_prop(tppfp),
        fdr_stderr=fdr_se,
        q=q,
        n_trials=n,
    )


# ---------------------------------------------------------------------------
# debug dump of the null matrix
# ---------------------------------------------------------------------------

_MAGIC = b"ZNB1"
_HEADER = struct.Struct("<4sIIQBB")  # magic, M, B, seed, scheme, sidedness


def dump_null(null: NullDistributionEstimate, path) -> None:
    """Write Z column-major with a little-endian header (debug aid)."""
    header = _HEADER.pack(
        _MAGIC,
        null.n_stats,
        null.n_resamples,
        null.seed,
        _SCHEME_CODE[null.scheme],
        _SIDEDNESS_CODE[null.sidedness],
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.asfortranarray(null.z_matrix).tobytes(order="F"))


def load_null(path) -> tuple[np.ndarray, dict]:
    """Read back a dumped Z matrix and its header metadata."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, m, b, seed, scheme_code, sided_code = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise ValueError("not a null-matrix dump")
        z = np.frombuffer(fh.read(8 * m * b), dtype="<f8").reshape((m, b), order="F")
    scheme = {v: k for k, v in _SCHEME_CODE.items()}[scheme_code]
    sidedness = {v: k for k, v in _SIDEDNESS_CODE.items()}[sided_code]
    return z, {"seed": seed, "scheme": scheme, "sidedness": sidedness}
