"""Association measures between annotation profiles and a gene-parameter profile.

Pure numerical kernels: each measure maps one length-G annotation column
and a length-G gene-parameter vector to a scalar, and ``associate``
applies a measure across all columns of an annotation matrix.

All reductions go through ``numpy.sum`` (pairwise accumulation, no BLAS),
so results are bitwise reproducible across runs and worker counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np

from .errors import (
    AlignmentError,
    ComputationError,
    DegenerateMargin,
    GroupTooSmall,
    LengthMismatch,
    NoUsableStratum,
    ZeroDenominator,
    ZeroVariance,
)

Measure = Literal["pearson", "chisq2x2", "sum", "welch_t", "marginal_causal"]
ProfileKind = Literal["continuous", "binary"]

MEASURES = ("pearson", "chisq2x2", "sum", "welch_t", "marginal_causal")


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class AnnotationMatrix:
    """Fixed G x M annotation profile matrix.

    Columns are per-feature annotation profiles over a common ordered
    gene universe.  ``binary`` asserts that every entry is exactly 0 or 1.
    """

    values: np.ndarray
    gene_ids: tuple[str, ...]
    term_ids: tuple[str, ...]
    binary: bool = True

    def __post_init__(self):
        v = _readonly(np.atleast_2d(self.values))
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "gene_ids", tuple(self.gene_ids))
        object.__setattr__(self, "term_ids", tuple(self.term_ids))
        if v.ndim != 2:
            raise LengthMismatch("annotation values must be 2-dimensional")
        if v.shape != (len(self.gene_ids), len(self.term_ids)):
            raise LengthMismatch(
                f"annotation matrix {v.shape} does not match "
                f"{len(self.gene_ids)} genes x {len(self.term_ids)} terms"
            )
        if not np.isfinite(v).all():
            raise ValueError("annotation matrix contains non-finite entries")
        if len(set(self.gene_ids)) != len(self.gene_ids):
            raise ValueError("duplicate gene ids")
        if len(set(self.term_ids)) != len(self.term_ids):
            raise ValueError("duplicate term ids")
        if self.binary and not np.isin(v, (0.0, 1.0)).all():
            raise ValueError("matrix flagged binary but has entries outside {0, 1}")

    @property
    def n_genes(self) -> int:
        return self.values.shape[0]

    @property
    def n_terms(self) -> int:
        return self.values.shape[1]

    def column(self, term_id: str) -> np.ndarray:
        return self.values[:, self.term_ids.index(term_id)]

    def column_sums(self) -> np.ndarray:
        return np.sum(self.values, axis=0)


@dataclass(frozen=True)
class ParameterProfile:
    """Length-G gene-parameter vector, aligned with an annotation matrix."""

    values: np.ndarray
    kind: ProfileKind
    gene_ids: tuple[str, ...]

    def __post_init__(self):
        v = _readonly(np.asarray(self.values, dtype=float).ravel())
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "gene_ids", tuple(self.gene_ids))
        if self.kind not in ("continuous", "binary"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if v.shape[0] != len(self.gene_ids):
            raise LengthMismatch("profile length does not match gene ids")
        if not np.isfinite(v).all():
            raise ValueError("profile contains non-finite entries")
        if self.kind == "binary" and not np.isin(v, (0.0, 1.0)).all():
            raise ValueError("binary profile has entries outside {0, 1}")

    @property
    def n_genes(self) -> int:
        return self.values.shape[0]

    def absolute(self) -> "ParameterProfile":
        return ParameterProfile(np.abs(self.values), "continuous", self.gene_ids)


@dataclass(frozen=True)
class AssociationResult:
    """Per-feature association estimates and their null values."""

    psi: np.ndarray
    measure: Measure
    null_values: np.ndarray
    term_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        psi = _readonly(np.asarray(self.psi, dtype=float).ravel())
        nv = _readonly(np.asarray(self.null_values, dtype=float).ravel())
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "null_values", nv)
        object.__setattr__(self, "term_ids", tuple(self.term_ids))
        if not np.isfinite(psi).all():
            raise ValueError("association estimates contain non-finite entries")
        if nv.shape != psi.shape:
            raise LengthMismatch("null values do not match estimate length")
        if self.term_ids and len(self.term_ids) != psi.shape[0]:
            raise LengthMismatch("term ids do not match estimate length")


# ---------------------------------------------------------------------------
# scalar kernels
# ---------------------------------------------------------------------------


def _check_lengths(a_col: np.ndarray, lam: ParameterProfile) -> np.ndarray:
    a = np.asarray(a_col, dtype=float).ravel()
    if a.shape[0] != lam.n_genes:
        raise LengthMismatch(
            f"annotation column length {a.shape[0]} != profile length {lam.n_genes}"
        )
    return a


def pearson_association(a_col: np.ndarray, lam: ParameterProfile) -> float:
    """Pearson correlation between an annotation column and the profile.

    Raises ZeroVariance when either vector is constant: a correlation of
    a constant vector is undefined and silently clamping it would distort
    downstream null distributions.
    """
    a = _check_lengths(a_col, lam)
    x = lam.values
    g = a.shape[0]
    if g < 2:
        raise LengthMismatch("pearson correlation needs at least 2 genes")
    da = a - np.sum(a) / g
    dx = x - np.sum(x) / g
    ssa = float(np.sum(da * da))
    ssx = float(np.sum(dx * dx))
    if ssa == 0.0 or ssx == 0.0:
        raise ZeroVariance("constant input vector in pearson association")
    return float(np.sum(da * dx) / np.sqrt(ssa) / np.sqrt(ssx))


def _table_2x2(a: np.ndarray, x: np.ndarray) -> tuple[float, float, float, float]:
    g11 = float(np.sum(a * x))
    g10 = float(np.sum(a * (1.0 - x)))
    g01 = float(np.sum((1.0 - a) * x))
    g00 = float(np.sum((1.0 - a) * (1.0 - x)))
    return g00, g01, g10, g11


def chisq2x2_association(a_col: np.ndarray, lam: ParameterProfile) -> float:
    """Chi-square statistic of the 2x2 annotation-by-parameter table.

    G * (g00*g11 - g01*g10)^2 / (g0. * g.0 * g.1 * g1.), computed from
    the joint counts of the two binary vectors.
    """
    a = _check_lengths(a_col, lam)
    if lam.kind != "binary":
        raise ComputationError("chisq2x2 requires a binary parameter profile")
    if not np.isin(a, (0.0, 1.0)).all():
        raise ComputationError("chisq2x2 requires a binary annotation column")
    g00, g01, g10, g11 = _table_2x2(a, lam.values)
    row0, row1 = g00 + g01, g10 + g11
    col0, col1 = g00 + g10, g01 + g11
    if min(row0, row1, col0, col1) == 0.0:
        raise DegenerateMargin("empty row or column in 2x2 table")
    n = a.shape[0]
    det = g00 * g11 - g01 * g10
    return float(n * det * det / (row0 * row1 * col0 * col1))


def sum_association(a: AnnotationMatrix, lam: ParameterProfile) -> np.ndarray:
    """Per-column sums of profile values over annotated genes: A^T lambda.

    Columns are reduced one at a time so the result is bitwise equal to
    independent per-column evaluation (axis reductions round differently).
    """
    if a.n_genes != lam.n_genes:
        raise LengthMismatch(
            f"matrix has {a.n_genes} genes, profile has {lam.n_genes}"
        )
    return np.array(
        [np.sum(a.values[:, j] * lam.values) for j in range(a.n_terms)]
    )


def welch_t_association(a_col: np.ndarray, lam: ParameterProfile) -> float:
    """Welch two-sample t comparing profile values of annotated vs not.

    Group variances use the unbiased divisor (group size - 1).
    """
    a = _check_lengths(a_col, lam)
    x = lam.values
    mask1 = a == 1.0
    mask0 = a == 0.0
    if not (mask1 | mask0).all():
        raise ComputationError("welch_t requires a binary annotation column")
    y1 = int(np.sum(mask1))
    y0 = int(np.sum(mask0))
    if y1 < 2 or y0 < 2:
        raise GroupTooSmall(f"group sizes ({y1} annotated, {y0} unannotated) < 2")
    x1, x0 = x[mask1], x[mask0]
    m1 = float(np.sum(x1)) / y1
    m0 = float(np.sum(x0)) / y0
    v1 = float(np.sum((x1 - m1) ** 2)) / (y1 - 1)
    v0 = float(np.sum((x0 - m0) ** 2)) / (y0 - 1)
    denom = np.sqrt(v1 / y1 + v0 / y0)
    if denom == 0.0:
        raise ZeroDenominator("both group variances are zero")
    return float((m1 - m0) / denom)


def marginal_causal_association(
    a_col: np.ndarray, parent_cols: np.ndarray, lam: ParameterProfile
) -> float:
    """Difference of profile means between annotation states, averaged
    over strata of identical parent-annotation patterns.

    Strata containing only one annotation state carry no contrast and are
    excluded; the remaining stratum differences are weighted by stratum
    gene counts renormalized over the usable strata.
    """
    a = _check_lengths(a_col, lam)
    x = lam.values
    g = a.shape[0]
    parents = np.asarray(parent_cols, dtype=float)
    if parents.size == 0:
        parents = np.zeros((g, 0))
    if parents.shape[0] != g:
        raise LengthMismatch("parent matrix row count does not match profile")
    _, stratum = np.unique(parents, axis=0, return_inverse=True)

    diffs: list[float] = []
    weights: list[float] = []
    for s in np.unique(stratum):
        in_s = stratum == s
        a_s = a[in_s]
        x_s = x[in_s]
        n1 = int(np.sum(a_s == 1.0))
        n0 = int(np.sum(a_s == 0.0))
        if n1 == 0 or n0 == 0:
            continue
        m1 = float(np.sum(x_s[a_s == 1.0])) / n1
        m0 = float(np.sum(x_s[a_s == 0.0])) / n0
        diffs.append(m1 - m0)
        weights.append(float(np.sum(in_s)))
    if not diffs:
        raise NoUsableStratum("no stratum contains both annotation states")
    w = np.asarray(weights)
    return float(np.sum(w * np.asarray(diffs)) / np.sum(w))


# ---------------------------------------------------------------------------
# batch application
# ---------------------------------------------------------------------------

_KIND_REQUIRED: dict[str, ProfileKind | None] = {
    "pearson": "continuous",
    "chisq2x2": "binary",
    "sum": None,
    "welch_t": "continuous",
    "marginal_causal": "continuous",
}


def associate(
    a: AnnotationMatrix,
    lam: ParameterProfile,
    measure: Measure,
    null_values: float | np.ndarray = 0.0,
    absolute: bool = False,
    parents: Mapping[str, Sequence[str]] | None = None,
) -> AssociationResult:
    """Apply ``measure`` to every annotation column against the profile.

    ``absolute`` replaces the profile by its elementwise absolute value
    before measuring.  ``parents`` (term id -> parent term ids, columns
    of ``a``) is required only for the marginal_causal measure.  Kernel
    errors are re-raised with the offending term id prepended.
    """
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}")
    if a.gene_ids != lam.gene_ids:
        raise AlignmentError("annotation matrix and profile gene ids differ")
    if absolute:
        lam = lam.absolute()
    required = _KIND_REQUIRED[measure]
    if required is not None and lam.kind != required:
        raise ComputationError(
            f"measure {measure} requires a {required} profile, got {lam.kind}"
        )
    if measure == "chisq2x2" and not a.binary:
        raise ComputationError("chisq2x2 requires a binary annotation matrix")

    m = a.n_terms
    nv = np.broadcast_to(np.asarray(null_values, dtype=float), (m,)).copy()

    if measure == "sum":
        psi = sum_association(a, lam)
        return AssociationResult(psi, measure, nv, a.term_ids)

    psi = np.empty(m)
    for j, tid in enumerate(a.term_ids):
        col = a.values[:, j]
        try:
            if measure == "pearson":
                psi[j] = pearson_association(col, lam)
            elif measure == "chisq2x2":
                psi[j] = chisq2x2_association(col, lam)
            elif measure == "welch_t":
                psi[j] = welch_t_association(col, lam)
            else:
                parent_ids = list(parents.get(tid, ())) if parents else []
                idx = [a.term_ids.index(p) for p in parent_ids]
                psi[j] = marginal_causal_association(
                    col, a.values[:, idx], lam
                )
        except ComputationError as exc:
            raise type(exc)(f"term {tid}: {exc}") from exc
    return AssociationResult(psi, measure, nv, a.term_ids)
