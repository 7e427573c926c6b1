"""Estimation of gene-parameter profiles from two-class expression samples.

Covers the preprocessing steps (intensity/IQR gene filtering, probe
collapsing) and the differential-expression profile estimators: mean
differences, Welch t values, and binary profiles selected by rank count
or by adjusted p-value.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal, Mapping

import numpy as np

from .association import ParameterProfile, _readonly
from .errors import (
    EmptyResultWarning,
    GroupTooSmall,
    LengthMismatch,
    OutOfRangeP,
    UnmappedProbe,
    ZeroDenominator,
)

Side = Literal["two_sided", "upper", "lower"]
LambdaScale = Literal["welch", "per_sqrt_n"]


@dataclass(frozen=True)
class SampleData:
    """n observations of (expression vector, class label) over G genes.

    ``expressions`` is n x G on a log scale; ``class_names`` orders the
    two classes as (reference, treatment).
    """

    expressions: np.ndarray
    labels: tuple[str, ...]
    class_names: tuple[str, str]
    gene_ids: tuple[str, ...]

    def __post_init__(self):
        x = _readonly(np.atleast_2d(self.expressions))
        object.__setattr__(self, "expressions", x)
        object.__setattr__(self, "labels", tuple(str(y) for y in self.labels))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "gene_ids", tuple(self.gene_ids))
        if len(self.class_names) != 2 or self.class_names[0] == self.class_names[1]:
            raise ValueError("class_names must be two distinct names")
        if x.shape != (len(self.labels), len(self.gene_ids)):
            raise LengthMismatch(
                f"expressions {x.shape} does not match "
                f"{len(self.labels)} samples x {len(self.gene_ids)} genes"
            )
        if not np.isfinite(x).all():
            raise ValueError("expression matrix contains non-finite values")
        if len(set(self.gene_ids)) != len(self.gene_ids):
            raise ValueError("duplicate gene ids")
        present = set(self.labels)
        if not present <= set(self.class_names):
            raise ValueError(f"labels outside class_names: {present - set(self.class_names)}")
        n0, n1 = self.class_counts
        if n0 < 2 or n1 < 2:
            raise GroupTooSmall(f"class sizes ({n0}, {n1}) must both be >= 2")

    @property
    def n_samples(self) -> int:
        return self.expressions.shape[0]

    @property
    def n_genes(self) -> int:
        return self.expressions.shape[1]

    @property
    def class_counts(self) -> tuple[int, int]:
        return (
            sum(1 for y in self.labels if y == self.class_names[0]),
            sum(1 for y in self.labels if y == self.class_names[1]),
        )

    def class_mask(self, k: int) -> np.ndarray:
        name = self.class_names[k]
        return np.fromiter((y == name for y in self.labels), bool, self.n_samples)

    def take(self, indices: np.ndarray) -> "SampleData":
        """Unit-level subset/resample; revalidates the class-size invariant."""
        idx = np.asarray(indices)
        return SampleData(
            self.expressions[idx],
            tuple(self.labels[i] for i in idx),
            self.class_names,
            self.gene_ids,
        )

    def with_permuted_labels(self, perm: np.ndarray) -> "SampleData":
        return SampleData(
            self.expressions,
            tuple(self.labels[i] for i in perm),
            self.class_names,
            self.gene_ids,
        )

    def select_genes(self, keep: np.ndarray) -> "SampleData":
        keep = np.asarray(keep)
        return SampleData(
            self.expressions[:, keep],
            self.labels,
            self.class_names,
            tuple(self.gene_ids[i] for i in keep),
        )


@dataclass(frozen=True)
class GroupSummary:
    """Per-class per-gene means and unbiased variances."""

    mean_by_class: np.ndarray
    var_by_class: np.ndarray
    counts: tuple[int, int]
    gene_ids: tuple[str, ...]

    def __post_init__(self):
        mean = _readonly(self.mean_by_class)
        var = _readonly(self.var_by_class)
        object.__setattr__(self, "mean_by_class", mean)
        object.__setattr__(self, "var_by_class", var)
        object.__setattr__(self, "gene_ids", tuple(self.gene_ids))
        g = len(self.gene_ids)
        if mean.shape != (2, g) or var.shape != (2, g):
            raise LengthMismatch("summary matrices must be 2 x G")
        if (var < 0).any():
            raise ValueError("negative variance in group summary")

    @property
    def n_samples(self) -> int:
        return self.counts[0] + self.counts[1]


@dataclass(frozen=True)
class FilterReport:
    kept_indices: tuple[int, ...]
    kept_gene_ids: tuple[str, ...]
    n_failed_intensity: int
    n_failed_iqr: int


@dataclass(frozen=True)
class TopCountSelection:
    """Binary profile from a rank cut plus the realized selection size.

    Boundary ties make the realized size exceed the requested count; the
    rank rule is applied verbatim rather than breaking ties arbitrarily.
    """

    profile: ParameterProfile
    requested: int
    realized_size: int


def _ceil_frac(fraction: float, n: int) -> int:
    # guard against 0.1 * 30 = 3.0000000000000004-style float noise
    return int(math.ceil(fraction * n - 1e-9))


def filter_genes(
    data: SampleData,
    intensity_threshold: float = 100.0,
    fraction: float = 0.25,
    iqr_threshold: float = 0.5,
    raw_scale_base: float = 2.0,
) -> tuple[SampleData, FilterReport]:
    """Keep genes expressed above ``intensity_threshold`` (raw scale) in at
    least ``ceil(fraction * n)`` samples and with log-scale IQR above
    ``iqr_threshold``.

    Quartiles use linear-interpolation quantiles at 0.25/0.75 (numpy's
    default); the filter is a preprocessing knob, not an inferential
    quantity, so any fixed deterministic convention serves.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    x = data.expressions
    n = data.n_samples
    log_cut = math.log(intensity_threshold, raw_scale_base)
    need = _ceil_frac(fraction, n)
    bright = np.sum(x > log_cut, axis=0) >= need
    q25, q75 = np.quantile(x, [0.25, 0.75], axis=0, method="linear")
    spread = (q75 - q25) > iqr_threshold
    keep = bright & spread
    report = FilterReport(
        kept_indices=tuple(int(i) for i in np.flatnonzero(keep)),
        kept_gene_ids=tuple(g for g, k in zip(data.gene_ids, keep) if k),
        n_failed_intensity=int(np.sum(~bright)),
        n_failed_iqr=int(np.sum(~spread)),
    )
    if not keep.any():
        warnings.warn("no gene passed the expression filter", EmptyResultWarning)
        empty = SampleData(
            np.empty((n, 0)), data.labels, data.class_names, ()
        )
        return empty, report
    return data.select_genes(np.flatnonzero(keep)), report


def collapse_probes(
    data: SampleData, probe_to_gene: Mapping[str, str]
) -> SampleData:
    """Average rows mapping to the same gene id (one row per gene, sorted)."""
    missing = [p for p in data.gene_ids if p not in probe_to_gene]
    if missing:
        raise UnmappedProbe(f"{len(missing)} probes without mapping, e.g. {missing[0]!r}")
    targets = sorted({probe_to_gene[p] for p in data.gene_ids})
    columns = np.empty((data.n_samples, len(targets)))
    for j, gene in enumerate(targets):
        cols = [i for i, p in enumerate(data.gene_ids) if probe_to_gene[p] == gene]
        columns[:, j] = np.sum(data.expressions[:, cols], axis=1) / len(cols)
    return SampleData(columns, data.labels, data.class_names, tuple(targets))


def group_summary(data: SampleData) -> GroupSummary:
    """Empirical per-class means and unbiased per-class variances."""
    mean = np.empty((2, data.n_genes))
    var = np.empty((2, data.n_genes))
    for k in (0, 1):
        block = data.expressions[data.class_mask(k)]
        nk = block.shape[0]
        mean[k] = np.sum(block, axis=0) / nk
        var[k] = np.sum((block - mean[k]) ** 2, axis=0) / (nk - 1)
    return GroupSummary(mean, var, data.class_counts, data.gene_ids)


def lambda_d(summary: GroupSummary) -> ParameterProfile:
    """Per-gene difference of class means (treatment minus reference)."""
    diff = summary.mean_by_class[1] - summary.mean_by_class[0]
    return ParameterProfile(diff, "continuous", summary.gene_ids)


def lambda_t(summary: GroupSummary, scale: LambdaScale = "welch") -> ParameterProfile:
    """Per-gene Welch t; ``per_sqrt_n`` divides by sqrt(total sample size).

    The two scalings differ by the constant 1/sqrt(n) only, so they rank
    genes identically; ``welch`` matches the conventional t magnitude.
    """
    if scale not in ("welch", "per_sqrt_n"):
        raise ValueError(f"unknown scale {scale!r}")
    n0, n1 = summary.counts
    diff = summary.mean_by_class[1] - summary.mean_by_class[0]
    denom = np.sqrt(summary.var_by_class[1] / n1 + summary.var_by_class[0] / n0)
    bad = denom == 0.0
    if bad.any():
        genes = [summary.gene_ids[i] for i in np.flatnonzero(bad)]
        exc = ZeroDenominator(
            f"zero Welch denominator for {len(genes)} genes, e.g. {genes[0]!r}"
        )
        exc.genes = genes
        raise exc
    t = diff / denom
    if scale == "per_sqrt_n":
        t = t / math.sqrt(summary.n_samples)
    return ParameterProfile(t, "continuous", summary.gene_ids)


def binary_profile_top_count(
    lam_t: ParameterProfile, count: int, side: Side = "two_sided"
) -> TopCountSelection:
    """Mark the ``count`` genes with the largest score as selected.

    The score is |t|, t, or -t for two_sided/upper/lower.  Gene g is
    selected iff the number of genes scoring <= score(g) exceeds
    G - count, so boundary ties select every tied gene.
    """
    g = lam_t.n_genes
    if not 1 <= count <= g:
        raise ValueError(f"count must lie in [1, {g}]")
    if side == "two_sided":
        score = np.abs(lam_t.values)
    elif side == "upper":
        score = lam_t.values.copy()
    elif side == "lower":
        score = -lam_t.values
    else:
        raise ValueError(f"unknown side {side!r}")
    order = np.sort(score)
    rank_from_below = np.searchsorted(order, score, side="right")
    selected = rank_from_below > g - count
    profile = ParameterProfile(selected.astype(float), "binary", lam_t.gene_ids)
    return TopCountSelection(profile, count, int(np.sum(selected)))


def binary_profile_by_adjp(
    adjusted_p: np.ndarray, alpha: float, gene_ids: tuple[str, ...]
) -> ParameterProfile:
    """Indicator of adjusted p-value <= alpha (boundary inclusive)."""
    p = np.asarray(adjusted_p, dtype=float).ravel()
    if p.shape[0] != len(gene_ids):
        raise LengthMismatch("p-value vector does not match gene ids")
    if ((p < 0) | (p > 1)).any() or not np.isfinite(p).all():
        raise OutOfRangeP("adjusted p-values must lie in [0, 1]")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return ParameterProfile((p <= alpha).astype(float), "binary", tuple(gene_ids))
