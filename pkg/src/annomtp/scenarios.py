"""End-to-end testing scenarios: estimate a gene-parameter profile, measure
its association with every annotation column, test with bootstrap maxT.

Three scenario families are provided:

- ``tt``  -- Welch-t association against |standardized DE profile|,
  two-sided;
- ``dt``  -- Welch-t association against |mean-difference DE profile|,
  two-sided;
- ``neq_chi`` -- chi-square association against a binary DE profile
  (selected by rank count or by an inner gene-level adjusted-p test),
  one-sided upper.

The bootstrap resamples raw (expression, label) units and replays the
entire estimation chain, inner test included, on every replicate.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .association import (
    AnnotationMatrix,
    ParameterProfile,
    associate,
    chisq2x2_association,
)
from .engine import (
    MtpResult,
    Scheme,
    StatisticComputer,
    Transform,
    difference_statistics,
    resample_null,
    single_step_maxt,
)
from .errors import AlignmentError, ConfigError, DegenerateMargin, TermSetMismatch
from .profiles import (
    LambdaScale,
    SampleData,
    binary_profile_by_adjp,
    binary_profile_top_count,
    group_summary,
    lambda_d,
    lambda_t,
)
from .rng import DOMAIN_INNER, DOMAIN_OBSERVED_INNER, DOMAIN_RESAMPLE

Scenario = Literal["tt", "dt", "neq_chi"]


@dataclass(frozen=True)
class DeEstimatorConfig:
    """How the binary DE profile is estimated in the neq_chi scenario."""

    method: Literal["top_count", "adjp"]
    count: int | None = None
    alpha_inner: float = 0.05
    b_inner: int = 1000
    scheme_inner: Scheme = "permutation"
    transform_inner: Transform = "shift_and_scale"

    def __post_init__(self):
        if self.method == "top_count":
            if self.count is None or self.count < 1:
                raise ConfigError("top_count estimator needs a positive count")
        elif self.method == "adjp":
            if not 0.0 < self.alpha_inner < 1.0:
                raise ConfigError("adjp estimator needs alpha_inner in (0, 1)")
            if self.b_inner < 2:
                raise ConfigError("adjp estimator needs b_inner >= 2")
        else:
            raise ConfigError(f"unknown DE estimator {self.method!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: Scenario
    B: int = 5000
    alpha: float = 0.05
    seed: int = 0
    de_estimator: DeEstimatorConfig | None = None
    lambda_scale: LambdaScale = "welch"
    workers: int = 1
    retry_cap: int = 100

    def __post_init__(self):
        if self.scenario not in ("tt", "dt", "neq_chi"):
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.scenario == "neq_chi" and self.de_estimator is None:
            raise ConfigError("neq_chi requires a DE estimator")
        if self.scenario != "neq_chi" and self.de_estimator is not None:
            raise ConfigError(f"scenario {self.scenario} takes no DE estimator")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.B < 2:
            raise ConfigError("B must be >= 2")

    @property
    def sidedness(self) -> str:
        return "one_sided_upper" if self.scenario == "neq_chi" else "two_sided"

    @property
    def psi0(self) -> float:
        # chi-square(1) mean for the one-sided chi-square test, else 0
        return 1.0 if self.scenario == "neq_chi" else 0.0


@dataclass(frozen=True)
class TermRow:
    term_id: str
    n_annotated: int
    psi_hat: float
    stat: float
    adj_p: float
    rank: int


@dataclass(frozen=True)
class ScenarioReport:
    """Per-term results in significance order plus the run manifest."""

    rows: tuple[TermRow, ...]
    term_ids: tuple[str, ...]
    config: ScenarioConfig
    result: MtpResult
    manifest: dict = field(compare=False)

    def top_terms(self, r: int) -> set[str]:
        return {row.term_id for row in self.rows[:r]}


# ---------------------------------------------------------------------------
# gene-level differential expression test (used standalone and as the
# inner estimator of the neq_chi scenario)
# ---------------------------------------------------------------------------


def gene_level_de_test(
    data: SampleData,
    B: int,
    scheme: Scheme = "bootstrap_nonparam",
    seed: int = 0,
    alpha: float = 0.05,
    lambda_scale: LambdaScale = "welch",
    transform: Transform = "shift_and_scale",
    stream_prefix: tuple[int, ...] = (DOMAIN_RESAMPLE,),
    workers: int = 1,
    retry_cap: int = 100,
) -> tuple[ParameterProfile, MtpResult]:
    """Two-sided maxT test of per-gene differential expression.

    The test statistic is the per-gene Welch t; the default transform
    recenters and bounds the resampled rows at unit variance, the usual
    choice for t-statistics.
    """

    def statistic(d: SampleData) -> np.ndarray:
        return lambda_t(group_summary(d), lambda_scale).values

    observed = lambda_t(group_summary(data), lambda_scale)
    stat = StatisticComputer(
        func=statistic,
        n_stats=data.n_genes,
        sidedness="two_sided",
        tau0=np.ones(data.n_genes),
    )
    null = resample_null(
        data,
        stat,
        B,
        scheme=scheme,
        seed=seed,
        transform=transform,
        stream_prefix=stream_prefix,
        workers=workers,
        retry_cap=retry_cap,
    )
    return observed, single_step_maxt(observed.values, null, alpha)


# ---------------------------------------------------------------------------
# scenario runner
# ---------------------------------------------------------------------------


class _ChiSquareFlags:
    """Thread-safe count of replicates whose chi-square table collapsed."""

    def __init__(self):
        self._lock = threading.Lock()
        self.replicates = 0
        self.observed_terms = 0

    def add(self, n_degenerate: int, observed: bool) -> None:
        if n_degenerate == 0:
            return
        with self._lock:
            if observed:
                self.observed_terms += n_degenerate
            else:
                self.replicates += 1


def _chisq_psi(
    a: AnnotationMatrix, lam: ParameterProfile
) -> tuple[np.ndarray, int]:
    """Per-column chi-square with collapsed tables scored as 0 association.

    A collapsed margin (e.g. a replicate selecting zero DE genes) is
    informative about the replicate, so it is kept and flagged rather
    than redrawn.
    """
    psi = np.empty(a.n_terms)
    degenerate = 0
    for j in range(a.n_terms):
        try:
            psi[j] = chisq2x2_association(a.values[:, j], lam)
        except DegenerateMargin:
            psi[j] = 0.0
            degenerate += 1
    return psi, degenerate


def _welch_psi(a: AnnotationMatrix, lam: ParameterProfile) -> np.ndarray:
    return associate(a, lam, "welch_t", 0.0, absolute=True).psi


def run_scenario(
    data: SampleData, a: AnnotationMatrix, cfg: ScenarioConfig
) -> ScenarioReport:
    """Observed chain, bootstrap null replaying the chain, maxT decisions."""
    if data.gene_ids != a.gene_ids:
        raise AlignmentError("expression data and annotation matrix gene ids differ")

    n = data.n_samples
    psi0 = np.full(a.n_terms, cfg.psi0)
    flags = _ChiSquareFlags()
    de_counts: dict[str, int] = {}
    observed_psi: dict[str, np.ndarray] = {}

    def de_profile(d: SampleData, replicate: int | None) -> ParameterProfile:
        est = cfg.de_estimator
        if est.method == "top_count":
            lam_t = lambda_t(group_summary(d), cfg.lambda_scale)
            return binary_profile_top_count(lam_t, est.count, "two_sided").profile
        prefix = (
            (DOMAIN_OBSERVED_INNER,)
            if replicate is None
            else (DOMAIN_INNER, replicate)
        )
        _, inner = gene_level_de_test(
            d,
            B=est.b_inner,
            scheme=est.scheme_inner,
            seed=cfg.seed,
            alpha=est.alpha_inner,
            lambda_scale=cfg.lambda_scale,
            transform=est.transform_inner,
            stream_prefix=prefix,
            workers=1,
            retry_cap=cfg.retry_cap,
        )
        return binary_profile_by_adjp(
            inner.adjusted_p, est.alpha_inner, d.gene_ids
        )

    def chain(d: SampleData, replicate: int | None) -> np.ndarray:
        if cfg.scenario == "tt":
            lam = lambda_t(group_summary(d), cfg.lambda_scale)
            psi = _welch_psi(a, lam)
        elif cfg.scenario == "dt":
            lam = lambda_d(group_summary(d))
            psi = _welch_psi(a, lam)
        else:
            lam = de_profile(d, replicate)
            if replicate is None:
                de_counts["observed"] = int(np.sum(lam.values))
            psi, n_degenerate = _chisq_psi(a, lam)
            flags.add(n_degenerate, observed=replicate is None)
        if replicate is None:
            observed_psi["value"] = psi
        return difference_statistics(psi, psi0, n)

    observed_stats = chain(data, None)
    stat = StatisticComputer(
        func=chain,
        n_stats=a.n_terms,
        sidedness=cfg.sidedness,
        pass_replicate=True,
    )
    null = resample_null(
        data,
        stat,
        cfg.B,
        scheme="bootstrap_nonparam",
        seed=cfg.seed,
        transform="shift_only",
        stream_prefix=(DOMAIN_RESAMPLE,),
        workers=cfg.workers,
        retry_cap=cfg.retry_cap,
    )
    result = single_step_maxt(observed_stats, null, cfg.alpha)

    counts = a.column_sums()
    psi_hat = observed_stats / np.sqrt(n) + psi0
    rows = tuple(
        TermRow(
            term_id=a.term_ids[m],
            n_annotated=int(counts[m]),
            psi_hat=float(psi_hat[m]),
            stat=float(observed_stats[m]),
            adj_p=float(result.adjusted_p[m]),
            rank=rank + 1,
        )
        for rank, m in enumerate(result.ordering)
    )
    from . import __version__
    from .rng import GENERATOR_ID

    manifest = {
        "version": __version__,
        "rng": GENERATOR_ID,
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "B": cfg.B,
        "alpha": cfg.alpha,
        "sidedness": cfg.sidedness,
        "psi0": cfg.psi0,
        "lambda_scale": cfg.lambda_scale,
        "n_redraws": null.n_redraws,
        "chi2_degenerate_replicates": flags.replicates,
        "chi2_degenerate_observed_terms": flags.observed_terms,
        "realized_de_count": de_counts.get("observed"),
        "de_estimator": None
        if cfg.de_estimator is None
        else {
            "method": cfg.de_estimator.method,
            "count": cfg.de_estimator.count,
            "alpha_inner": cfg.de_estimator.alpha_inner,
            "b_inner": cfg.de_estimator.b_inner,
            "scheme_inner": cfg.de_estimator.scheme_inner,
        },
    }
    return ScenarioReport(
        rows=rows,
        term_ids=a.term_ids,
        config=cfg,
        result=result,
        manifest=manifest,
    )


def compare_scenarios(
    reports: Sequence[ScenarioReport], r_max: int
) -> dict[tuple[int, int], list[int]]:
    """Pairwise |top-r intersection| for r = 1..r_max over report orderings."""
    if r_max < 1:
        raise ValueError("r_max must be >= 1")
    term_sets = [frozenset(rep.term_ids) for rep in reports]
    if len(set(term_sets)) > 1:
        raise TermSetMismatch("reports cover different term sets")
    overlaps: dict[tuple[int, int], list[int]] = {}
    for i in range(len(reports)):
        for j in range(i + 1, len(reports)):
            counts = [
                len(reports[i].top_terms(r) & reports[j].top_terms(r))
                for r in range(1, r_max + 1)
            ]
            overlaps[(i, j)] = counts
    return overlaps
