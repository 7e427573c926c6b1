"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as
they pass.  Tolerances are pinned here and nowhere else.
"""

import math
import time

import numpy as np
import pytest

import oracles
import scenario_oracle
from conftest import (
    KINASE_ANCESTORS,
    KINASE_CHILDREN,
    KINASE_OFFSPRING,
    KINASE_PARENT,
    KINASE_TERM,
    random_annotations,
    random_dag,
)
from annomtp.association import (
    ParameterProfile,
    chisq2x2_association,
    marginal_causal_association,
    pearson_association,
    sum_association,
    welch_t_association,
)
from annomtp.association import AnnotationMatrix
from annomtp.cli import EXIT_OK, main
from annomtp.dag import OntologyDag, TermRecord, propagate_true_path
from annomtp.datasets import make_desk_dataset, write_desk_fixture
from annomtp.engine import (
    NullDistributionEstimate,
    confusion,
    maxt_adjusted_p,
    maxt_cutoff,
    rejection_set,
)
from annomtp.profiles import (
    SampleData,
    binary_profile_by_adjp,
    binary_profile_top_count,
)
from annomtp.rng import DOMAIN_OBSERVED_INNER, stream
from annomtp.scenarios import (
    DeEstimatorConfig,
    ScenarioConfig,
    gene_level_de_test,
    run_scenario,
)
from annomtp.simulate import SimulationSpec, run_simulation


def report(criterion: int, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance {criterion}/10] {status}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def cont(values):
    return ParameterProfile(
        values, "continuous", tuple(f"g{i}" for i in range(len(values)))
    )


def binp(values):
    return ParameterProfile(
        values, "binary", tuple(f"g{i}" for i in range(len(values)))
    )


def test_criterion_1_kernel_oracle_equivalence():
    rng = np.random.default_rng(1001)
    started = time.perf_counter()
    worst = 0.0
    identity_worst = 0.0
    per_kernel = 1000

    for _ in range(per_kernel):
        g = int(rng.integers(3, 30))
        a = rng.standard_normal(g)
        x = rng.standard_normal(g)
        delta = abs(
            pearson_association(a, cont(x)) - oracles.pearson_oracle(a, x)
        )
        worst = max(worst, delta)

    for _ in range(per_kernel):
        g = int(rng.integers(6, 40))
        a = (rng.random(g) < 0.5).astype(float)
        x = (rng.random(g) < 0.5).astype(float)
        if min(a.sum(), g - a.sum(), x.sum(), g - x.sum()) == 0:
            continue
        chi = chisq2x2_association(a, binp(x))
        worst = max(worst, abs(chi - oracles.chisq_oracle(a, x)))
        corr = pearson_association(a, cont(x))
        identity_worst = max(identity_worst, abs(chi - g * corr**2))

    for _ in range(per_kernel):
        g, m = int(rng.integers(2, 15)), int(rng.integers(1, 5))
        values = (rng.random((g, m)) < 0.5).astype(float)
        genes = tuple(f"g{i}" for i in range(g))
        matrix = AnnotationMatrix(values, genes, tuple(f"T{j}" for j in range(m)))
        lam = rng.standard_normal(g)
        mine = sum_association(matrix, cont(lam))
        ref = oracles.sum_oracle(values.tolist(), lam.tolist())
        worst = max(worst, float(np.max(np.abs(mine - np.asarray(ref)))))

    for _ in range(per_kernel):
        g = int(rng.integers(6, 30))
        a = np.zeros(g)
        a[rng.choice(g, size=int(rng.integers(2, g - 1)), replace=False)] = 1.0
        if a.sum() < 2 or g - a.sum() < 2:
            continue
        x = rng.standard_normal(g)
        delta = abs(welch_t_association(a, cont(x)) - oracles.welch_oracle(a, x))
        worst = max(worst, delta)

    for _ in range(per_kernel):
        g = int(rng.integers(4, 25))
        n_parents = int(rng.integers(0, 3))
        parents = (rng.random((g, n_parents)) < 0.5).astype(float)
        a = (rng.random(g) < 0.5).astype(float)
        x = rng.standard_normal(g)
        try:
            mine = marginal_causal_association(a, parents, cont(x))
        except Exception:
            continue
        ref = oracles.marginal_causal_oracle(a, parents, x)
        worst = max(worst, abs(mine - ref))

    elapsed = time.perf_counter() - started
    ok = worst <= 1e-10 and identity_worst <= 1e-10 and elapsed < 10.0
    report(
        1, ok,
        f"max |kernel - oracle| {worst:.2e} <= 1e-10, "
        f"chi2 = G*corr^2 within {identity_worst:.2e}, {elapsed:.1f}s < 10s",
    )


def test_criterion_2_maxt_hand_fixtures():
    col = np.array([[0.0, 1.0, 1.0, 2.0]])
    null = NullDistributionEstimate(
        z_matrix=col, col_maxima=col[0], row_means=col.mean(axis=1),
        row_vars=col.var(axis=1), scheme="bootstrap_nonparam", seed=0,
        sidedness="one_sided_upper",
    )
    cutoff_ok = maxt_cutoff(null, 0.25) == 1.0

    z = np.array([[1.0, -1.0, 0.0, 2.0], [0.0, 1.0, -1.0, 0.0]])
    null2 = NullDistributionEstimate(
        z_matrix=z, col_maxima=z.max(axis=0), row_means=z.mean(axis=1),
        row_vars=z.var(axis=1), scheme="bootstrap_nonparam", seed=0,
        sidedness="one_sided_upper",
    )
    p = maxt_adjusted_p(null2, np.array([1.5, 0.5]))
    p_ok = p.tolist() == [0.25, 0.75]
    report(
        2, cutoff_ok and p_ok,
        f"cutoff(maxima (0,1,1,2), alpha 0.25) = 1; p = {p.tolist()} = [0.25, 0.75]",
    )


def test_criterion_3_ranking_nestedness_duality():
    rng = np.random.default_rng(3003)
    violations = 0
    for _ in range(200):
        m = int(rng.integers(1, 21))
        b = int(rng.integers(2, 101))
        sided = "two_sided" if rng.random() < 0.5 else "one_sided_upper"
        z = rng.standard_normal((m, b))
        mag = np.abs(z) if sided == "two_sided" else z
        null = NullDistributionEstimate(
            z_matrix=z, col_maxima=mag.max(axis=0), row_means=z.mean(axis=1),
            row_vars=z.var(axis=1), scheme="bootstrap_nonparam", seed=0,
            sidedness=sided,
        )
        t = rng.standard_normal(m) * 2
        p = maxt_adjusted_p(null, t)
        f = np.abs(t) if sided == "two_sided" else t

        order = np.argsort(-f)
        if np.any(np.diff(p[order]) < 0):
            violations += 1
        previous = set()
        for alpha in np.linspace(0.05, 0.95, 7):
            rejected, _ = rejection_set(p, alpha, f)
            if not previous <= rejected:
                violations += 1
            previous = set(rejected)
            if rejected != {i for i in range(m) if p[i] <= alpha}:
                violations += 1
    report(3, violations == 0, f"{violations} violations over 200 random estimates")


def test_criterion_4_fwer_control():
    started = time.perf_counter()
    spec = SimulationSpec(
        n=60, num_tests=50, rho=0.5, trials=400, B=500, alpha=0.05,
        seed=20260809,
    )
    result = run_simulation(spec)
    elapsed = time.perf_counter() - started
    fwer = result.fwer.gfwer
    bound = 0.05 + 2 * math.sqrt(0.05 * 0.95 / 400)
    ok = 0.01 <= fwer <= bound and elapsed <= 300
    report(
        4, ok,
        f"complete-null empirical FWER {fwer:.4f} in [0.01, {bound:.4f}], "
        f"{elapsed:.0f}s <= 300s",
    )


def test_criterion_5_single_test_reduction():
    rng = np.random.default_rng(5005)
    mismatches = 0
    for _ in range(100):
        b = int(rng.integers(2, 80))
        sided = "two_sided" if rng.random() < 0.5 else "one_sided_upper"
        z = rng.standard_normal((1, b))
        mag = np.abs(z) if sided == "two_sided" else z
        null = NullDistributionEstimate(
            z_matrix=z, col_maxima=mag.max(axis=0), row_means=z.mean(axis=1),
            row_vars=z.var(axis=1), scheme="bootstrap_nonparam", seed=0,
            sidedness=sided,
        )
        t = float(rng.standard_normal() * 1.5)
        f = abs(t) if sided == "two_sided" else t
        marginal = float(np.mean(mag[0] >= f))
        if maxt_adjusted_p(null, np.array([t]))[0] != marginal:
            mismatches += 1
    report(5, mismatches == 0, f"{mismatches} mismatches over 100 single-test fixtures")


def test_criterion_6_dag_fixture_and_true_path(go_dag):
    parents_ok = go_dag.parents(KINASE_TERM) == {KINASE_PARENT}
    ancestors = go_dag.ancestors(KINASE_TERM)
    ancestors_ok = ancestors == set(KINASE_ANCESTORS) and len(ancestors) == 8
    children_ok = go_dag.children(KINASE_TERM) == set(KINASE_CHILDREN)
    offspring = go_dag.offspring(KINASE_TERM)
    offspring_ok = offspring == set(KINASE_OFFSPRING) and len(offspring) == 21

    rng = np.random.default_rng(6006)
    implication_failures = 0
    for _ in range(100):
        nodes, edges = random_dag(rng, int(rng.integers(3, 25)))
        dag = OntologyDag(
            tuple(TermRecord(v) for v in nodes),
            tuple((c, p, "") for c, p in edges),
        )
        genes = [f"gene{i}" for i in range(3)]
        closed = propagate_true_path(dag, random_annotations(rng, nodes, genes))
        annotated = {(g, t) for g, t, _ in closed.pairs}
        for g, t in annotated:
            for p in dag.parents(t):
                if (g, p) not in annotated:
                    implication_failures += 1
    ok = (
        parents_ok and ancestors_ok and children_ok and offspring_ok
        and implication_failures == 0
    )
    report(
        6, ok,
        "kinase fixture: 1 parent, 8 listed ancestors, 3 children, "
        f"21 offspring; {implication_failures} parent-implication failures "
        "on 100 random graphs",
    )


def test_criterion_7_confusion_identities():
    rng = np.random.default_rng(7007)
    failures = 0
    for _ in range(10_000):
        m = int(rng.integers(1, 60))
        truth = {i for i in range(m) if rng.random() < rng.random()}
        rejected = {i for i in range(m) if rng.random() < 0.3}
        c = confusion(truth, rejected, m)
        if c.W != c.h0 - c.V or c.S != c.R - c.V:
            failures += 1
        if c.R == 0 and c.false_positive_proportion != 0.0:
            failures += 1
    empty = confusion({0, 1, 2}, set(), 3)
    convention_ok = empty.false_positive_proportion == 0.0
    report(
        7, failures == 0 and convention_ok,
        f"{failures} identity failures over 10000 scenarios; V/R==0 when R==0",
    )


def test_criterion_8_estimator_coincidence():
    rng = stream(8008, (99,))
    n, g = 24, 15
    x = rng.standard_normal((n, g))
    x[n // 2:, :4] += 6.0
    labels = tuple(["c0"] * (n // 2) + ["c1"] * (n // 2))
    genes = tuple(f"g{i}" for i in range(g))
    data = SampleData(x, labels, ("c0", "c1"), genes)

    observed, result = gene_level_de_test(
        data, B=500, scheme="permutation", seed=88, alpha=0.05,
        stream_prefix=(DOMAIN_OBSERVED_INNER,),
    )
    k = len(result.rejected)
    scores = np.abs(observed.values)
    boundary = np.sort(scores)[g - k]
    tie_free = int(np.sum(scores == boundary)) == 1

    by_p = binary_profile_by_adjp(result.adjusted_p, 0.05, genes)
    by_rank = binary_profile_top_count(observed, k, "two_sided")
    equal = bool(np.array_equal(by_p.values, by_rank.profile.values))
    ok = k == 4 and tie_free and by_rank.realized_size == k and equal
    report(
        8, ok,
        f"inner test rejects exactly {k} genes tie-free; adjusted-p and "
        "rank-count profiles identical on the observed sample",
    )


def test_criterion_9_cli_determinism(tmp_path):
    fixture = write_desk_fixture(tmp_path / "fixture")
    outputs = []
    runs = [("run1", 1), ("run2", 1), ("w2", 2), ("w8", 8)]
    for name, workers in runs:
        out = tmp_path / name
        code = main([
            "assoc-test",
            "--expressions", str(fixture["expressions"]),
            "--labels", str(fixture["labels"]),
            "--annotation-matrix", str(fixture["annotation_matrix"]),
            "--scenario", "tt", "--B", "200", "--seed", "424242",
            "--workers", str(workers), "--out-dir", str(out),
        ])
        assert code == EXIT_OK
        outputs.append(
            (out / "report.tsv").read_bytes()
            + (out / "sorted_p.tsv").read_bytes()
        )
    identical = all(o == outputs[0] for o in outputs[1:])
    report(
        9, identical,
        "desk-fixture assoc-test bytes identical across 2 runs and "
        "worker pools 1, 2, 8",
    )


def test_criterion_10_end_to_end_replay():
    data, matrix = make_desk_dataset()
    labels01 = np.array([y == "c1" for y in data.labels])
    worst_stat = 0.0
    p_exact = True
    for scenario in ("tt", "dt", "neq_chi"):
        estimator = (
            DeEstimatorConfig("top_count", count=10)
            if scenario == "neq_chi"
            else None
        )
        cfg = ScenarioConfig(
            scenario=scenario, B=200, seed=424242, de_estimator=estimator
        )
        rep = run_scenario(data, matrix, cfg)
        observed, p = scenario_oracle.replay_scenario(
            data.expressions, labels01, matrix.values, scenario,
            B=200, seed=424242, top_count=10,
        )
        worst_stat = max(
            worst_stat, float(np.max(np.abs(rep.result.observed - observed)))
        )
        if not np.array_equal(rep.result.adjusted_p, p):
            p_exact = False
    ok = p_exact and worst_stat <= 1e-10
    report(
        10, ok,
        f"three desk scenarios: adjusted p exact, max stat delta "
        f"{worst_stat:.2e} <= 1e-10",
    )
