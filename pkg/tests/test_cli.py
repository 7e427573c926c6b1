"""Command-line harness: exit codes, outputs, manifests, reproducibility."""

import json
import math

import numpy as np
import pytest

from annomtp import tsv
from annomtp.cli import EXIT_CONFIG, EXIT_DATA, EXIT_DEGENERATE, EXIT_OK, main
from annomtp.datasets import write_desk_fixture
from annomtp.rng import stream
from conftest import GO_EDGES, go_terms


@pytest.fixture()
def desk_files(tmp_path):
    return write_desk_fixture(tmp_path / "fixture")


def write_go_files(directory):
    directory.mkdir(parents=True, exist_ok=True)
    terms_path = directory / "terms.tsv"
    edges_path = directory / "edges.tsv"
    terms_path.write_text(
        "term_id\tname\tnamespace\n"
        + "".join(f"{t.term_id}\t{t.name}\t{t.namespace}\n" for t in go_terms()),
        encoding="utf-8",
    )
    edges_path.write_text(
        "child_id\tparent_id\trelation\n"
        + "".join(f"{c}\t{p}\t{r}\n" for c, p, r in GO_EDGES),
        encoding="utf-8",
    )
    return terms_path, edges_path


def run(argv):
    return main([str(a) for a in argv])


class TestFilter:
    def test_passthrough_with_identity_probe_map(self, tmp_path):
        rng = stream(3, (50,))
        n, g = 6, 4
        x = rng.uniform(math.log2(150), math.log2(4000), size=(n, g))
        genes = [f"g{i}" for i in range(g)]
        samples = [f"s{i}" for i in range(n)]
        expr = tmp_path / "expr.tsv"
        lines = ["gene_id\t" + "\t".join(samples)]
        for j, gene in enumerate(genes):
            lines.append(gene + "\t" + "\t".join(repr(float(v)) for v in x[:, j]))
        expr.write_text("\n".join(lines) + "\n", encoding="utf-8")
        labels = tmp_path / "labels.tsv"
        labels.write_text(
            "".join(f"s{i}\t{'c0' if i < 3 else 'c1'}\n" for i in range(n)),
            encoding="utf-8",
        )
        pmap = tmp_path / "map.tsv"
        pmap.write_text("".join(f"{g}\t{g}\n" for g in genes), encoding="utf-8")

        out = tmp_path / "out"
        code = run([
            "filter", "--expressions", expr, "--labels", labels,
            "--probe-map", pmap, "--out-dir", out, "--seed", "1",
        ])
        assert code == EXIT_OK
        kept = (out / "kept_genes.tsv").read_text().split()
        assert kept[1:] == genes
        reloaded = tsv.load_expressions(out / "expressions_filtered.tsv")
        np.testing.assert_array_equal(reloaded[2].T, x)

    def test_malformed_row_exits_with_line(self, tmp_path, capsys):
        expr = tmp_path / "expr.tsv"
        expr.write_text("gene_id\ts1\ts2\ng0\t1.0\n", encoding="utf-8")
        labels = tmp_path / "labels.tsv"
        labels.write_text("s1\tc0\ns2\tc1\n", encoding="utf-8")
        code = run([
            "filter", "--expressions", expr, "--labels", labels,
            "--out-dir", tmp_path / "o", "--seed", "1",
        ])
        assert code == EXIT_DATA
        assert ":2" in capsys.readouterr().err


class TestDeTest:
    def test_b_of_one_rejected(self, desk_files, tmp_path):
        code = run([
            "de-test", "--expressions", desk_files["expressions"],
            "--labels", desk_files["labels"], "--B", "1",
            "--out-dir", tmp_path / "o", "--seed", "1",
        ])
        assert code == EXIT_CONFIG

    def test_planted_effect_rejected(self, desk_files, tmp_path):
        out = tmp_path / "o"
        code = run([
            "de-test", "--expressions", desk_files["expressions"],
            "--labels", desk_files["labels"], "--B", "200",
            "--alpha", "0.05", "--out-dir", out, "--seed", "7",
        ])
        assert code == EXIT_OK
        lines = (out / "de_genes.tsv").read_text().splitlines()
        assert lines[0] == "gene_id\tlambda_t\tadj_p"
        # the desk fixture plants strong effects in the first 8 genes
        rejected = [
            row.split("\t")[0]
            for row in lines[1:]
            if float(row.split("\t")[2]) <= 0.05
        ]
        assert len(rejected) >= 4
        assert all(g < "g008" for g in rejected)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["subcommand"] == "de-test"
        assert manifest["seed"] == 7


class TestAssocTest:
    def test_single_term_equals_marginal(self, desk_files, tmp_path):
        matrix = tsv.load_annotation_matrix(desk_files["annotation_matrix"])
        single = tmp_path / "single.tsv"
        lines = ["gene_id\t" + matrix.term_ids[0]]
        for i, gene in enumerate(matrix.gene_ids):
            lines.append(f"{gene}\t{int(matrix.values[i, 0])}")
        single.write_text("\n".join(lines) + "\n", encoding="utf-8")
        out = tmp_path / "o"
        code = run([
            "assoc-test", "--expressions", desk_files["expressions"],
            "--labels", desk_files["labels"],
            "--annotation-matrix", single,
            "--scenario", "tt", "--B", "100",
            "--out-dir", out, "--seed", "3",
        ])
        assert code == EXIT_OK
        rows = (out / "report.tsv").read_text().splitlines()
        assert len(rows) == 2  # header plus one term

    def test_estimator_with_tt_is_config_error(self, desk_files, tmp_path):
        code = run([
            "assoc-test", "--expressions", desk_files["expressions"],
            "--labels", desk_files["labels"],
            "--annotation-matrix", desk_files["annotation_matrix"],
            "--scenario", "tt", "--de-estimator", "top:20",
            "--B", "50", "--out-dir", tmp_path / "o", "--seed", "3",
        ])
        assert code == EXIT_CONFIG

    def test_neq_chi_needs_estimator(self, desk_files, tmp_path):
        code = run([
            "assoc-test", "--expressions", desk_files["expressions"],
            "--labels", desk_files["labels"],
            "--annotation-matrix", desk_files["annotation_matrix"],
            "--scenario", "neq-chi", "--B", "50",
            "--out-dir", tmp_path / "o", "--seed", "3",
        ])
        assert code == EXIT_CONFIG

    def test_rerun_from_manifest_is_bit_identical(self, desk_files, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        base = [
            "assoc-test", "--expressions", desk_files["expressions"],
            "--labels", desk_files["labels"],
            "--annotation-matrix", desk_files["annotation_matrix"],
            "--scenario", "dt", "--B", "80", "--seed", "11",
        ]
        assert run(base + ["--out-dir", out1]) == EXIT_OK
        assert run([
            "assoc-test", "--config", out1 / "manifest.json", "--out-dir", out2,
        ]) == EXIT_OK
        assert (out1 / "report.tsv").read_bytes() == (out2 / "report.tsv").read_bytes()
        assert (out1 / "sorted_p.tsv").read_bytes() == (out2 / "sorted_p.tsv").read_bytes()

    def test_degenerate_chain_exits_four(self, tmp_path):
        # every gene identical: |lambda^t| is constant, the association
        # has no spread, and the observed chain is numerically degenerate
        rng = stream(19, (52,))
        col = rng.standard_normal(8)
        expr = tmp_path / "expr.tsv"
        samples = [f"s{i}" for i in range(8)]
        lines = ["gene_id\t" + "\t".join(samples)]
        for gene in ("g0", "g1", "g2", "g3"):
            lines.append(gene + "\t" + "\t".join(repr(float(v)) for v in col))
        expr.write_text("\n".join(lines) + "\n", encoding="utf-8")
        labels = tmp_path / "labels.tsv"
        labels.write_text(
            "".join(f"s{i}\t{'c0' if i < 4 else 'c1'}\n" for i in range(8)),
            encoding="utf-8",
        )
        matrix = tmp_path / "a.tsv"
        matrix.write_text(
            "gene_id\tT0\ng0\t1\ng1\t1\ng2\t0\ng3\t0\n", encoding="utf-8"
        )
        code = run([
            "assoc-test", "--expressions", expr, "--labels", labels,
            "--annotation-matrix", matrix, "--scenario", "tt",
            "--B", "10", "--out-dir", tmp_path / "o", "--seed", "1",
        ])
        assert code == EXIT_DEGENERATE

    def test_dag_assembly_path(self, desk_files, tmp_path):
        # annotate desk genes with the kinase fixture terms
        terms_path, edges_path = write_go_files(tmp_path / "go")
        ann = tmp_path / "go" / "annotations.tsv"
        genes = tsv.load_expressions(desk_files["expressions"])[0]
        rng = stream(13, (51,))
        lines = ["gene_id\tterm_id\tevidence"]
        leaves = ["GO:0004714", "GO:0004715", "GO:0004716", "GO:0005003"]
        for g in genes:
            for t in leaves:
                if rng.random() < 0.5:
                    lines.append(f"{g}\t{t}\tIEA")
        ann.write_text("\n".join(lines) + "\n", encoding="utf-8")
        out = tmp_path / "o"
        code = run([
            "assoc-test", "--expressions", desk_files["expressions"],
            "--labels", desk_files["labels"],
            "--terms", terms_path, "--edges", edges_path,
            "--annotations", ann, "--min-annot", "10",
            "--scenario", "tt", "--B", "60",
            "--out-dir", out, "--seed", "5",
        ])
        assert code == EXIT_OK
        report = (out / "report.tsv").read_text().splitlines()
        assert len(report) > 1
        for row in report[1:]:
            assert int(row.split("\t")[1]) >= 10


class TestSimulate:
    def test_zero_trials_rejected(self, tmp_path):
        code = run([
            "simulate", "--trials", "0", "--out-dir", tmp_path / "o",
            "--seed", "1",
        ])
        assert code == EXIT_CONFIG

    def test_small_run_writes_rates(self, tmp_path):
        out = tmp_path / "o"
        code = run([
            "simulate", "--n", "12", "--num-tests", "4", "--rho", "0.3",
            "--trials", "5", "--B", "40", "--alpha", "0.2",
            "--out-dir", out, "--seed", "2",
        ])
        assert code == EXIT_OK
        lines = (out / "rates.tsv").read_text().splitlines()
        assert lines[0].startswith("alpha\tq\tfwer")
        assert len(lines) == 2

    def test_no_true_nulls_means_no_type_one_errors(self, tmp_path):
        out = tmp_path / "o"
        effects = []
        for i in range(4):
            effects += ["--effect", f"{i}:8.0"]
        code = run([
            "simulate", "--n", "12", "--num-tests", "4", "--rho", "0.0",
            "--trials", "5", "--B", "40", "--alpha", "0.2",
            *effects, "--out-dir", out, "--seed", "4",
        ])
        assert code == EXIT_OK
        fwer = float((out / "rates.tsv").read_text().splitlines()[1].split("\t")[2])
        assert fwer == 0.0


class TestDag:
    def test_queries_match_fixture(self, tmp_path, capsys, go_dag):
        terms_path, edges_path = write_go_files(tmp_path / "go")
        out = tmp_path / "o"
        code = run([
            "dag", "ancestors", "--terms", terms_path, "--edges", edges_path,
            "--term", "GO:0004713", "--out-dir", out, "--seed", "1",
        ])
        assert code == EXIT_OK
        printed = capsys.readouterr().out.split()
        assert set(printed) == go_dag.ancestors("GO:0004713")
        listed = (out / "ancestors.tsv").read_text().split()[1:]
        assert listed == sorted(go_dag.ancestors("GO:0004713"))

    def test_cycle_rejected(self, tmp_path, capsys):
        d = tmp_path / "go"
        d.mkdir()
        (d / "terms.tsv").write_text("a\nb\n", encoding="utf-8")
        (d / "edges.tsv").write_text("a\tb\nb\ta\n", encoding="utf-8")
        code = run([
            "dag", "validate", "--terms", d / "terms.tsv",
            "--edges", d / "edges.tsv", "--out-dir", tmp_path / "o",
            "--seed", "1",
        ])
        assert code == EXIT_DATA
        assert "cycle" in capsys.readouterr().err

    def test_leaf_offspring_empty(self, tmp_path, capsys):
        terms_path, edges_path = write_go_files(tmp_path / "go")
        code = run([
            "dag", "offspring", "--terms", terms_path, "--edges", edges_path,
            "--term", "GO:0004718", "--out-dir", tmp_path / "o", "--seed", "1",
        ])
        assert code == EXIT_OK
        assert capsys.readouterr().out.strip() == ""

    def test_assemble_writes_matrix(self, tmp_path):
        terms_path, edges_path = write_go_files(tmp_path / "go")
        ann = tmp_path / "ann.tsv"
        ann.write_text(
            "geneA\tGO:0004714\ngeneB\tGO:0004714\ngeneC\tGO:0004718\n",
            encoding="utf-8",
        )
        genes = tmp_path / "genes.txt"
        genes.write_text("geneA\ngeneB\ngeneC\n", encoding="utf-8")
        out = tmp_path / "o"
        code = run([
            "dag", "assemble", "--terms", terms_path, "--edges", edges_path,
            "--annotations", ann, "--genes", genes, "--min-genes", "2",
            "--out-dir", out, "--seed", "1",
        ])
        assert code == EXIT_OK
        matrix = tsv.load_annotation_matrix(out / "annotation_matrix.tsv")
        assert (matrix.column_sums() >= 2).all()
        # true-path closure lifts both genes onto every kinase ancestor
        assert "GO:0004713" in matrix.term_ids


class TestManifest:
    def test_auto_seed_recorded(self, desk_files, tmp_path):
        out = tmp_path / "o"
        code = run([
            "de-test", "--expressions", desk_files["expressions"],
            "--labels", desk_files["labels"], "--B", "20",
            "--out-dir", out,
        ])
        assert code == EXIT_OK
        manifest = json.loads((out / "manifest.json").read_text())
        assert isinstance(manifest["seed"], int)
        assert manifest["rng"] == "philox4x64/seedseq-spawn-key"
        assert set(manifest["inputs"]) == {"expressions", "labels"}
        for digest in manifest["inputs"].values():
            assert len(digest) == 64
