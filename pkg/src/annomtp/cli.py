"""Command-line harness.

Subcommands: ``filter``, ``de-test``, ``assoc-test``, ``simulate``,
``dag``.  Option precedence is flags > --config file > built-in
defaults; a manifest JSON written by a previous run can be passed as the
config file to reproduce it bit-exactly (same inputs assumed).

Exit codes: 0 success, 2 parse/data error, 3 configuration error,
4 numeric degeneracy.

Seeds are never taken from the environment: pass --seed, or a fresh one
is generated and recorded in the manifest.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
import time
from pathlib import Path

from . import __version__
from .dag import OntologyDag, assemble_matrix
from .errors import (
    AnnomtpError,
    ComputationError,
    ConfigError,
    DagError,
    DataError,
)
from .profiles import collapse_probes, filter_genes
from .rng import GENERATOR_ID
from .scenarios import (
    DeEstimatorConfig,
    ScenarioConfig,
    gene_level_de_test,
    run_scenario,
)
from .simulate import SimulationSpec, run_simulation
from . import tsv

EXIT_OK = 0
EXIT_DATA = 2
EXIT_CONFIG = 3
EXIT_DEGENERATE = 4


def _load_config_file(path) -> dict:
    try:
        loaded = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    # a manifest written by a previous run doubles as a config file
    if "config" in loaded and isinstance(loaded["config"], dict):
        return loaded["config"]
    return loaded


def _resolve(defaults: dict, args: argparse.Namespace) -> dict:
    cfg = dict(defaults)
    allowed = set(defaults) | {"seed"}
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        unknown = set(file_cfg) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in allowed:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if cfg.get("seed") is None:
        cfg["seed"] = secrets.randbits(31)
    return cfg


def _write_manifest(out_dir: Path, subcommand: str, cfg: dict,
                    inputs: dict, counters: dict, started: float) -> None:
    manifest = {
        "version": __version__,
        "subcommand": subcommand,
        "config": cfg,
        "seed": cfg.get("seed"),
        "rng": GENERATOR_ID,
        "inputs": {name: tsv.file_digest(p) for name, p in inputs.items()},
        "timings": {"total_s": round(time.perf_counter() - started, 6)},
        "counters": counters,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _sample_data(cfg: dict) -> tuple:
    if not cfg.get("expressions") or not cfg.get("labels"):
        raise ConfigError("--expressions and --labels are required")
    gene_ids, sample_ids, matrix = tsv.load_expressions(cfg["expressions"])
    labels = tsv.load_labels(cfg["labels"])
    class_names = None
    if cfg.get("classes"):
        parts = str(cfg["classes"]).split(",")
        if len(parts) != 2:
            raise ConfigError("--classes must be 'reference,treatment'")
        class_names = (parts[0], parts[1])
    data = tsv.build_sample_data(gene_ids, sample_ids, matrix, labels, class_names)
    return data, sample_ids


def _parse_de_estimator(spec: str, cfg: dict) -> DeEstimatorConfig:
    kind, _, value = spec.partition(":")
    if kind == "top":
        try:
            return DeEstimatorConfig(method="top_count", count=int(value))
        except ValueError:
            raise ConfigError(f"bad top count {value!r}") from None
    if kind == "adjp":
        try:
            alpha_inner = float(value)
        except ValueError:
            raise ConfigError(f"bad adjp alpha {value!r}") from None
        return DeEstimatorConfig(
            method="adjp",
            alpha_inner=alpha_inner,
            b_inner=int(cfg["b_inner"]),
            scheme_inner=cfg["inner_scheme"],
        )
    raise ConfigError(f"unknown DE estimator {spec!r}; use top:K or adjp:ALPHA")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

_FILTER_DEFAULTS = {
    "expressions": None, "labels": None, "classes": None,
    "intensity": 100.0, "fraction": 0.25, "iqr": 0.5, "log_base": 2.0,
    "probe_map": None,
}


def cmd_filter(args) -> int:
    started = time.perf_counter()
    cfg = _resolve(_FILTER_DEFAULTS, args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data, sample_ids = _sample_data(cfg)
    inputs = {"expressions": cfg["expressions"], "labels": cfg["labels"]}
    if cfg.get("probe_map"):
        data = collapse_probes(data, tsv.load_probe_map(cfg["probe_map"]))
        inputs["probe_map"] = cfg["probe_map"]
    data, report = filter_genes(
        data,
        intensity_threshold=float(cfg["intensity"]),
        fraction=float(cfg["fraction"]),
        iqr_threshold=float(cfg["iqr"]),
        raw_scale_base=float(cfg["log_base"]),
    )
    tsv.write_expressions(out_dir / "expressions_filtered.tsv", data, sample_ids)
    tsv.write_filter_report(out_dir / "kept_genes.tsv", report.kept_gene_ids)
    counters = {
        "n_kept": len(report.kept_gene_ids),
        "n_failed_intensity": report.n_failed_intensity,
        "n_failed_iqr": report.n_failed_iqr,
    }
    _write_manifest(out_dir, "filter", cfg, inputs, counters, started)
    print(f"kept {len(report.kept_gene_ids)} genes")
    return EXIT_OK


_DE_DEFAULTS = {
    "expressions": None, "labels": None, "classes": None,
    "B": 5000, "alpha": 0.05, "scheme": "bootstrap_nonparam",
    "lambda_scale": "welch", "workers": 1,
}


def cmd_de_test(args) -> int:
    started = time.perf_counter()
    cfg = _resolve(_DE_DEFAULTS, args)
    if int(cfg["B"]) < 2:
        raise ConfigError("--B must be >= 2")
    if not 0.0 < float(cfg["alpha"]) < 1.0:
        raise ConfigError("--alpha must lie in (0, 1)")
    if cfg["scheme"] not in ("bootstrap_nonparam", "permutation"):
        raise ConfigError(f"unknown scheme {cfg['scheme']!r}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data, _ = _sample_data(cfg)
    observed, result = gene_level_de_test(
        data,
        B=int(cfg["B"]),
        scheme=cfg["scheme"],
        seed=int(cfg["seed"]),
        alpha=float(cfg["alpha"]),
        lambda_scale=cfg["lambda_scale"],
        workers=int(cfg["workers"]),
    )
    tsv.write_de_table(
        out_dir / "de_genes.tsv", data.gene_ids, observed.values, result.adjusted_p
    )
    counters = {"n_rejected": len(result.rejected)}
    inputs = {"expressions": cfg["expressions"], "labels": cfg["labels"]}
    _write_manifest(out_dir, "de-test", cfg, inputs, counters, started)
    print(f"rejected {len(result.rejected)} of {data.n_genes} genes")
    return EXIT_OK


_ASSOC_DEFAULTS = {
    "expressions": None, "labels": None, "classes": None,
    "terms": None, "edges": None, "annotations": None,
    "annotation_matrix": None, "namespace": None,
    "scenario": "tt", "de_estimator": None,
    "B": 5000, "b_inner": 1000, "inner_scheme": "permutation",
    "alpha": 0.05, "min_annot": 10, "lambda_scale": "welch", "workers": 1,
}


def cmd_assoc_test(args) -> int:
    started = time.perf_counter()
    cfg = _resolve(_ASSOC_DEFAULTS, args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data, _ = _sample_data(cfg)
    inputs = {"expressions": cfg["expressions"], "labels": cfg["labels"]}

    if cfg.get("annotation_matrix"):
        matrix = tsv.load_annotation_matrix(cfg["annotation_matrix"])
        inputs["annotation_matrix"] = cfg["annotation_matrix"]
    else:
        for key in ("terms", "edges", "annotations"):
            if not cfg.get(key):
                raise ConfigError(
                    "assoc-test needs --annotation-matrix or all of "
                    "--terms/--edges/--annotations"
                )
            inputs[key] = cfg[key]
        dag = OntologyDag(
            tuple(tsv.load_terms(cfg["terms"])),
            tuple(tsv.load_edges(cfg["edges"])),
        )
        annotations = tsv.load_annotations(cfg["annotations"])
        matrix, _report = assemble_matrix(
            dag,
            annotations,
            data.gene_ids,
            min_genes=int(cfg["min_annot"]),
            namespace=cfg.get("namespace"),
        )
    if matrix.n_terms == 0:
        raise ComputationError("no annotation term passed the minimum-count filter")

    estimator = None
    if cfg["scenario"] == "neq_chi":
        if not cfg.get("de_estimator"):
            raise ConfigError("--scenario neq-chi requires --de-estimator")
        estimator = _parse_de_estimator(str(cfg["de_estimator"]), cfg)
    elif cfg.get("de_estimator"):
        raise ConfigError(f"--de-estimator is only valid with --scenario neq-chi")

    scenario_cfg = ScenarioConfig(
        scenario=cfg["scenario"],
        B=int(cfg["B"]),
        alpha=float(cfg["alpha"]),
        seed=int(cfg["seed"]),
        de_estimator=estimator,
        lambda_scale=cfg["lambda_scale"],
        workers=int(cfg["workers"]),
    )
    report = run_scenario(data, matrix, scenario_cfg)
    tsv.write_scenario_report(out_dir / "report.tsv", report)
    tsv.write_sorted_p(out_dir / "sorted_p.tsv", report)
    counters = {
        k: report.manifest[k]
        for k in (
            "n_redraws",
            "chi2_degenerate_replicates",
            "chi2_degenerate_observed_terms",
            "realized_de_count",
        )
    }
    counters["n_rejected"] = len(report.result.rejected)
    _write_manifest(out_dir, "assoc-test", cfg, inputs, counters, started)
    print(
        f"scenario {cfg['scenario']}: rejected {len(report.result.rejected)} "
        f"of {matrix.n_terms} terms at alpha={cfg['alpha']}"
    )
    return EXIT_OK


_SIM_DEFAULTS = {
    "n": 60, "num_tests": 50, "rho": 0.5, "trials": 400,
    "B": 500, "alpha": 0.05, "q": 0.0, "block_size": None,
    "effects": [], "workers": 1,
}


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = _resolve(_SIM_DEFAULTS, args)
    if int(cfg["trials"]) < 1:
        raise ConfigError("--trials must be >= 1")
    if int(cfg["B"]) < 2:
        raise ConfigError("--B must be >= 2")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    effects = []
    for item in cfg["effects"] or []:
        idx, _, size = str(item).partition(":")
        try:
            effects.append((int(idx), float(size)))
        except ValueError:
            raise ConfigError(f"bad effect spec {item!r}; use INDEX:SIZE") from None
    try:
        spec = SimulationSpec(
            n=int(cfg["n"]),
            num_tests=int(cfg["num_tests"]),
            rho=float(cfg["rho"]),
            trials=int(cfg["trials"]),
            B=int(cfg["B"]),
            alpha=float(cfg["alpha"]),
            seed=int(cfg["seed"]),
            effects=tuple(effects),
            block_size=None if cfg["block_size"] is None else int(cfg["block_size"]),
            q=float(cfg["q"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = run_simulation(spec, workers=int(cfg["workers"]))
    tsv.write_rates(out_dir / "rates.tsv", result)
    counters = {"trials": spec.trials}
    _write_manifest(out_dir, "simulate", cfg, {}, counters, started)
    print(
        f"empirical FWER {result.fwer.gfwer:.4f} "
        f"(+/- {result.fwer.gfwer_stderr:.4f}) over {spec.trials} trials"
    )
    return EXIT_OK


_DAG_DEFAULTS = {
    "terms": None, "edges": None, "annotations": None, "genes": None,
    "term": None, "min_genes": 10, "namespace": None,
}


def cmd_dag(args) -> int:
    started = time.perf_counter()
    cfg = _resolve(_DAG_DEFAULTS, args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for key in ("terms", "edges"):
        if not cfg.get(key):
            raise ConfigError(f"dag needs --{key}")
    inputs = {"terms": cfg["terms"], "edges": cfg["edges"]}
    dag = OntologyDag(
        tuple(tsv.load_terms(cfg["terms"])), tuple(tsv.load_edges(cfg["edges"]))
    )
    query = args.query
    counters: dict = {}

    if query == "validate":
        (out_dir / "validate.tsv").write_text("ok\n", encoding="utf-8")
        print("ok")
    elif query in ("ancestors", "parents", "children", "offspring"):
        if not cfg.get("term"):
            raise ConfigError(f"dag {query} needs --term")
        result = sorted(getattr(dag, query)(cfg["term"]))
        tsv._write(out_dir / f"{query}.tsv", ["term_id"] + result)
        for term in result:
            print(term)
        counters["n_terms"] = len(result)
    elif query == "assemble":
        for key in ("annotations", "genes"):
            if not cfg.get(key):
                raise ConfigError(f"dag assemble needs --{key}")
        inputs["annotations"] = cfg["annotations"]
        inputs["genes"] = cfg["genes"]
        annotations = tsv.load_annotations(cfg["annotations"])
        universe = tsv.load_gene_list(cfg["genes"])
        matrix, report = assemble_matrix(
            dag,
            annotations,
            universe,
            min_genes=int(cfg["min_genes"]),
            namespace=cfg.get("namespace"),
        )
        tsv.write_annotation_matrix(out_dir / "annotation_matrix.tsv", matrix)
        lines = ["term_id\tn_annotated\tkept"]
        for term, count in report.kept:
            lines.append(f"{term}\t{count}\t1")
        for term, count in report.dropped:
            lines.append(f"{term}\t{count}\t0")
        tsv._write(out_dir / "assembly_report.tsv", lines)
        counters = {
            "n_kept_terms": len(report.kept),
            "n_dropped_terms": len(report.dropped),
            "n_ignored_genes": report.n_ignored_genes,
        }
        print(f"kept {len(report.kept)} terms over {len(universe)} genes")
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown dag query {query!r}")

    _write_manifest(out_dir, f"dag-{query}", cfg, inputs, counters, started)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--config", help="JSON config or manifest from a previous run")
    p.add_argument("--seed", type=int, help="master seed (auto-generated if absent)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annomtp",
        description="Resampling-based tests of annotation/parameter association",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="expression gene filtering and probe collapsing")
    _add_common(p)
    p.add_argument("--expressions")
    p.add_argument("--labels")
    p.add_argument("--classes", help="reference,treatment")
    p.add_argument("--intensity", type=float)
    p.add_argument("--fraction", type=float)
    p.add_argument("--iqr", type=float)
    p.add_argument("--log-base", dest="log_base", type=float)
    p.add_argument("--probe-map", dest="probe_map")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("de-test", help="gene-level differential expression maxT test")
    _add_common(p)
    p.add_argument("--expressions")
    p.add_argument("--labels")
    p.add_argument("--classes")
    p.add_argument("--B", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--scheme", choices=["bootstrap_nonparam", "permutation"])
    p.add_argument("--lambda-scale", dest="lambda_scale",
                   choices=["welch", "per_sqrt_n"])
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_de_test)

    p = sub.add_parser("assoc-test", help="annotation association scenario run")
    _add_common(p)
    p.add_argument("--expressions")
    p.add_argument("--labels")
    p.add_argument("--classes")
    p.add_argument("--terms")
    p.add_argument("--edges")
    p.add_argument("--annotations")
    p.add_argument("--annotation-matrix", dest="annotation_matrix")
    p.add_argument("--namespace")
    p.add_argument("--scenario", choices=["tt", "dt", "neq-chi"])
    p.add_argument("--de-estimator", dest="de_estimator",
                   help="top:K or adjp:ALPHA (neq-chi only)")
    p.add_argument("--B", type=int)
    p.add_argument("--b-inner", dest="b_inner", type=int)
    p.add_argument("--inner-scheme", dest="inner_scheme",
                   choices=["bootstrap_nonparam", "permutation"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--min-annot", dest="min_annot", type=int)
    p.add_argument("--lambda-scale", dest="lambda_scale",
                   choices=["welch", "per_sqrt_n"])
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_assoc_test)

    p = sub.add_parser("simulate", help="Monte-Carlo error-control verification")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--num-tests", dest="num_tests", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--B", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--block-size", dest="block_size", type=int)
    p.add_argument("--effect", dest="effects", action="append",
                   help="INDEX:SIZE, repeatable")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dag", help="ontology graph queries and matrix assembly")
    p.add_argument("query", choices=[
        "validate", "ancestors", "parents", "children", "offspring", "assemble",
    ])
    _add_common(p)
    p.add_argument("--terms")
    p.add_argument("--edges")
    p.add_argument("--term")
    p.add_argument("--annotations")
    p.add_argument("--genes")
    p.add_argument("--min-genes", dest="min_genes", type=int)
    p.add_argument("--namespace")
    p.set_defaults(func=cmd_dag)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "assoc-test" and args.scenario == "neq-chi":
            args.scenario = "neq_chi"
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, DagError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ComputationError, AnnomtpError) as exc:
        print(f"degenerate computation: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
