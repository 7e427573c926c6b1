"""Tab-separated file ingestion and report serialization.

Conventions: UTF-8, tab separation, '.' decimal point, fixed column
orders.  Expression files are gene-major (rows = genes, columns =
samples, header row of sample ids).  P-values below 1e-4 are printed in
scientific notation; statistics carry 10 significant digits.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .association import AnnotationMatrix
from .dag import DirectAnnotations, TermRecord
from .errors import DataError
from .profiles import SampleData
from .scenarios import ScenarioReport
from .simulate import SimulationResult


def format_pvalue(p: float) -> str:
    return f"{p:.1e}" if p < 1e-4 else f"{p:.4f}"


def format_stat(x: float) -> str:
    return f"{x:.10g}"


def _rows(path) -> Iterable[tuple[int, list[str]]]:
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        yield lineno, line.rstrip("\n").split("\t")


def _parse_float(cell: str, path, lineno: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"{path}:{lineno}: not a number: {cell!r}") from None


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# readers
# ---------------------------------------------------------------------------


def load_expressions(path) -> tuple[list[str], list[str], np.ndarray]:
    """Gene-major matrix: returns (gene_ids, sample_ids, genes x samples)."""
    rows = list(_rows(path))
    if not rows:
        raise DataError(f"{path}: empty expression file")
    header_line, header = rows[0]
    if len(header) < 2:
        raise DataError(f"{path}:{header_line}: header needs sample columns")
    sample_ids = header[1:]
    gene_ids: list[str] = []
    values: list[list[float]] = []
    for lineno, cells in rows[1:]:
        if len(cells) != len(header):
            raise DataError(
                f"{path}:{lineno}: expected {len(header)} columns, got {len(cells)}"
            )
        gene_ids.append(cells[0])
        values.append([_parse_float(c, path, lineno) for c in cells[1:]])
    if not gene_ids:
        raise DataError(f"{path}: no gene rows")
    return gene_ids, sample_ids, np.asarray(values)


def load_labels(path) -> list[tuple[str, str]]:
    """Two-column (sample_id, class) file; a literal header row is skipped."""
    out: list[tuple[str, str]] = []
    for lineno, cells in _rows(path):
        if len(cells) != 2:
            raise DataError(f"{path}:{lineno}: expected 2 columns, got {len(cells)}")
        if lineno == 1 and cells == ["sample_id", "class"]:
            continue
        out.append((cells[0], cells[1]))
    if not out:
        raise DataError(f"{path}: no label rows")
    return out


def build_sample_data(
    gene_ids: Sequence[str],
    sample_ids: Sequence[str],
    matrix: np.ndarray,
    labels: Sequence[tuple[str, str]],
    class_names: tuple[str, str] | None = None,
) -> SampleData:
    """Join an expression matrix with labels into a SampleData.

    ``class_names`` orders (reference, treatment); default is the sorted
    pair of distinct classes.
    """
    label_map = dict(labels)
    missing = [s for s in sample_ids if s not in label_map]
    if missing:
        raise DataError(f"samples without labels: {missing[:5]}")
    y = tuple(label_map[s] for s in sample_ids)
    if class_names is None:
        distinct = sorted(set(y))
        if len(distinct) != 2:
            raise DataError(f"expected 2 classes, found {len(distinct)}")
        class_names = (distinct[0], distinct[1])
    return SampleData(np.asarray(matrix).T, y, class_names, tuple(gene_ids))


def load_probe_map(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, cells in _rows(path):
        if len(cells) != 2:
            raise DataError(f"{path}:{lineno}: expected 2 columns, got {len(cells)}")
        if lineno == 1 and cells == ["probe_id", "gene_id"]:
            continue
        out[cells[0]] = cells[1]
    return out


def load_terms(path) -> list[TermRecord]:
    out: list[TermRecord] = []
    for lineno, cells in _rows(path):
        if not 1 <= len(cells) <= 3:
            raise DataError(f"{path}:{lineno}: expected 1-3 columns, got {len(cells)}")
        if lineno == 1 and cells[0] == "term_id":
            continue
        cells = cells + [""] * (3 - len(cells))
        out.append(TermRecord(cells[0], cells[1], cells[2]))
    return out


def load_edges(path) -> list[tuple[str, str, str]]:
    out: list[tuple[str, str, str]] = []
    for lineno, cells in _rows(path):
        if not 2 <= len(cells) <= 3:
            raise DataError(f"{path}:{lineno}: expected 2-3 columns, got {len(cells)}")
        if lineno == 1 and cells[0] == "child_id":
            continue
        cells = cells + [""] * (3 - len(cells))
        out.append((cells[0], cells[1], cells[2]))
    return out


def load_annotations(path) -> DirectAnnotations:
    pairs: list[tuple[str, str, str]] = []
    for lineno, cells in _rows(path):
        if not 2 <= len(cells) <= 3:
            raise DataError(f"{path}:{lineno}: expected 2-3 columns, got {len(cells)}")
        if lineno == 1 and cells[0] == "gene_id":
            continue
        cells = cells + [""] * (3 - len(cells))
        pairs.append((cells[0], cells[1], cells[2]))
    return DirectAnnotations(tuple(pairs))


def load_gene_list(path) -> list[str]:
    return [cells[0] for _, cells in _rows(path)]


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------


def _write(path, lines: Iterable[str]) -> None:
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_expressions(path, data: SampleData, sample_ids: Sequence[str]) -> None:
    lines = ["gene_id\t" + "\t".join(sample_ids)]
    for j, gene in enumerate(data.gene_ids):
        # repr round-trips doubles exactly, so reloading reproduces the data
        cells = [repr(float(v)) for v in data.expressions[:, j]]
        lines.append(gene + "\t" + "\t".join(cells))
    _write(path, lines)


def write_annotation_matrix(path, matrix: AnnotationMatrix) -> None:
    lines = ["gene_id\t" + "\t".join(matrix.term_ids)]
    for i, gene in enumerate(matrix.gene_ids):
        cells = [str(int(v)) if v in (0.0, 1.0) else format_stat(v)
                 for v in matrix.values[i]]
        lines.append(gene + "\t" + "\t".join(cells))
    _write(path, lines)


def load_annotation_matrix(path) -> AnnotationMatrix:
    rows = list(_rows(path))
    if not rows:
        raise DataError(f"{path}: empty matrix file")
    _, header = rows[0]
    term_ids = header[1:]
    gene_ids, values = [], []
    for lineno, cells in rows[1:]:
        if len(cells) != len(header):
            raise DataError(f"{path}:{lineno}: ragged row")
        gene_ids.append(cells[0])
        values.append([_parse_float(c, path, lineno) for c in cells[1:]])
    arr = np.asarray(values)
    binary = bool(np.isin(arr, (0.0, 1.0)).all())
    return AnnotationMatrix(arr, tuple(gene_ids), tuple(term_ids), binary=binary)


def write_scenario_report(path, report: ScenarioReport) -> None:
    lines = ["term_id\tn_annotated\tpsi_hat\tstat\tadj_p\trank"]
    for row in report.rows:
        lines.append(
            "\t".join(
                (
                    row.term_id,
                    str(row.n_annotated),
                    format_stat(row.psi_hat),
                    format_stat(row.stat),
                    format_pvalue(row.adj_p),
                    str(row.rank),
                )
            )
        )
    _write(path, lines)


def write_sorted_p(path, report: ScenarioReport) -> None:
    """Two-column plot data: rank, sorted adjusted p-value."""
    lines = ["rank\tadj_p"]
    for row in report.rows:
        lines.append(f"{row.rank}\t{format_pvalue(row.adj_p)}")
    _write(path, lines)


def write_de_table(
    path, gene_ids: Sequence[str], lam_t: np.ndarray, adj_p: np.ndarray
) -> None:
    lines = ["gene_id\tlambda_t\tadj_p"]
    for gene, t, p in zip(gene_ids, lam_t, adj_p):
        lines.append(f"{gene}\t{format_stat(t)}\t{format_pvalue(p)}")
    _write(path, lines)


def write_rates(path, result: SimulationResult) -> None:
    lines = [
        "alpha\tq\tfwer\tfwer_stderr\tgfwer\tgfwer_stderr"
        "\ttppfp\ttppfp_stderr\tfdr\tfdr_stderr"
    ]
    spec, fw, at_q = result.spec, result.fwer, result.at_q
    lines.append(
        "\t".join(
            (
                format_stat(spec.alpha),
                format_stat(spec.q),
                format_stat(fw.gfwer),
                format_stat(fw.gfwer_stderr),
                format_stat(at_q.gfwer),
                format_stat(at_q.gfwer_stderr),
                format_stat(at_q.tppfp),
                format_stat(at_q.tppfp_stderr),
                format_stat(at_q.fdr),
                format_stat(at_q.fdr_stderr),
            )
        )
    )
    _write(path, lines)


def write_filter_report(path, kept: Mapping[str, int] | Sequence[str]) -> None:
    lines = ["gene_id"]
    lines.extend(kept)
    _write(path, lines)
