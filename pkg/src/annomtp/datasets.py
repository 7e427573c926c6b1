"""Synthetic desk-scale datasets for demos, determinism checks, and tests.

The desk dataset is small enough to rerun in seconds (n=20 samples,
G=60 genes, M=5 annotation terms) yet exercises every scenario: a few
genes carry planted class effects and the annotation columns overlap
them to varying degrees.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .association import AnnotationMatrix
from .profiles import SampleData
from .rng import stream
from . import tsv

DESK_SEED = 60031
DESK_N = 20
DESK_G = 60
DESK_M = 5


def make_desk_dataset(seed: int = DESK_SEED) -> tuple[SampleData, AnnotationMatrix]:
    rng = stream(seed, (7,))
    n, g, m = DESK_N, DESK_G, DESK_M
    x = rng.standard_normal((n, g))
    labels = tuple(["c0"] * (n // 2) + ["c1"] * (n - n // 2))
    # plant class effects in the first 8 genes
    effects = np.zeros(g)
    effects[:8] = rng.uniform(1.5, 3.0, size=8) * rng.choice([-1.0, 1.0], size=8)
    mask1 = np.array([y == "c1" for y in labels])
    x[mask1] += effects
    genes = tuple(f"g{i:03d}" for i in range(g))
    data = SampleData(x, labels, ("c0", "c1"), genes)

    a = np.zeros((g, m))
    a[:12, 0] = 1.0                      # enriched in planted genes
    a[rng.choice(g, 20, replace=False), 1] = 1.0
    a[rng.choice(g, 15, replace=False), 2] = 1.0
    a[30:58, 3] = 1.0                    # disjoint from planted genes
    a[rng.choice(g, 25, replace=False), 4] = 1.0
    terms = tuple(f"T{j:02d}" for j in range(m))
    return data, AnnotationMatrix(a, genes, terms, binary=True)


def write_desk_fixture(directory, seed: int = DESK_SEED) -> dict[str, Path]:
    """Write the desk dataset as CLI-ready TSV files; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    data, matrix = make_desk_dataset(seed)
    sample_ids = [f"s{i:02d}" for i in range(data.n_samples)]
    paths = {
        "expressions": directory / "expressions.tsv",
        "labels": directory / "labels.tsv",
        "annotation_matrix": directory / "annotation_matrix.tsv",
    }
    tsv.write_expressions(paths["expressions"], data, sample_ids)
    lines = ["sample_id\tclass"] + [
        f"{s}\t{y}" for s, y in zip(sample_ids, data.labels)
    ]
    paths["labels"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    tsv.write_annotation_matrix(paths["annotation_matrix"], matrix)
    return paths
