"""Shared fixtures: the tyrosine-kinase ontology fragment, random DAG
builders, and the desk-scale dataset."""

from __future__ import annotations

import numpy as np
import pytest

from annomtp.dag import DirectAnnotations, OntologyDag, TermRecord
from annomtp.datasets import make_desk_dataset

# Molecular-function fragment around GO:0004713 (protein-tyrosine kinase
# activity).  The ancestor listing, single parent, 3 children, and 21
# offspring are the reference facts the fixture must reproduce.

KINASE_TERM = "GO:0004713"
KINASE_PARENT = "GO:0004672"
KINASE_ANCESTORS = (
    "all",
    "GO:0003674",
    "GO:0003824",
    "GO:0016740",
    "GO:0016772",
    "GO:0016773",
    "GO:0016301",
    "GO:0004672",
)
KINASE_CHILDREN = ("GO:0004714", "GO:0004715", "GO:0004716")
KINASE_OFFSPRING = (
    "GO:0004714", "GO:0004715", "GO:0004716", "GO:0005020",
    "GO:0005021", "GO:0005023", "GO:0005010", "GO:0005011",
    "GO:0005017", "GO:0005003", "GO:0005006", "GO:0005007",
    "GO:0005008", "GO:0005009", "GO:0008288", "GO:0005018",
    "GO:0005019", "GO:0005004", "GO:0005005", "GO:0008313",
    "GO:0004718",
)

GO_EDGES = (
    ("GO:0003674", "all", "is_a"),
    ("GO:0003824", "GO:0003674", "is_a"),
    ("GO:0016740", "GO:0003824", "is_a"),
    ("GO:0016772", "GO:0016740", "is_a"),
    ("GO:0016773", "GO:0016772", "is_a"),
    ("GO:0016301", "GO:0016772", "is_a"),
    ("GO:0004672", "GO:0016301", "is_a"),
    ("GO:0004672", "GO:0016773", "is_a"),
    ("GO:0004713", "GO:0004672", "is_a"),
    ("GO:0004714", "GO:0004713", "is_a"),
    ("GO:0004715", "GO:0004713", "is_a"),
    ("GO:0004716", "GO:0004713", "is_a"),
    ("GO:0005003", "GO:0004714", "is_a"),
    ("GO:0005004", "GO:0005003", "is_a"),
    ("GO:0005005", "GO:0005003", "is_a"),
    ("GO:0005006", "GO:0004714", "is_a"),
    ("GO:0005007", "GO:0004714", "is_a"),
    ("GO:0005008", "GO:0004714", "is_a"),
    ("GO:0005009", "GO:0004714", "is_a"),
    ("GO:0005010", "GO:0004714", "is_a"),
    ("GO:0005011", "GO:0004714", "is_a"),
    ("GO:0005017", "GO:0004714", "is_a"),
    ("GO:0005018", "GO:0005017", "is_a"),
    ("GO:0005019", "GO:0005017", "is_a"),
    ("GO:0005020", "GO:0004714", "is_a"),
    ("GO:0005021", "GO:0004714", "is_a"),
    ("GO:0005023", "GO:0004714", "is_a"),
    ("GO:0008288", "GO:0004714", "is_a"),
    ("GO:0008313", "GO:0004714", "is_a"),
    ("GO:0004718", "GO:0004715", "is_a"),
)

GO_TERM_NAMES = {
    "all": "all",
    "GO:0003674": "molecular_function",
    "GO:0003824": "catalytic activity",
    "GO:0016740": "transferase activity",
    "GO:0016772": "transferase activity, transferring phosphorus-containing groups",
    "GO:0016773": "phosphotransferase activity, alcohol group as acceptor",
    "GO:0016301": "kinase activity",
    "GO:0004672": "protein kinase activity",
    "GO:0004713": "protein-tyrosine kinase activity",
}


def go_terms() -> tuple[TermRecord, ...]:
    ids = {e[0] for e in GO_EDGES} | {e[1] for e in GO_EDGES}
    return tuple(
        TermRecord(t, GO_TERM_NAMES.get(t, ""), "MF" if t != "all" else "")
        for t in sorted(ids)
    )


@pytest.fixture(scope="session")
def go_dag() -> OntologyDag:
    return OntologyDag(go_terms(), GO_EDGES)


@pytest.fixture(scope="session")
def desk():
    return make_desk_dataset()


def random_dag(rng: np.random.Generator, n_nodes: int, edge_prob: float = 0.15):
    """Random acyclic graph: edges point from higher to lower index."""
    nodes = [f"n{i}" for i in range(n_nodes)]
    edges = []
    for i in range(1, n_nodes):
        for j in range(i):
            if rng.random() < edge_prob:
                edges.append((nodes[i], nodes[j]))
    return nodes, edges


def random_annotations(
    rng: np.random.Generator, nodes: list[str], genes: list[str], pair_prob: float = 0.2
) -> DirectAnnotations:
    pairs = [
        (g, t, "IEA")
        for g in genes
        for t in nodes
        if rng.random() < pair_prob
    ]
    if not pairs:
        pairs = [(genes[0], nodes[0], "IEA")]
    return DirectAnnotations(tuple(pairs))
