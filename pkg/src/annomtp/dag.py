"""Ontology DAG ingestion, reachability queries, true-path closure, and
assembly of binary annotation matrices over a gene universe.

The graph is validated acyclic on construction and immutable afterwards;
all queries are read-only and safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .association import AnnotationMatrix
from .errors import CycleDetected, DagError, EmptyUniverse, UnknownTerm


@dataclass(frozen=True)
class TermRecord:
    term_id: str
    name: str = ""
    namespace: str = ""


def find_cycle(
    node_ids: Sequence[str], edges: Iterable[tuple[str, str]]
) -> list[str] | None:
    """Return one directed cycle as [v0, ..., v0], or None if acyclic.

    Edges are (child, parent) pairs; the walk follows child -> parent.
    """
    up: dict[str, list[str]] = {v: [] for v in node_ids}
    for child, parent in edges:
        up[child].append(parent)

    WHITE, GRAY, BLACK = 0, 1, 2
    color = {v: WHITE for v in up}
    for start in up:
        if color[start] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        path = [start]
        color[start] = GRAY
        while stack:
            node, i = stack[-1]
            succ = up[node]
            if i < len(succ):
                stack[-1] = (node, i + 1)
                nxt = succ[i]
                if color[nxt] == GRAY:
                    return path[path.index(nxt) :] + [nxt]
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, 0))
                    path.append(nxt)
            else:
                color[node] = BLACK
                stack.pop()
                path.pop()
    return None


@dataclass(frozen=True)
class OntologyDag:
    """Terms plus (child, parent, relation) edges, acyclic by construction.

    Relation tags (e.g. "is_a", "part_of") are carried through but not
    distinguished by traversal: annotation propagates along every edge.
    """

    terms: tuple[TermRecord, ...]
    edges: tuple[tuple[str, str, str], ...]
    _up: dict[str, tuple[str, ...]] = field(repr=False, compare=False, default=None)
    _down: dict[str, tuple[str, ...]] = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        terms = tuple(
            t if isinstance(t, TermRecord) else TermRecord(*t) for t in self.terms
        )
        edges = tuple(
            (e[0], e[1], e[2] if len(e) > 2 else "") for e in self.edges
        )
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "edges", edges)
        ids = [t.term_id for t in terms]
        known = set(ids)
        if len(known) != len(ids):
            raise DagError("duplicate term ids")
        seen = set()
        up: dict[str, list[str]] = {v: [] for v in ids}
        down: dict[str, list[str]] = {v: [] for v in ids}
        for child, parent, _ in edges:
            if child not in known or parent not in known:
                raise UnknownTerm(f"edge endpoint not in terms: ({child}, {parent})")
            if (child, parent) in seen:
                raise DagError(f"duplicate edge ({child}, {parent})")
            seen.add((child, parent))
            up[child].append(parent)
            down[parent].append(child)
        cycle = find_cycle(ids, [(c, p) for c, p, _ in edges])
        if cycle is not None:
            raise CycleDetected(cycle)
        object.__setattr__(self, "_up", {v: tuple(ps) for v, ps in up.items()})
        object.__setattr__(self, "_down", {v: tuple(cs) for v, cs in down.items()})

    def _check(self, term_id: str) -> None:
        if term_id not in self._up:
            raise UnknownTerm(f"unknown term {term_id!r}")

    @property
    def term_ids(self) -> tuple[str, ...]:
        return tuple(t.term_id for t in self.terms)

    def term(self, term_id: str) -> TermRecord:
        self._check(term_id)
        return next(t for t in self.terms if t.term_id == term_id)

    def parents(self, term_id: str) -> set[str]:
        self._check(term_id)
        return set(self._up[term_id])

    def children(self, term_id: str) -> set[str]:
        self._check(term_id)
        return set(self._down[term_id])

    def _reach(self, term_id: str, adj: dict[str, tuple[str, ...]]) -> set[str]:
        self._check(term_id)
        out: set[str] = set()
        frontier = list(adj[term_id])
        while frontier:
            v = frontier.pop()
            if v not in out:
                out.add(v)
                frontier.extend(adj[v])
        return out

    def ancestors(self, term_id: str) -> set[str]:
        """Every term reachable upward, excluding the term itself."""
        return self._reach(term_id, self._up)

    def offspring(self, term_id: str) -> set[str]:
        """Every term reachable downward, excluding the term itself."""
        return self._reach(term_id, self._down)

    def ancestor_table(self) -> dict[str, set[str]]:
        """Ancestor sets for all terms in one topological sweep."""
        order: list[str] = []
        indeg = {v: len(self._up[v]) for v in self._up}
        ready = [v for v, d in indeg.items() if d == 0]
        while ready:
            v = ready.pop()
            order.append(v)
            for c in self._down[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        table: dict[str, set[str]] = {}
        for v in order:
            anc: set[str] = set()
            for p in self._up[v]:
                anc.add(p)
                anc |= table[p]
            table[v] = anc
        return table


def validate_dag(dag: OntologyDag) -> None:
    """No-op for a constructed dag; construction already proves acyclicity."""
    cycle = find_cycle(dag.term_ids, [(c, p) for c, p, _ in dag.edges])
    if cycle is not None:  # unreachable for a constructed OntologyDag
        raise CycleDetected(cycle)


@dataclass(frozen=True)
class DirectAnnotations:
    """(gene_id, term_id, evidence) triples; evidence is opaque."""

    pairs: tuple[tuple[str, str, str], ...]

    def __post_init__(self):
        normalized = tuple(
            (p[0], p[1], p[2] if len(p) > 2 else "") for p in self.pairs
        )
        object.__setattr__(self, "pairs", normalized)

    def genes(self) -> set[str]:
        return {g for g, _, _ in self.pairs}

    def terms(self) -> set[str]:
        return {t for _, t, _ in self.pairs}


def propagate_true_path(
    dag: OntologyDag, direct: DirectAnnotations
) -> DirectAnnotations:
    """Close annotations upward: each (gene, term) pair implies (gene, a)
    for every ancestor a of the term.

    Deduplicates on (gene, term); a pair keeps the evidence tag of its
    first source in input order, direct pairs before propagated ones.
    """
    table = dag.ancestor_table()
    seen: dict[tuple[str, str], str] = {}
    for gene, term, ev in direct.pairs:
        if term not in table:
            raise UnknownTerm(f"annotation references unknown term {term!r}")
        seen.setdefault((gene, term), ev)
    for gene, term, ev in direct.pairs:
        for anc in sorted(table[term]):
            seen.setdefault((gene, anc), ev)
    pairs = tuple((g, t, ev) for (g, t), ev in seen.items())
    return DirectAnnotations(pairs)


@dataclass(frozen=True)
class AssemblyReport:
    kept: tuple[tuple[str, int], ...]
    dropped: tuple[tuple[str, int], ...]
    n_ignored_genes: int


def assemble_matrix(
    dag: OntologyDag,
    direct: DirectAnnotations,
    gene_universe: Sequence[str],
    min_genes: int = 10,
    namespace: str | None = None,
) -> tuple[AnnotationMatrix, AssemblyReport]:
    """Binary gene-by-term matrix over ``gene_universe`` after true-path
    closure, keeping terms annotating at least ``min_genes`` universe genes.

    Annotated genes outside the universe are ignored (counted in the
    report); columns are sorted by term id.
    """
    genes = list(gene_universe)
    if not genes:
        raise EmptyUniverse("empty gene universe")
    if len(set(genes)) != len(genes):
        raise ValueError("duplicate gene ids in universe")
    closed = propagate_true_path(dag, direct)
    universe = {g: i for i, g in enumerate(genes)}
    ns_terms = {
        t.term_id
        for t in dag.terms
        if namespace is None or t.namespace == namespace
    }
    members: dict[str, set[int]] = {}
    ignored: set[str] = set()
    for gene, term, _ in closed.pairs:
        if gene not in universe:
            ignored.add(gene)
            continue
        if term in ns_terms:
            members.setdefault(term, set()).add(universe[gene])

    kept, dropped = [], []
    for term in sorted(members):
        count = len(members[term])
        (kept if count >= min_genes else dropped).append((term, count))

    values = np.zeros((len(genes), len(kept)))
    for j, (term, _) in enumerate(kept):
        values[list(members[term]), j] = 1.0
    matrix = AnnotationMatrix(
        values, tuple(genes), tuple(t for t, _ in kept), binary=True
    )
    report = AssemblyReport(tuple(kept), tuple(dropped), len(ignored))
    return matrix, report
