"""Trial-labeled multigraph of drug combinations."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .model import (
    DEFAULT_RELATION,
    CombinationTriple,
    SelfPairError,
    read_combination_tsv,
    write_combination_tsv,
)

logger = logging.getLogger(__name__)

COMBINATION_KEYWORDS = frozenset({"combination", "plus", "+", "combined", "co-administered"})
COMBINATION_THERAPY = "combination therapy"


def relation_label(relation: str, keywords=COMBINATION_KEYWORDS) -> str:
    """Collapse a raw relation keyword into ``combination therapy`` or ``co-occurrence``."""
    return COMBINATION_THERAPY if relation.lower() in keywords else DEFAULT_RELATION


def _relation_rank(relation: str):
    return (relation == DEFAULT_RELATION, relation)


@dataclass(frozen=True)
class CombinationGraph:
    """Drug nodes plus one edge per distinct (canonical pair, trial id).

    ``edges`` is sorted, so two graphs built from the same triples in any
    order compare equal.
    """

    nodes: frozenset
    edges: tuple
    _by_pair: dict = field(default=None, init=False, repr=False, compare=False)
    _by_drug: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        by_pair, by_drug = defaultdict(set), defaultdict(set)
        for e in self.edges:
            if e.drug_a not in self.nodes or e.drug_b not in self.nodes:
                raise ValueError(f"edge {e} has an endpoint outside the node set")
            by_pair[e.pair].add(e.nct_id)
            by_drug[e.drug_a].add(e.nct_id)
            by_drug[e.drug_b].add(e.nct_id)
        object.__setattr__(self, "_by_pair", {k: tuple(sorted(v)) for k, v in by_pair.items()})
        object.__setattr__(self, "_by_drug", {k: tuple(sorted(v)) for k, v in by_drug.items()})

    @classmethod
    def empty(cls) -> "CombinationGraph":
        return cls(frozenset(), ())

    def has_pair(self, a: str, b: str) -> bool:
        return self.trials_for_pair(a, b) != ()

    def trials_for_pair(self, a: str, b: str) -> tuple:
        key = (a, b) if a < b else (b, a)
        return self._by_pair.get(key, ())

    def trials_for_drug(self, drug: str) -> tuple:
        return self._by_drug.get(drug, ())

    @property
    def pairs(self) -> frozenset:
        return frozenset(self._by_pair)

    def stats(self) -> dict:
        return {
            "nodes": len(self.nodes),
            "edges": len(self.edges),
            "distinct_pairs": len(self._by_pair),
            "trials": len({e.nct_id for e in self.edges}),
            "combination_therapy_edges": sum(relation_label(e.relation) == COMBINATION_THERAPY for e in self.edges),
        }

    def subgraph(self, keep: Iterable[str]) -> "CombinationGraph":
        """Induced subgraph on ``keep``; kept nodes may end up isolated."""
        keep = frozenset(keep) & self.nodes
        edges = tuple(e for e in self.edges if e.drug_a in keep and e.drug_b in keep)
        return CombinationGraph(keep, edges)

    def write_tsv(self, path) -> None:
        write_combination_tsv(path, self.edges)

    @classmethod
    def read_tsv(cls, path) -> "CombinationGraph":
        return build_combination_graph(read_combination_tsv(path))


def _as_triple(item):
    if isinstance(item, CombinationTriple):
        return item
    return CombinationTriple(*item)


def build_combination_graph(triples: Iterable) -> CombinationGraph:
    """Build the multigraph from triples or ``(nct_id, drug_a, drug_b[, relation])`` tuples.

    Self-pairs are dropped with a warning.  Duplicate (pair, trial) edges
    collapse to one; if they disagree on the relation, a keyword beats
    ``co-occurrence`` and ties go to the alphabetically first keyword.
    """
    best: dict = {}
    dropped = 0
    for item in triples:
        try:
            t = _as_triple(item)
        except SelfPairError:
            dropped += 1
            continue
        key = (t.drug_a, t.drug_b, t.nct_id)
        have = best.get(key)
        if have is None or _relation_rank(t.relation) < _relation_rank(have.relation):
            best[key] = t
    if dropped:
        logger.warning("dropped %d self-paired triple(s)", dropped)
    edges = tuple(sorted(best.values()))
    nodes = frozenset(d for e in edges for d in e.pair)
    return CombinationGraph(nodes, edges)


def drugs_in_layer(graph: CombinationGraph) -> frozenset:
    return graph.nodes
