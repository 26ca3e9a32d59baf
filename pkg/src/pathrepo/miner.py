"""Drug-target proximity mining over abstracts."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .ingest import tokenize
from .lexicon import Mention, PhraseLexicon, find_mentions
from .model import AbstractDoc, PathrepoError, ProximityEdge, read_proximity_tsv, write_proximity_tsv

DEFAULT_WINDOW = 30
DEFAULT_WINDOWS = (10, 20, 30, 40, 50)


class DegenerateSpanError(PathrepoError, ValueError):
    """Two mentions cover exactly the same tokens."""


def calc_distance(m1: Mention, m2: Mention) -> int:
    """Token gap between two mention spans.

    Adjacent spans are 1 apart; ``[0,0]`` and ``[2,2]`` are 2 apart.
    Overlapping (but not identical) spans are floored to 1.
    """
    a, b = sorted((m1.span, m2.span))
    if a == b:
        raise DegenerateSpanError(f"identical spans {a}")
    return max(b[0] - a[1], 1)


def _min_distances(drugs: Sequence[Mention], proteins: Sequence[Mention]) -> dict:
    best: dict = {}
    for d in drugs:
        ds, de = d.start_index, d.end_index
        for p in proteins:
            ps, pe = p.start_index, p.end_index
            if ds == ps and de == pe:
                continue
            dist = ps - de if (ds, de) < (ps, pe) else ds - pe
            if dist < 1:
                dist = 1
            key = (d.term.canonical, p.term.canonical)
            if dist < best.get(key, dist + 1):
                best[key] = dist
    return best


def mine_abstract(doc: AbstractDoc, drug_lex: PhraseLexicon, protein_lex: PhraseLexicon,
                  max_distance: int = DEFAULT_WINDOW) -> list:
    """One edge per (drug, protein) pair carrying the closest co-occurrence."""
    if max_distance < 1:
        raise ValueError("max_distance must be >= 1")
    stream = tokenize(doc.abstract)
    drugs = find_mentions(stream, drug_lex)
    if not drugs:
        return []
    proteins = find_mentions(stream, protein_lex)
    if not proteins:
        return []
    best = _min_distances(drugs, proteins)
    return [
        ProximityEdge(drug, protein, doc.pmid, dist)
        for (drug, protein), dist in sorted(best.items())
        if dist <= max_distance
    ]


@dataclass(frozen=True)
class DrugTargetGraph:
    """Proximity layer: (drug, protein) pairs with per-PMID minimum distances."""

    edges: tuple  # sorted ProximityEdge
    _pairs: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        pairs: dict = {}
        for e in self.edges:
            pairs.setdefault((e.drug, e.protein), {})[e.pmid] = e.distance
        object.__setattr__(self, "_pairs", pairs)

    @classmethod
    def from_edges(cls, edges: Iterable[ProximityEdge]) -> "DrugTargetGraph":
        best: dict = {}
        for e in edges:
            key = (e.drug, e.protein, e.pmid)
            if key not in best or e.distance < best[key].distance:
                best[key] = e
        return cls(tuple(sorted(best.values())))

    @property
    def pairs(self) -> frozenset:
        return frozenset(self._pairs)

    @property
    def drugs(self) -> frozenset:
        return frozenset(d for d, _ in self._pairs)

    @property
    def proteins(self) -> frozenset:
        return frozenset(p for _, p in self._pairs)

    @property
    def nodes(self) -> frozenset:
        return self.drugs | self.proteins

    @property
    def pmids(self) -> frozenset:
        return frozenset(e.pmid for e in self.edges)

    def evidence(self, drug: str, protein: str) -> dict:
        """PMID -> distance for one pair."""
        return dict(self._pairs.get((drug, protein), {}))

    def aggregated(self) -> list:
        """``(drug, protein, sorted pmids, min distance)`` per pair."""
        return [
            (d, p, tuple(sorted(ev)), min(ev.values()))
            for (d, p), ev in sorted(self._pairs.items())
        ]

    def within(self, max_distance: int) -> "DrugTargetGraph":
        return DrugTargetGraph(tuple(e for e in self.edges if e.distance <= max_distance))

    def __len__(self):
        return len(self.edges)

    def write_tsv(self, path) -> None:
        write_proximity_tsv(path, self.edges)

    @classmethod
    def read_tsv(cls, path) -> "DrugTargetGraph":
        return cls.from_edges(read_proximity_tsv(path))


def build_drug_target_layer(corpus: Iterable[AbstractDoc], drug_lex: PhraseLexicon, protein_lex: PhraseLexicon,
                            max_distance: int = DEFAULT_WINDOW, workers: int = 1) -> DrugTargetGraph:
    docs = list(corpus)
    if not docs:
        raise ValueError("cannot mine an empty corpus")

    def _one(doc):
        return mine_abstract(doc, drug_lex, protein_lex, max_distance)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            per_doc = list(pool.map(_one, docs, chunksize=64))
    else:
        per_doc = [_one(d) for d in docs]
    return DrugTargetGraph.from_edges(e for edges in per_doc for e in edges)


def window_sweep(corpus: Iterable[AbstractDoc], drug_lex: PhraseLexicon, protein_lex: PhraseLexicon,
                 windows: Sequence[int] = DEFAULT_WINDOWS, workers: int = 1) -> dict:
    """Mine once at the widest window and filter down; window -> graph."""
    windows = sorted(set(windows))
    full = build_drug_target_layer(corpus, drug_lex, protein_lex, windows[-1], workers)
    return {w: full.within(w) for w in windows}
