"""Shared domain types for the three pipeline layers.

Drugs and proteins are referenced by their lowercase canonical name
everywhere outside the lexicon; the term objects only carry alias sets and
provenance.  All graph containers are immutable once built.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

NCT_RE = re.compile(r"^NCT\d{8}$")
KEGG_ID_RE = re.compile(r"^hsa:\d+$")

COMBINATION_FIELDS = ("drug_a", "drug_b", "nct_id", "relation")
PROXIMITY_FIELDS = ("drug", "protein", "pmid", "distance")

DEFAULT_RELATION = "co-occurrence"


class PathrepoError(Exception):
    """Base class for all errors raised by this package."""


class SelfPairError(PathrepoError, ValueError):
    """A drug was paired with itself."""


class GraphFormatError(PathrepoError, ValueError):
    """A serialized graph line could not be read back."""


def normalize_term(text: str) -> str:
    """Lowercase and collapse internal whitespace."""
    return " ".join(text.split()).lower()


class TermSource(str, enum.Enum):
    CHEBI = "ChEBI-lexicon"
    LLM = "LLM-extracted"


@dataclass(frozen=True)
class DrugTerm:
    canonical: str
    aliases: frozenset = frozenset()
    source: TermSource = TermSource.CHEBI

    def __post_init__(self):
        canonical = normalize_term(self.canonical)
        if not canonical:
            raise ValueError("drug term needs a non-empty canonical name")
        aliases = frozenset(normalize_term(a) for a in self.aliases) | {canonical}
        object.__setattr__(self, "canonical", canonical)
        object.__setattr__(self, "aliases", frozenset(a for a in aliases if a))
        object.__setattr__(self, "source", TermSource(self.source))

    def __str__(self):
        return self.canonical


@dataclass(frozen=True)
class ProteinTerm:
    canonical: str
    kegg_entry: str
    aliases: frozenset = frozenset()

    def __post_init__(self):
        canonical = normalize_term(self.canonical)
        if not canonical:
            raise ValueError("protein term needs a non-empty canonical name")
        if not KEGG_ID_RE.match(self.kegg_entry):
            raise ValueError(f"bad KEGG entry id {self.kegg_entry!r}")
        aliases = frozenset(normalize_term(a) for a in self.aliases) | {canonical}
        object.__setattr__(self, "canonical", canonical)
        object.__setattr__(self, "aliases", frozenset(a for a in aliases if a))

    def __str__(self):
        return self.canonical


@dataclass(frozen=True)
class Pathway:
    """One KEGG gene entry and the protein names listed in its graphics label.

    ``names`` keeps the label order; the first name is the canonical one.
    """

    id: str
    names: tuple
    extra_ids: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not KEGG_ID_RE.match(self.id):
            raise ValueError(f"bad pathway id {self.id!r}")
        if not self.names:
            raise ValueError(f"pathway {self.id} has no proteins")

    @property
    def canonical(self) -> str:
        return self.names[0]

    @property
    def proteins(self) -> frozenset:
        return frozenset(ProteinTerm(n, self.id) for n in self.names)

    @property
    def protein_names(self) -> frozenset:
        return frozenset(self.names)


@dataclass(frozen=True)
class TrialDoc:
    nct_id: str
    description: str


@dataclass(frozen=True)
class AbstractDoc:
    pmid: str
    title: str
    abstract: str


DrugRef = Union[DrugTerm, str]


def _name(ref: DrugRef) -> str:
    return ref.canonical if isinstance(ref, DrugTerm) else normalize_term(ref)


def canonical_pair(a: DrugRef, b: DrugRef) -> tuple:
    """Order an unordered drug pair lexicographically by canonical name.

    >>> canonical_pair("zanamivir", "oseltamivir")
    ('oseltamivir', 'zanamivir')
    """
    na, nb = _name(a), _name(b)
    if na == nb:
        raise SelfPairError(f"cannot pair {na!r} with itself")
    return (a, b) if na < nb else (b, a)


@dataclass(frozen=True, order=True)
class CombinationTriple:
    nct_id: str
    drug_a: str
    drug_b: str
    relation: str = DEFAULT_RELATION

    def __post_init__(self):
        a, b = canonical_pair(self.drug_a, self.drug_b)
        object.__setattr__(self, "drug_a", _name(a))
        object.__setattr__(self, "drug_b", _name(b))

    @property
    def pair(self) -> tuple:
        return (self.drug_a, self.drug_b)


@dataclass(frozen=True, order=True)
class ProximityEdge:
    drug: str
    protein: str
    pmid: str
    distance: int

    def __post_init__(self):
        if self.distance < 1:
            raise ValueError(f"proximity distance must be >= 1, got {self.distance}")


@dataclass(frozen=True)
class EvidenceRecord:
    pathway_id: str
    drug: str
    target: str
    trial_id: Optional[str] = None
    pmids: frozenset = field(default=frozenset(), compare=False)

    def sort_key(self):
        return (self.pathway_id, self.drug, self.target, self.trial_id or "")


# -- TSV serialization --------------------------------------------------------


def _write_rows(path, rows: Iterable[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write("\t".join(str(x) for x in row) + "\n")


def _read_rows(path, width: int):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != width:
                raise GraphFormatError(f"{path}:{lineno}: expected {width} fields, got {len(parts)}")
            yield lineno, parts


def write_combination_tsv(path, edges: Iterable[CombinationTriple]) -> None:
    _write_rows(path, ((e.drug_a, e.drug_b, e.nct_id, e.relation) for e in edges))


def read_combination_tsv(path) -> list:
    out = []
    for lineno, (a, b, nct, rel) in _read_rows(path, 4):
        try:
            out.append(CombinationTriple(nct, a, b, rel))
        except SelfPairError as exc:
            raise GraphFormatError(f"{path}:{lineno}: {exc}") from None
    return out


def write_proximity_tsv(path, edges: Iterable[ProximityEdge]) -> None:
    _write_rows(path, ((e.drug, e.protein, e.pmid, e.distance) for e in edges))


def read_proximity_tsv(path) -> list:
    out = []
    for lineno, (drug, protein, pmid, dist) in _read_rows(path, 4):
        try:
            out.append(ProximityEdge(drug, protein, pmid, int(dist)))
        except ValueError as exc:
            raise GraphFormatError(f"{path}:{lineno}: {exc}") from None
    return out


def ensure_parent(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path
