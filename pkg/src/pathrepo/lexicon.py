"""Dictionary lookup of drug and protein names over token streams."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Union

from .ingest import TokenStream, tokenize
from .kgml import PathwayModule
from .model import DrugTerm, PathrepoError, ProteinTerm, TermSource, normalize_term

logger = logging.getLogger(__name__)

Term = Union[DrugTerm, ProteinTerm]


class LexiconError(PathrepoError):
    pass


@dataclass(frozen=True)
class Mention:
    """A lexicon hit covering tokens ``start_index..end_index`` (inclusive)."""

    term: Term
    start_index: int
    end_index: int

    @property
    def name(self) -> str:
        return self.term.canonical

    @property
    def span(self) -> tuple:
        return (self.start_index, self.end_index)


class PhraseLexicon:
    """Exact, case-insensitive multi-token phrase lookup.

    Keys are token tuples produced by :func:`tokenize`, so a phrase matches
    exactly when the document tokenizes the same way.
    """

    def __init__(self, terms: Iterable[Term] = ()):
        self.entries: dict = {}
        for term in sorted(terms, key=lambda t: t.canonical):
            for alias in sorted(term.aliases):
                key = tokenize(alias).words
                if not key:
                    continue
                have = self.entries.get(key)
                if have is not None and have.canonical != term.canonical:
                    logger.debug("alias %r already maps to %r; ignoring %r", alias, have.canonical, term.canonical)
                    continue
                self.entries[key] = term
        # first token -> candidate phrase lengths, longest first
        lengths: dict = {}
        for key in self.entries:
            lengths.setdefault(key[0], set()).add(len(key))
        self._lengths = {k: tuple(sorted(v, reverse=True)) for k, v in lengths.items()}
        self.max_phrase_len = max((len(k) for k in self.entries), default=0)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, phrase) -> bool:
        if isinstance(phrase, str):
            phrase = tokenize(phrase).words
        return tuple(phrase) in self.entries

    @property
    def terms(self) -> list:
        return sorted({t.canonical: t for t in self.entries.values()}.values(), key=lambda t: t.canonical)

    def lookup(self, phrase: str):
        return self.entries.get(tokenize(phrase).words)

    def canonicalize(self, name: str) -> str:
        """Map an alias to its canonical name; unknown names pass through normalized."""
        term = self.lookup(name)
        return term.canonical if term is not None else normalize_term(name)

    def find_mentions(self, tokens: Union[TokenStream, tuple, list]) -> list:
        return find_mentions(tokens, self)


def find_mentions(tokens, lex: PhraseLexicon) -> list:
    """Greedy longest match, scanning left to right without overlaps."""
    words = tokens.words if isinstance(tokens, TokenStream) else tuple(tokens)
    entries, lengths = lex.entries, lex._lengths
    n = len(words)
    out = []
    i = 0
    while i < n:
        cands = lengths.get(words[i])
        if cands:
            for length in cands:
                if i + length <= n:
                    term = entries.get(words[i:i + length])
                    if term is not None:
                        out.append(Mention(term, i, i + length - 1))
                        i += length
                        break
            else:
                i += 1
            continue
        i += 1
    return out


def load_drug_lexicon(source) -> PhraseLexicon:
    """Load a drug term list.

    ``source`` is a path or an iterable of lines.  Each line is either a term or
    ``synonym<TAB>canonical``; blank lines and ``#`` comments are ignored.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        lines = list(source)
    aliases: dict = {}
    for line in lines:
        line = line.strip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        synonym, _, canonical = line.partition("\t")
        canonical = normalize_term(canonical or synonym)
        if not canonical:
            continue
        aliases.setdefault(canonical, set()).add(normalize_term(synonym))
    if not aliases:
        raise LexiconError("drug lexicon is empty")
    return PhraseLexicon(DrugTerm(c, frozenset(a), TermSource.CHEBI) for c, a in aliases.items())


def protein_lexicon(module: PathwayModule) -> PhraseLexicon:
    """One searchable term per protein name in the pathway module."""
    return PhraseLexicon(module.unique_proteins)
