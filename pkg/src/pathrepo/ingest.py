"""Corpus ingest: clinical-trial JSON, MEDLINE records and tokenization."""

from __future__ import annotations

import json
import logging
import re
import textwrap
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .model import AbstractDoc, PathrepoError, TrialDoc

logger = logging.getLogger(__name__)


class IngestError(PathrepoError):
    """Raised when an input document cannot be turned into a corpus record."""


# -- clinical trials ------------------------------------------------------------

# (path through the JSON, label) tried in order; covers the flat export used by
# the fixtures, the ClinicalTrials.gov v2 API layout and the legacy XML-as-JSON dump.
_NCT_PATHS = (
    ("nct_id",),
    ("nctId",),
    ("protocolSection", "identificationModule", "nctId"),
    ("clinical_study", "id_info", "nct_id"),
)
_DESCRIPTION_PATHS = (
    ("description",),
    ("detailed_description",),
    ("protocolSection", "descriptionModule", "detailedDescription"),
    ("protocolSection", "descriptionModule", "briefSummary"),
    ("clinical_study", "detailed_description", "textblock"),
    ("clinical_study", "brief_summary", "textblock"),
)


def _dig(doc, path):
    for key in path:
        if not isinstance(doc, dict) or key not in doc:
            return None
        doc = doc[key]
    return doc


def _first(doc, paths) -> Optional[str]:
    for path in paths:
        value = _dig(doc, path)
        if isinstance(value, str) and value.strip():
            return value
    return None


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def parse_trial(json_doc, source: str = "<bytes>") -> TrialDoc:
    """Read one trial JSON document into a :class:`TrialDoc`.

    ``source`` names the file in error messages.
    """
    try:
        doc = json.loads(json_doc)
    except (ValueError, UnicodeDecodeError) as exc:
        raise IngestError(f"{source}: invalid JSON ({exc})") from None
    nct_id = _first(doc, _NCT_PATHS)
    if nct_id is None:
        raise IngestError(f"{source}: missing NCT id")
    description = _first(doc, _DESCRIPTION_PATHS)
    if description is None:
        raise IngestError(f"{source}: missing or empty description")
    return TrialDoc(nct_id.strip().upper(), normalize_whitespace(description))


def load_trials(directory, workers: int = 1) -> list:
    """Parse every ``*.json`` file in ``directory``; result sorted by NCT id."""
    paths = sorted(Path(directory).glob("*.json"))

    def _one(path):
        return parse_trial(path.read_bytes(), source=str(path))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            docs = list(pool.map(_one, paths))
    else:
        docs = [_one(p) for p in paths]
    docs.sort(key=lambda d: d.nct_id)
    for prev, cur in zip(docs, docs[1:]):
        if prev.nct_id == cur.nct_id:
            raise IngestError(f"duplicate trial id {cur.nct_id} in {directory}")
    return docs


# -- MEDLINE ----------------------------------------------------------------------

_TAG_RE = re.compile(r"^([A-Z][A-Z0-9]{0,3})\s*- ?(.*)$")
_CONTINUATION = "      "


class MedlineRecords(list):
    """List of :class:`AbstractDoc` that also remembers how many records were skipped."""

    skipped: int = 0


def _finish_record(fields: dict, start_line: int, out: MedlineRecords, skip_missing: bool):
    if not fields:
        return
    if "PMID" not in fields:
        raise IngestError(f"line {start_line}: record without PMID")
    pmid = fields["PMID"][0]
    if "AB" not in fields:
        if not skip_missing:
            raise IngestError(f"line {start_line}: record {pmid} has no abstract")
        out.skipped += 1
        return
    title = " ".join(fields.get("TI", []))
    out.append(AbstractDoc(pmid, normalize_whitespace(title), normalize_whitespace(" ".join(fields["AB"]))))


def parse_medline(stream, skip_missing_abstract: bool = True) -> MedlineRecords:
    """Parse MEDLINE tagged text (``PMID-``, ``TI  -``, ``AB  -``).

    ``stream`` may be a string or any iterable of lines.  Records are separated by
    blank lines; indented lines continue the previous tag.  Records without an
    abstract are skipped and counted in ``result.skipped``.
    """
    if isinstance(stream, str):
        stream = stream.splitlines()
    out = MedlineRecords()
    fields: dict = {}
    current = None
    start_line = 1
    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            _finish_record(fields, start_line, out, skip_missing_abstract)
            fields, current = {}, None
            continue
        if not fields:
            start_line = lineno
        if line.startswith(" "):
            if current is None:
                raise IngestError(f"line {lineno}: continuation line outside a field")
            current.append(current.pop() + " " + line.strip())
            continue
        m = _TAG_RE.match(line)
        if m is None:
            raise IngestError(f"line {lineno}: malformed MEDLINE tag line {line[:40]!r}")
        tag, value = m.group(1), m.group(2).strip()
        current = fields.setdefault(tag, [])
        current.append(value)
    _finish_record(fields, start_line, out, skip_missing_abstract)
    return out


def write_medline(docs: Iterable[AbstractDoc]) -> str:
    """Serialize records in MEDLINE tagged format (inverse of :func:`parse_medline`)."""
    wrapper = dict(width=80, subsequent_indent=_CONTINUATION, break_long_words=False, break_on_hyphens=False)
    chunks = []
    for doc in docs:
        lines = [f"PMID- {doc.pmid}"]
        if doc.title:
            lines.extend(textwrap.wrap(doc.title, initial_indent="TI  - ", **wrapper))
        lines.extend(textwrap.wrap(doc.abstract, initial_indent="AB  - ", **wrapper))
        chunks.append("\n".join(lines) + "\n")
    return "\n".join(chunks)


# -- normalized corpus files --------------------------------------------------------


def write_corpus_tsv(path, rows: Iterable[tuple]) -> None:
    """Write ``(id, text)`` rows; tabs and newlines in text are flattened."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ident, text in rows:
            fh.write(f"{ident}\t{normalize_whitespace(text)}\n")


def read_corpus_tsv(path) -> list:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            ident, sep, text = line.partition("\t")
            if not sep or not ident:
                raise IngestError(f"{path}:{lineno}: expected 'id<TAB>text'")
            rows.append((ident, text))
    return rows


def read_trials_tsv(path) -> list:
    return [TrialDoc(i, t) for i, t in read_corpus_tsv(path)]


def read_abstracts_tsv(path) -> list:
    return [AbstractDoc(i, "", t) for i, t in read_corpus_tsv(path)]


# -- tokenization --------------------------------------------------------------------

_WORD_RE = re.compile(r"\w+(?:-\w+)*|[^\w\s]")
_SENTENCE_END = frozenset(".?!")
_DIGIT_RE = re.compile(r"\d")


@dataclass(frozen=True)
class TokenStream:
    """Lowercased tokens with global 0-based indices.

    ``sentence_bounds`` holds half-open ``(start, stop)`` index ranges that tile
    the whole stream.
    """

    words: tuple
    sentence_bounds: tuple

    @property
    def tokens(self) -> list:
        return list(zip(self.words, range(len(self.words))))

    def __len__(self):
        return len(self.words)

    def sentence_of(self, index: int) -> int:
        for i, (start, stop) in enumerate(self.sentence_bounds):
            if start <= index < stop:
                return i
        raise IndexError(index)


def _split_word(word: str) -> list:
    # Hyphenated codes with digits (BMS-791325, 5-fluorouracil) stay whole;
    # plain hyphenated words (all-trans, co-administered) split on the hyphen.
    if "-" in word and not _DIGIT_RE.search(word):
        return [part for part in word.split("-") if part]
    return [word]


def tokenize(text: str) -> TokenStream:
    words = []
    bounds = []
    start = 0
    for m in _WORD_RE.finditer(text):
        tok = m.group().lower()
        if tok in _SENTENCE_END:
            words.append(tok)
            end = m.end()
            if end == len(text) or text[end].isspace():
                bounds.append((start, len(words)))
                start = len(words)
            continue
        words.extend(_split_word(tok))
    if start < len(words):
        bounds.append((start, len(words)))
    return TokenStream(tuple(words), tuple(bounds))
