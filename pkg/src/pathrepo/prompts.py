"""Few-shot prompt construction, LLM backends and response parsing."""

from __future__ import annotations

import itertools
import json
import logging
import os
import re
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable, Optional, Protocol, Sequence

from .combos import COMBINATION_KEYWORDS
from .ingest import tokenize
from .lexicon import PhraseLexicon, find_mentions
from .model import DEFAULT_RELATION, CombinationTriple, PathrepoError, TrialDoc, normalize_term

logger = logging.getLogger(__name__)

API_KEY_ENV = "PATHREPO_LLM_KEY"
DEFAULT_MODEL = "gpt-3.5-turbo"
DEFAULT_BASE_URL = "https://api.openai.com/v1"

ROLE_INSTRUCTION = (
    "You are a specialized drug annotator, detect drugs if annotated/marked using < and > "
    "and relationship if it is annotated/marked using [ and ]"
)
SHOTS_INTRO = "Your task is to learn from the following few shots:"
TASK_TEMPLATE = (
    "Now you need to analyze the description of this clinical trial {nct_id}: {description} "
    "to identify drugs and potential combinations"
)
FORMAT_INTRO = (
    "Your response will be combinations discovered in pipe-delimited format "
    "that follows the following examples:"
)
SINGLE_LINE_INSTRUCTION = "Write each combination found in a single line and no other messages should be written"

_TASK_RE = re.compile(
    r"analyze the description of this clinical trial (\S+): (.*) to identify drugs and potential combinations\n",
    re.DOTALL,
)


class AnnotationError(PathrepoError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class PromptError(PathrepoError):
    pass


class BackendError(PathrepoError):
    """Transport-level failure talking to an LLM backend; retried."""


class ExtractionError(PathrepoError):
    def __init__(self, nct_id: str, message: str):
        super().__init__(f"{nct_id}: {message}")
        self.nct_id = nct_id


# -- annotated shots --------------------------------------------------------------------

_OPEN = {"⟨": ("⟩", "drug"), "<": (">", "drug"), "[": ("]", "relation")}
_CLOSE = {"⟩", ">", "]"}


@dataclass(frozen=True)
class AnnotatedShot:
    raw: str
    drugs: tuple
    relations: tuple
    plain: str


def parse_shot(annotated: str) -> AnnotatedShot:
    """Pull ``⟨drug⟩`` and ``[relation]`` markers out of an annotated sentence.

    ASCII ``<``/``>`` are accepted as drug markers too.  Markers may not nest.

    >>> parse_shot("⟨oseltamivir⟩ [+] ⟨zanamivir⟩").drugs
    ('oseltamivir', 'zanamivir')
    """
    drugs, relations, plain = [], [], []
    open_at, closer, kind, buf = None, None, None, []
    for i, ch in enumerate(annotated):
        if ch in _OPEN:
            if open_at is not None:
                raise AnnotationError(f"nested marker {ch!r}", i)
            open_at, (closer, kind), buf = i, _OPEN[ch], []
        elif ch in _CLOSE:
            if open_at is None or ch != closer:
                raise AnnotationError(f"unmatched closing marker {ch!r}", i)
            (drugs if kind == "drug" else relations).append("".join(buf).strip())
            open_at = None
        else:
            plain.append(ch)
            if open_at is not None:
                buf.append(ch)
    if open_at is not None:
        raise AnnotationError("unclosed marker", open_at)
    return AnnotatedShot(annotated, tuple(drugs), tuple(relations), "".join(plain))


def load_shots(path=None) -> list:
    """One annotated example per line; defaults to the seven bundled shots."""
    if path is None:
        text = resources.files("pathrepo").joinpath("data/shots.txt").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return [parse_shot(line.strip()) for line in text.splitlines() if line.strip() and not line.startswith("#")]


def shot_keywords(shots: Iterable[AnnotatedShot]) -> frozenset:
    return frozenset(r.lower() for s in shots for r in s.relations if r)


# -- prompt ----------------------------------------------------------------------------------


@dataclass(frozen=True)
class PromptInstance:
    nct_id: str
    text: str
    shot_count: int


DEFAULT_OUTPUT_EXAMPLES = ("tamoxifen | anastrozole", "docetaxel | capecitabine")


def _output_line(nct_id: str, example: str) -> str:
    head = example.split("|", 1)[0].strip()
    return example if head.upper().startswith("NCT") else f"{nct_id} | {example}"


def build_prompt(trial: TrialDoc, shots: Sequence[AnnotatedShot], output_examples=DEFAULT_OUTPUT_EXAMPLES) -> PromptInstance:
    """Assemble the single user message sent for one trial."""
    if not shots:
        raise PromptError("at least one annotated shot is required")
    if not trial.description.strip():
        raise PromptError(f"{trial.nct_id}: empty description")
    if len(output_examples) != 2:
        raise PromptError("exactly two output examples are required")
    description = " ".join(trial.description.split())
    lines = [ROLE_INSTRUCTION, "", SHOTS_INTRO]
    lines += [f"    {s.raw}" for s in shots]
    lines += ["", TASK_TEMPLATE.format(nct_id=trial.nct_id, description=description), ""]
    lines += [FORMAT_INTRO]
    lines += [f"    {_output_line(trial.nct_id, ex)}" for ex in output_examples]
    lines += ["", SINGLE_LINE_INSTRUCTION]
    return PromptInstance(trial.nct_id, "\n".join(lines) + "\n", len(shots))


def embedded_trial(prompt: str) -> tuple:
    """Recover ``(nct_id, description)`` from a prompt built by :func:`build_prompt`."""
    m = _TASK_RE.search(prompt)
    if m is None:
        raise PromptError("prompt carries no trial description")
    return m.group(1), m.group(2)


# -- response parsing ----------------------------------------------------------------------------


@dataclass(frozen=True)
class RejectLine:
    line_no: int
    text: str
    reason: str


def parse_response(nct_id: str, response: str) -> tuple:
    """Split a pipe-delimited model response into triples and rejected lines.

    Lines listing k > 2 drugs expand into every unordered pair.  A field
    wrapped in square brackets is read as the relation keyword.
    """
    triples: dict = {}
    rejects = []
    for line_no, line in enumerate(response.splitlines(), 1):
        text = line.strip()
        if not text:
            continue
        body = text.lstrip("-*• ").strip()
        if body.startswith("{") and body.endswith("}"):
            body = body[1:-1]
        fields = [f.strip() for f in body.split("|")]
        if len(fields) < 3:
            rejects.append(RejectLine(line_no, text, "too few fields"))
            continue
        if fields[0].upper() != nct_id.upper():
            rejects.append(RejectLine(line_no, text, f"nct id mismatch: {fields[0]!r}"))
            continue
        relation = DEFAULT_RELATION
        drugs = []
        for f in fields[1:]:
            if len(f) > 2 and f.startswith("[") and f.endswith("]"):
                relation = normalize_term(f[1:-1]) or relation
                continue
            name = normalize_term(f)
            if name and name not in drugs:
                drugs.append(name)
        if len(drugs) < 2:
            rejects.append(RejectLine(line_no, text, "too few drugs"))
            continue
        for a, b in itertools.combinations(drugs, 2):
            t = CombinationTriple(nct_id, a, b, relation)
            triples.setdefault(t.pair, t)
    return sorted(triples.values()), rejects


# -- backends ------------------------------------------------------------------------------


class LLMBackend(Protocol):
    model_name: str

    def complete(self, prompt: str) -> str: ...


class MockBackend:
    """Deterministic stand-in for a chat model.

    In map mode the response is looked up by the trial id embedded in the
    prompt.  In rule mode every pair of lexicon drugs sharing a sentence with
    a combination keyword is emitted as ``NCT | a | b``.
    """

    model_name = "mock"

    def __init__(self, responses: Optional[dict] = None, lexicon: Optional[PhraseLexicon] = None,
                 keywords: Iterable[str] = ()):
        if responses is None and lexicon is None:
            raise ValueError("mock backend needs either a response map or a drug lexicon")
        self.responses = dict(responses) if responses is not None else None
        self.lexicon = lexicon
        self.keywords = sorted({tokenize(k).words for k in keywords if tokenize(k).words}, key=len, reverse=True)

    @property
    def mode(self) -> str:
        return "map" if self.responses is not None else "rule"

    def complete(self, prompt: str) -> str:
        nct_id, description = embedded_trial(prompt)
        if self.responses is not None:
            return self.responses.get(nct_id, "")
        return self._rule_response(nct_id, description)

    def _has_keyword(self, words: tuple) -> bool:
        for kw in self.keywords:
            n = len(kw)
            if any(words[i:i + n] == kw for i in range(len(words) - n + 1)):
                return True
        return False

    def _rule_response(self, nct_id: str, description: str) -> str:
        stream = tokenize(description)
        mentions = find_mentions(stream, self.lexicon)
        pairs = set()
        for start, stop in stream.sentence_bounds:
            if not self._has_keyword(stream.words[start:stop]):
                continue
            names = sorted({m.name for m in mentions if start <= m.start_index < stop})
            pairs.update(itertools.combinations(names, 2))
        return "\n".join(f"{nct_id} | {a} | {b}" for a, b in sorted(pairs))


def mock_backend(responses: Optional[dict] = None, lexicon: Optional[PhraseLexicon] = None,
                 keywords: Iterable[str] = COMBINATION_KEYWORDS) -> MockBackend:
    return MockBackend(responses, lexicon, keywords)


class ChatCompletionsBackend:
    """Minimal client for an OpenAI-style ``/chat/completions`` endpoint."""

    def __init__(self, base_url: str = DEFAULT_BASE_URL, model_name: str = DEFAULT_MODEL,
                 api_key: Optional[str] = None, timeout: float = 60.0, min_interval: float = 0.0):
        self.base_url = base_url.rstrip("/")
        self.model_name = model_name
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.timeout = timeout
        self.min_interval = min_interval
        self._lock = threading.Lock()
        self._last = 0.0

    def request_body(self, prompt: str) -> dict:
        return {"model": self.model_name, "messages": [{"role": "user", "content": prompt}], "temperature": 0}

    def _throttle(self):
        if self.min_interval <= 0:
            return
        with self._lock:
            wait = self._last + self.min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last = time.monotonic()

    def complete(self, prompt: str) -> str:
        self._throttle()
        req = urllib.request.Request(
            f"{self.base_url}/chat/completions",
            data=json.dumps(self.request_body(prompt)).encode("utf-8"),
            headers={"Content-Type": "application/json", "Authorization": f"Bearer {self.api_key}"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise BackendError(str(exc)) from exc
        try:
            return payload["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError):
            raise BackendError(f"unexpected response shape: {str(payload)[:200]}") from None


# -- extraction loop ----------------------------------------------------------------------------

_TRANSIENT = (BackendError, OSError, TimeoutError)


def _extract(trial, backend, shots, output_examples, retries, backoff, sleep):
    prompt = build_prompt(trial, shots, output_examples)
    for attempt in range(retries + 1):
        try:
            response = backend.complete(prompt.text)
            break
        except _TRANSIENT as exc:
            if attempt == retries:
                raise ExtractionError(trial.nct_id, f"backend failed after {retries + 1} attempts: {exc}") from exc
            delay = backoff * 2 ** attempt
            logger.info("%s: attempt %d failed (%s); retrying in %.2fs", trial.nct_id, attempt + 1, exc, delay)
            if delay > 0:
                sleep(delay)
    return parse_response(trial.nct_id, response)


def extract_trial(trial: TrialDoc, backend: LLMBackend, shots, output_examples=DEFAULT_OUTPUT_EXAMPLES,
                  retries: int = 3, backoff: float = 0.5, sleep: Callable = time.sleep) -> list:
    """Prompt the backend for one trial and return the parsed combination triples."""
    triples, _ = _extract(trial, backend, shots, output_examples, retries, backoff, sleep)
    return triples


@dataclass
class ExtractionRun:
    triples: list = field(default_factory=list)
    rejects: list = field(default_factory=list)  # (nct_id, RejectLine)
    errors: list = field(default_factory=list)  # (nct_id, message)

    def report(self) -> dict:
        return {
            "triples": len(self.triples),
            "rejected_lines": [
                {"nct_id": n, "line": r.line_no, "text": r.text, "reason": r.reason} for n, r in self.rejects
            ],
            "errors": [{"nct_id": n, "message": m} for n, m in self.errors],
        }


def extract_corpus(trials: Iterable[TrialDoc], backend: LLMBackend, shots, output_examples=DEFAULT_OUTPUT_EXAMPLES,
                   workers: int = 4, retries: int = 3, backoff: float = 0.5,
                   sleep: Callable = time.sleep) -> ExtractionRun:
    """Run extraction over many trials; one failing trial never stops the rest."""
    trials = sorted(trials, key=lambda t: t.nct_id)

    def _one(trial):
        try:
            return trial.nct_id, _extract(trial, backend, shots, output_examples, retries, backoff, sleep), None
        except (ExtractionError, PromptError) as exc:
            logger.error("%s", exc)
            return trial.nct_id, None, str(exc)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(_one, trials))
    else:
        results = [_one(t) for t in trials]
    run = ExtractionRun()
    for nct_id, parsed, error in results:
        if error is not None:
            run.errors.append((nct_id, error))
            continue
        triples, rejects = parsed
        run.triples.extend(triples)
        run.rejects.extend((nct_id, r) for r in rejects)
    run.triples.sort()
    return run
