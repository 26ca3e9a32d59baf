import itertools
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from pathrepo.lexicon import load_drug_lexicon
from pathrepo.model import CombinationTriple, TrialDoc
from pathrepo.prompts import (
    API_KEY_ENV,
    SINGLE_LINE_INSTRUCTION,
    AnnotationError,
    BackendError,
    ChatCompletionsBackend,
    ExtractionError,
    MockBackend,
    PromptError,
    build_prompt,
    embedded_trial,
    extract_corpus,
    extract_trial,
    load_shots,
    mock_backend,
    parse_response,
    parse_shot,
    shot_keywords,
)

TRIAL = TrialDoc("NCT1", "Tamoxifen plus anastrozole in postmenopausal women.")


# -- shots ------------------------------------------------------------------------------------


def test_parse_shot_plus():
    shot = parse_shot("⟨oseltamivir⟩ [+] ⟨zanamivir⟩")
    assert shot.drugs == ("oseltamivir", "zanamivir")
    assert shot.relations == ("+",)
    assert shot.plain == "oseltamivir + zanamivir"


def test_parse_shot_plus_word():
    shot = parse_shot("⟨zidovudine⟩ ( AZT ) [plus] ⟨didanosine⟩")
    assert shot.drugs == ("zidovudine", "didanosine")
    assert shot.relations == ("plus",)


def test_parse_shot_no_markers():
    shot = parse_shot("no markers here")
    assert shot.drugs == () and shot.relations == () and shot.plain == "no markers here"


def test_parse_shot_ascii_markers():
    assert parse_shot("<a> [combined] with <b>").drugs == ("a", "b")


@pytest.mark.parametrize("text, offset", [("⟨a", 0), ("a⟩", 1), ("⟨a [b]⟩", 3), ("⟨a]", 2)])
def test_parse_shot_unbalanced(text, offset):
    with pytest.raises(AnnotationError) as info:
        parse_shot(text)
    assert info.value.offset == offset


def test_bundled_shots():
    shots = load_shots()
    assert len(shots) == 7
    assert shots[0].raw == "⟨oseltamivir⟩ [+] ⟨zanamivir⟩"
    assert {"+", "plus", "combination", "co-administered", "combined"} <= shot_keywords(shots)


# -- prompt ---------------------------------------------------------------------------------------


def test_build_prompt_structure():
    shots = load_shots()
    prompt = build_prompt(TRIAL, shots, ("NCT1 | a | b", "NCT1 | a | c"))
    text = prompt.text
    assert prompt.shot_count == 7
    assert "You are a specialized drug annotator" in text
    assert all(s.raw in text for s in shots)
    assert "NCT1 | a | b" in text and "NCT1 | a | c" in text
    assert SINGLE_LINE_INSTRUCTION in text
    # template order: role, shots, task, format examples, instruction
    positions = [text.index(x) for x in ("specialized drug annotator", shots[-1].raw, TRIAL.description,
                                         "NCT1 | a | c", SINGLE_LINE_INSTRUCTION)]
    assert positions == sorted(positions)
    assert embedded_trial(text) == ("NCT1", TRIAL.description)


def test_build_prompt_prefixes_bare_examples():
    text = build_prompt(TRIAL, load_shots()).text
    assert "NCT1 | tamoxifen | anastrozole" in text


def test_build_prompt_preconditions():
    with pytest.raises(PromptError):
        build_prompt(TRIAL, [])
    with pytest.raises(PromptError):
        build_prompt(TrialDoc("NCT1", "   "), load_shots())


# -- response parsing -------------------------------------------------------------------------------


def test_parse_single_line():
    triples, rejects = parse_response("NCT1", "NCT1 | Tamoxifen | anastrozole")
    assert triples == [CombinationTriple("NCT1", "anastrozole", "tamoxifen")]
    assert rejects == []


def test_parse_k_drug_line():
    triples, _ = parse_response("NCT1", "NCT1 | a | b | c")
    assert [t.pair for t in triples] == [("a", "b"), ("a", "c"), ("b", "c")]


def test_parse_rejects():
    _, rejects = parse_response("NCT1", "hello world\nNCT2 | a | b\nNCT1 | a | a\n\n")
    assert [(r.line_no, r.reason) for r in rejects] == [
        (1, "too few fields"), (2, "nct id mismatch: 'NCT2'"), (3, "too few drugs")]


def test_parse_relation_field_and_duplicates():
    triples, _ = parse_response("NCT1", "- NCT1 | a | [plus] | b\n{NCT1 | b | a}")
    assert triples == [CombinationTriple("NCT1", "a", "b", "plus")]


# -- backends ---------------------------------------------------------------------------------------


def test_mock_map_mode():
    backend = mock_backend({"NCT1": "NCT1 | a | b"})
    assert backend.mode == "map"
    prompt = build_prompt(TRIAL, load_shots()).text
    assert backend.complete(prompt) == "NCT1 | a | b"
    other = build_prompt(TrialDoc("NCT9", "x"), load_shots()).text
    assert backend.complete(other) == ""


def test_mock_rule_mode():
    lex = load_drug_lexicon(["tamoxifen", "anastrozole", "letrozole", "docetaxel"])
    backend = mock_backend(lexicon=lex)
    trial = TrialDoc("NCT7", "Tamoxifen plus anastrozole versus letrozole. Prior docetaxel and tamoxifen allowed.")
    prompt = build_prompt(trial, load_shots()).text
    response = backend.complete(prompt)
    assert response == backend.complete(prompt)
    triples, _ = parse_response("NCT7", response)
    assert {t.pair for t in triples} == {("anastrozole", "tamoxifen"), ("anastrozole", "letrozole"),
                                         ("letrozole", "tamoxifen")}


def test_mock_needs_configuration():
    with pytest.raises(ValueError):
        MockBackend()


class Flaky:
    model_name = "flaky"

    def __init__(self, failures, response="NCT1 | a | b"):
        self.failures = failures
        self.calls = 0
        self.response = response

    def complete(self, prompt):
        self.calls += 1
        if self.calls <= self.failures:
            raise BackendError("connection reset")
        return self.response


def test_extract_trial_retries_then_succeeds():
    delays = []
    backend = Flaky(2)
    triples = extract_trial(TRIAL, backend, load_shots(), backoff=0.1, sleep=delays.append)
    assert [t.pair for t in triples] == [("a", "b")]
    assert backend.calls == 3
    assert delays == [0.1, 0.2]


def test_extract_trial_exhausts_retries():
    backend = Flaky(100)
    with pytest.raises(ExtractionError) as info:
        extract_trial(TRIAL, backend, load_shots(), retries=3, sleep=lambda s: None)
    assert info.value.nct_id == "NCT1"
    assert backend.calls == 4


def test_extract_corpus_continues_after_failure():
    class Partial:
        model_name = "partial"

        def complete(self, prompt):
            nct, _ = embedded_trial(prompt)
            if nct == "NCT2":
                raise BackendError("down")
            return f"{nct} | a | b\ngarbage"

    trials = [TrialDoc(f"NCT{i}", "a plus b") for i in (3, 1, 2)]
    run = extract_corpus(trials, Partial(), load_shots(), workers=2, backoff=0, sleep=lambda s: None)
    assert [t.nct_id for t in run.triples] == ["NCT1", "NCT3"]
    assert [n for n, _ in run.errors] == ["NCT2"]
    report = run.report()
    assert report["triples"] == 2 and len(report["rejected_lines"]) == 2


# -- live backend against a local fake server -----------------------------------------------------


@pytest.fixture
def fake_server():
    seen = []

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
            seen.append((self.path, self.headers.get("Authorization"), body))
            nct, _ = embedded_trial(body["messages"][0]["content"])
            payload = {"choices": [{"message": {"role": "assistant", "content": f"{nct} | x | y"}}]}
            data = json.dumps(payload).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, *args):
            pass

    server = HTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1", seen
    server.shutdown()


def test_live_backend_round_trip(fake_server, monkeypatch):
    url, seen = fake_server
    monkeypatch.setenv(API_KEY_ENV, "sk-test")
    backend = ChatCompletionsBackend(url, "test-model")
    triples = extract_trial(TRIAL, backend, load_shots())
    assert [t.pair for t in triples] == [("x", "y")]
    path, auth, body = seen[0]
    assert path == "/v1/chat/completions"
    assert auth == "Bearer sk-test"
    assert body["model"] == "test-model" and body["temperature"] == 0
    assert len(body["messages"]) == 1 and body["messages"][0]["role"] == "user"


def test_live_backend_unreachable():
    backend = ChatCompletionsBackend("http://127.0.0.1:9", "m", api_key="", timeout=2)
    with pytest.raises(BackendError):
        backend.complete(build_prompt(TRIAL, load_shots()).text)


def test_pair_expansion_matches_enumeration():
    for k in range(2, 7):
        drugs = [f"d{i}" for i in range(k)]
        triples, _ = parse_response("NCT1", " | ".join(["NCT1", *drugs]))
        assert {t.pair for t in triples} == set(itertools.combinations(drugs, 2))
