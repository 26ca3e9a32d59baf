"""
Drug combinations from trial descriptions
=========================================

Builds the few-shot prompt for a handful of fixture trials, runs it through
the deterministic mock backend and turns the pipe-delimited replies into a
combination multigraph.  Swap ``mock_backend`` for ``ChatCompletionsBackend``
to talk to a real chat model.
"""

from pathlib import Path

from pathrepo.combos import build_combination_graph
from pathrepo.fda import load_fda_snapshot, validate_graph
from pathrepo.ingest import load_trials
from pathrepo.lexicon import load_drug_lexicon
from pathrepo.prompts import build_prompt, extract_corpus, load_shots, mock_backend

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

trials = load_trials(FIXTURES / "trials")
shots = load_shots()
print(f"{len(trials)} trials, {len(shots)} annotated shots")

# The prompt is a single user message: role, shots, the trial, output format.
print(build_prompt(trials[0], shots).text)

# Rule mode: every pair of lexicon drugs sharing a sentence with a
# combination keyword becomes one reply line.
lexicon = load_drug_lexicon(FIXTURES / "drugs.txt")
backend = mock_backend(lexicon=lexicon)
run = extract_corpus(trials, backend, shots, workers=4, backoff=0)
print(f"{len(run.triples)} triples, {len(run.rejects)} rejected lines, {len(run.errors)} failed trials")

graph = build_combination_graph(run.triples)
print("combination layer:", graph.stats())

# Nodes the model (or a sloppy annotator) got wrong are dropped here.
valid, report = validate_graph(graph, load_fda_snapshot(FIXTURES / "fda_snapshot.txt"))
print("validated:", report.to_json()["table"])
print("investigational codes kept:", report.investigational)
for term, reason in report.rejected_terms:
    print(f"  rejected {term!r}: {reason}")
