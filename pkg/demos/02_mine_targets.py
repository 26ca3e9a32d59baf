"""
Drug-target edges from abstract proximity
=========================================

Dictionary lookup of drugs and pathway proteins over MEDLINE abstracts, then
a window sweep showing how the drug-target layer grows with the distance
threshold.
"""

from pathlib import Path

import numpy as np

from pathrepo.ingest import parse_medline
from pathrepo.kgml import read_kgml, unique_target_count
from pathrepo.lexicon import load_drug_lexicon, protein_lexicon
from pathrepo.miner import window_sweep
from pathrepo.reports import summary_stats, sweep_from_graph

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

abstracts = parse_medline((FIXTURES / "medline.txt").read_text())
print(f"{len(abstracts)} abstracts ({abstracts.skipped} records had no abstract)")

module = read_kgml(FIXTURES / "breast_cancer.kgml")
print(f"{len(module)} pathways, {unique_target_count(module)} distinct protein names")

drugs = load_drug_lexicon(FIXTURES / "drugs.txt")
proteins = protein_lexicon(module)

windows = (10, 20, 30, 40, 50)
graphs = window_sweep(abstracts, drugs, proteins, windows)
for w in windows:
    g = graphs[w]
    print(f"window {w:>2}: {len(g):>4} edges, {len(g.pairs):>3} drug-protein pairs")

# Counts per pathway and window, as a numpy table.
sweep = sweep_from_graph(graphs[50], module, windows)
print("drugs per pathway (rows) and window (columns):")
for pid, row in zip(sweep.pathway_ids, sweep.drugs):
    print(f"  {pid:<9} {row}")

stats = summary_stats(sweep)
means = np.array([stats[w]["drugs"].mean for w in windows])
print("mean drugs over covered pathways:", np.round(means, 2))
