"""Deterministic synthetic corpora for tests, benchmarks and the demo fixture set."""

from __future__ import annotations

import json
from pathlib import Path
from xml.sax.saxutils import quoteattr

import numpy as np

from .ingest import write_medline
from .kgml import PathwayModule
from .model import AbstractDoc, Pathway

FILLER_SUFFIXES = ("acid", "sodium", "hydrochloride")


def drug_names(n: int, rng: np.random.Generator, multiword: float = 0.2) -> list:
    names = []
    for i in range(n):
        if rng.random() < multiword:
            names.append(f"dx{i} {FILLER_SUFFIXES[i % len(FILLER_SUFFIXES)]}")
        else:
            names.append(f"dx{i}")
    return names


def protein_names(n: int) -> list:
    return [f"prot-{i}" if i % 3 == 0 else f"p{i}" for i in range(n)]


def planted_abstracts(n_docs: int, drugs, proteins, vocab_size: int = 500, tokens: int = 150,
                      plants: int = 8, seed: int = 0, sentence_every: int = 20) -> list:
    """Random filler text with drug and protein names dropped in at random positions."""
    rng = np.random.default_rng(seed)
    vocab = [f"w{i}" for i in range(vocab_size)]
    docs = []
    for k in range(n_docs):
        words = [vocab[i] for i in rng.integers(0, vocab_size, tokens)]
        for _ in range(plants):
            pool = drugs if rng.random() < 0.5 else proteins
            name = pool[int(rng.integers(0, len(pool)))]
            pos = int(rng.integers(0, tokens))
            words[pos] = name
        for pos in range(sentence_every, tokens, sentence_every):
            words[pos] = words[pos] + "."
        docs.append(AbstractDoc(str(100000 + k), f"synthetic abstract {k}", " ".join(words) + "."))
    return docs


def random_module(proteins, n_pathways: int, per_pathway: int = 3, seed: int = 0) -> PathwayModule:
    rng = np.random.default_rng(seed)
    pathways = []
    for i in range(n_pathways):
        k = min(per_pathway, len(proteins))
        picks = rng.choice(len(proteins), size=k, replace=False)
        pathways.append(Pathway(f"hsa:{1000 + i}", tuple(proteins[j] for j in sorted(picks))))
    return PathwayModule("synthetic", tuple(pathways))


def kgml_document(entries, title: str = "synthetic") -> bytes:
    """Build a KGML document from ``(entry_id, type, name_attr, graphics_label)`` tuples."""
    lines = ['<?xml version="1.0"?>', f'<pathway name="path:hsa05224" org="hsa" title={quoteattr(title)}>']
    for entry_id, etype, name, label in entries:
        lines.append(f'  <entry id="{entry_id}" name={quoteattr(name)} type="{etype}">')
        lines.append(f'    <graphics name={quoteattr(label)} type="rectangle" x="0" y="0"/>')
        lines.append("  </entry>")
    lines.append("</pathway>")
    return ("\n".join(lines) + "\n").encode("utf-8")


# -- demo fixture corpus -------------------------------------------------------------------

FIXTURE_PATHWAYS = (
    ("hsa:2099", "ESR1, ER, ESR, NR3A1"),
    ("hsa:2064", "ERBB2, CD340, HER-2, HER2, NEU..."),
    ("hsa:1956", "EGFR, ERBB, ERBB1, HER1"),
    ("hsa:5290", "PIK3CA, PI3K, p110-alpha"),
    ("hsa:7157", "TP53, P53, LFS1"),
    ("hsa:1019", "CDK4, CMM3, PSK-J3"),
    ("hsa:5241", "PGR, NR3C3, PR"),
    ("hsa:2475", "MTOR, FRAP, FRAP1"),
    ("hsa:672", "BRCA1, BRCC1, RNF53"),
    ("hsa:1499", "CTNNB1, beta-catenin"),
)

FIXTURE_DRUGS = (
    "tamoxifen", "letrozole", "anastrozole", "exemestane", "fulvestrant", "trastuzumab", "pertuzumab",
    "lapatinib", "neratinib", "gefitinib", "erlotinib", "alpelisib", "everolimus", "palbociclib",
    "ribociclib", "abemaciclib", "olaparib", "talazoparib", "docetaxel", "paclitaxel", "capecitabine",
    "gemcitabine", "carboplatin", "cisplatin", "doxorubicin", "cyclophosphamide", "bevacizumab",
    "all-trans retinoic acid", "azd6738", "bms-791325",
)
FIXTURE_SYNONYMS = (("nolvadex", "tamoxifen"), ("herceptin", "trastuzumab"), ("atra", "all-trans retinoic acid"))
FIXTURE_NOISE = ("hiv infection", "chemotherapy treatment", "psychotherapy")


def _sentence(rng, drugs, proteins) -> str:
    d = drugs[int(rng.integers(len(drugs)))]
    p = proteins[int(rng.integers(len(proteins)))]
    gap = " ".join(rng.choice(["the", "in", "patients", "with", "tumors", "expression", "cells", "was",
                               "observed", "levels", "treated", "significantly"], int(rng.integers(0, 25))))
    verb = rng.choice(["inhibits", "targets", "modulates", "reduces", "binds"])
    if rng.random() < 0.5:
        return f"{d.capitalize()} {verb} {gap} {p}."
    return f"{p} signaling {gap} was altered by {d}."


def write_fixture_corpus(out_dir, n_trials: int = 24, n_abstracts: int = 120, seed: int = 7) -> Path:
    """Write the small end-to-end fixture set used by ``pathrepo run``."""
    rng = np.random.default_rng(seed)
    out = Path(out_dir)
    (out / "trials").mkdir(parents=True, exist_ok=True)
    drugs = list(FIXTURE_DRUGS)
    keywords = ["in combination with", "plus", "combined with", "+", "co-administered with"]
    responses = {}
    for i in range(n_trials):
        nct = f"NCT{10000000 + i:08d}"
        k = int(rng.integers(2, 5))
        picks = [drugs[j] for j in rng.choice(len(drugs), k, replace=False)]
        if i % 5 == 0:
            picks.append(FIXTURE_NOISE[i % len(FIXTURE_NOISE)])
        kw = keywords[i % len(keywords)]
        text = (f"This phase II study evaluates {picks[0]} {kw} {picks[1]} in women with advanced breast cancer. "
                f"Patients previously treated with {' and '.join(picks[2:]) or 'endocrine therapy'} are eligible.")
        doc = {"protocolSection": {"identificationModule": {"nctId": nct},
                                   "descriptionModule": {"detailedDescription": text}}}
        (out / "trials" / f"{nct}.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        # canned model output: one clean line, sometimes a chatty preamble or a k-drug line
        lines = [f"{nct} | {picks[0]} | {picks[1]}"]
        if i % 4 == 0:
            lines.insert(0, "Here are the combinations found:")
        if i % 5 == 0:
            lines.append(" | ".join([nct, *picks]))
        responses[nct] = "\n".join(lines)
    (out / "responses.json").write_text(json.dumps(responses, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    # the last two pathways are left (nearly) unmentioned so coverage reports have gaps
    proteins = [label.split(", ")[0] for _, label in FIXTURE_PATHWAYS[:-2]]
    proteins += ["HER2", "PI3K", "p53", "ER"]
    abstracts = []
    for k in range(n_abstracts):
        sentences = [_sentence(rng, drugs, proteins) for _ in range(int(rng.integers(2, 5)))]
        abstracts.append(AbstractDoc(str(30000000 + k), f"Fixture abstract {k}", " ".join(sentences)))
    abstracts.append(AbstractDoc(str(30000000 + n_abstracts), "Rare target", "Olaparib suppressed beta-catenin signaling."))
    abstracts.append(AbstractDoc("39999999", "Record without abstract", ""))
    text = write_medline(abstracts[:-1])
    text += "\nPMID- 39999999\nTI  - Record without abstract\n"
    (out / "medline.txt").write_text(text, encoding="utf-8")

    entries = [(str(10 + i), "gene", f"{pid} {pid}0", label) for i, (pid, label) in enumerate(FIXTURE_PATHWAYS)]
    entries.append(("90", "compound", "cpd:C00001", "C00001"))
    (out / "breast_cancer.kgml").write_bytes(kgml_document(entries, "Breast cancer"))

    lexicon = [d for d in drugs] + [f"{s}\t{c}" for s, c in FIXTURE_SYNONYMS]
    (out / "drugs.txt").write_text("\n".join(lexicon) + "\n", encoding="utf-8")
    approved = [d for d in drugs if d not in ("azd6738", "bms-791325", "all-trans retinoic acid")]
    approved += ["tretinoin", "chemotherapy treatment"]
    (out / "fda_snapshot.txt").write_text("\n".join(sorted(approved)) + "\n", encoding="utf-8")
    return out
