import itertools
import random

from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_candidates, brute_evidence
from pathrepo.combos import build_combination_graph
from pathrepo.evidence import (
    PairStatus,
    build_evidence_graph,
    candidate_pairs,
    combo_layer_coverage,
    multi_covered,
    pathway_coverage,
    read_evidence_tsv,
    write_evidence_tsv,
)
from pathrepo.kgml import PathwayModule
from pathrepo.miner import DrugTargetGraph
from pathrepo.model import EvidenceRecord, Pathway, ProximityEdge

MODULE = PathwayModule("breast cancer", (Pathway("hsa:2064", ("erbb2", "her2")), Pathway("hsa:2099", ("esr1",))))


def dt(*rows):
    return DrugTargetGraph.from_edges(ProximityEdge(d, p, pmid, 1) for d, p, pmid in rows)


def test_then_branch():
    ev = build_evidence_graph(dt(("tamoxifen", "esr1", "1")), build_combination_graph([("NCT1", "tamoxifen", "x")]), MODULE)
    assert ev.records == (EvidenceRecord("hsa:2099", "tamoxifen", "esr1", "NCT1", frozenset({"1"})),)


def test_else_branch():
    ev = build_evidence_graph(dt(("tamoxifen", "esr1", "1")), build_combination_graph([]), MODULE)
    assert ev.records[0].trial_id is None


def test_target_outside_pathways():
    ev = build_evidence_graph(dt(("tamoxifen", "brca9", "1")), build_combination_graph([]), MODULE)
    assert ev.records == ()


def test_coverage_counts_distinct_drugs():
    ev = build_evidence_graph(dt(("a", "erbb2", "1"), ("b", "her2", "2"), ("c", "erbb2", "3"), ("a", "her2", "4")),
                              build_combination_graph([("N1", "a", "b")]), MODULE)
    assert pathway_coverage(ev) == {"hsa:2064": 3}
    assert "hsa:2099" not in pathway_coverage(ev)
    assert combo_layer_coverage(ev) == {"hsa:2064": 2}
    assert multi_covered({"P1": 3, "P2": 1}) == {"P1": 3}


def test_candidate_statuses():
    combos = build_combination_graph([("N1", "a", "b")])
    ev = build_evidence_graph(dt(("a", "erbb2", "1"), ("b", "her2", "2"), ("c", "erbb2", "3")), combos, MODULE)
    pairs = {(p.drug_a, p.drug_b): p for p in candidate_pairs(ev, combos)}
    assert len(pairs) == 3
    assert pairs[("a", "b")].status is PairStatus.TRIAL_SUPPORTED and pairs[("a", "b")].trial_ids == ("N1",)
    assert pairs[("a", "c")].status is PairStatus.HYPOTHESIS
    assert pairs[("a", "c")].pmids == {"1", "3"}


def test_evidence_tsv_round_trip(tmp_path):
    ev = build_evidence_graph(dt(("a", "erbb2", "1"), ("a", "erbb2", "7"), ("b", "esr1", "2")),
                              build_combination_graph([("N1", "a", "c"), ("N2", "a", "d")]), MODULE)
    write_evidence_tsv(tmp_path / "e.tsv", ev)
    assert read_evidence_tsv(tmp_path / "e.tsv", MODULE.pathway_ids).records == ev.records
    assert (tmp_path / "e.tsv").read_text().splitlines()[-1] == "b\tesr1\thsa:2099\t-\t2"


def random_fixture(rng, n_dt=100, n_combo=50, n_pathways=10):
    drugs = [f"d{i}" for i in range(30)]
    proteins = [f"p{i}" for i in range(25)]
    dt_rows = {(rng.choice(drugs), rng.choice(proteins), str(rng.randint(1, 60))) for _ in range(n_dt)}
    combos = [(f"NCT{rng.randint(1, 20)}", rng.choice(drugs), rng.choice(drugs)) for _ in range(n_combo)]
    pathways = {f"hsa:{i}": set(rng.sample(proteins, rng.randint(1, 4))) for i in range(n_pathways)}
    return dt_rows, combos, pathways


def run_both(dt_rows, combos, pathways):
    module = PathwayModule("x", tuple(Pathway(pid, tuple(sorted(names))) for pid, names in pathways.items()))
    combo_graph = build_combination_graph(combos)
    ev = build_evidence_graph(dt(*dt_rows), combo_graph, module)
    got = {(r.pathway_id, r.drug, r.target, r.trial_id, r.pmids) for r in ev.records}
    dt_pairs = {}
    for d, p, pmid in dt_rows:
        dt_pairs.setdefault((d, p), set()).add(pmid)
    expected = brute_evidence(dt_pairs, pathways, combos)
    return ev, combo_graph, got, expected


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_join_matches_oracle(seed):
    dt_rows, combos, pathways = random_fixture(random.Random(seed), n_dt=40, n_combo=15, n_pathways=5)
    ev, combo_graph, got, expected = run_both(dt_rows, combos, pathways)
    assert got == expected
    cands = {(p.drug_a, p.drug_b, p.pathway_id): p.status.value for p in candidate_pairs(ev, combo_graph)}
    assert cands == brute_candidates(expected, combos)
    # multi-coverage <=> at least one candidate pair for that pathway
    covered = multi_covered(pathway_coverage(ev))
    assert set(covered) == {pid for _, _, pid in cands}
    for pid, n in covered.items():
        assert sum(1 for k in cands if k[2] == pid) == len(list(itertools.combinations(range(n), 2)))
