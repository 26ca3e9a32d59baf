import random

from hypothesis import given
from hypothesis import strategies as st

from pathrepo.combos import CombinationGraph, build_combination_graph, drugs_in_layer, relation_label
from pathrepo.model import CombinationTriple


def test_parallel_edges():
    g = build_combination_graph([("N1", "a", "b"), ("N2", "a", "b")])
    assert g.nodes == {"a", "b"}
    assert len(g.edges) == 2
    assert g.trials_for_pair("b", "a") == ("N1", "N2")
    assert g.stats()["distinct_pairs"] == 1


def test_duplicate_triple_collapses():
    g = build_combination_graph([("N1", "a", "b"), ("N1", "b", "a")])
    assert len(g.edges) == 1


def test_empty():
    g = build_combination_graph([])
    assert g == CombinationGraph.empty()
    assert drugs_in_layer(g) == frozenset()


def test_self_pair_dropped(caplog):
    g = build_combination_graph([("N1", "a", "b"), ("N1", "c", "c")])
    assert g.nodes == {"a", "b"}
    assert "self-paired" in caplog.text


def test_drugs_in_layer():
    assert drugs_in_layer(build_combination_graph([("N1", "a", "b")])) == {"a", "b"}


def test_relation_preference():
    g = build_combination_graph([("N1", "a", "b", "co-occurrence"), ("N1", "a", "b", "plus"), ("N1", "a", "b", "+")])
    (edge,) = g.edges
    assert edge.relation == "+"
    assert relation_label("plus") == "combination therapy"
    assert relation_label("co-occurrence") == "co-occurrence"
    assert g.stats()["combination_therapy_edges"] == 1


def test_2680_node_fixture():
    rng = random.Random(11)
    names = [f"drug{i:04d}" for i in range(2680)]
    triples = [(f"NCT{i:08d}", names[i], names[(i + 1) % 2680]) for i in range(2680)]
    triples += [(f"NCT9{i:07d}", rng.choice(names), rng.choice(names)) for i in range(1500)]
    g = build_combination_graph(triples)
    assert len(drugs_in_layer(g)) == 2680


def test_subgraph_and_round_trip(tmp_path):
    g = build_combination_graph([("N1", "a", "b"), ("N2", "b", "c"), ("N3", "a", "c", "plus")])
    sub = g.subgraph({"a", "c", "zzz"})
    assert sub.nodes == {"a", "c"} and [e.nct_id for e in sub.edges] == ["N3"]
    g.write_tsv(tmp_path / "g.tsv")
    assert CombinationGraph.read_tsv(tmp_path / "g.tsv") == g


triple_lists = st.lists(
    st.tuples(st.sampled_from(["N1", "N2", "N3"]), st.sampled_from("abcde"), st.sampled_from("abcde"),
              st.sampled_from(["co-occurrence", "plus", "+"])),
    max_size=30,
)


@given(triple_lists, st.randoms())
def test_permutation_invariance(rows, rnd):
    shuffled = rows[:]
    rnd.shuffle(shuffled)
    g = build_combination_graph(rows)
    assert build_combination_graph(shuffled) == g
    # node set is the union of per-trial drug sets
    assert g.nodes == {d for _, a, b, _ in rows if a != b for d in (a, b)}
    assert all(isinstance(e, CombinationTriple) for e in g.edges)
