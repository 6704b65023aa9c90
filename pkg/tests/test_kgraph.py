import itertools

import numpy as np
import pytest

from cnp import kgraph as kg
from cnp import samples
from cnp import scalars as sc
from cnp.kgraph import Edge

import oracles as O

CORPUS = {g.name: g for g in kg.load_corpus()}
DEGREES = [n for n in itertools.product(range(3), repeat=2)]


def cycle_1graph():
    return kg.KGraph(1, ["v"], [Edge("e", 1, "v", "v")])


def line_1graph(n):
    vs = [f"x{i}" for i in range(n + 1)]
    return kg.KGraph(1, vs, [Edge(f"a{i}", 1, vs[i], vs[i + 1]) for i in range(n)])


def toeplitz_family(g, bound):
    """Left shifts on l^2 of paths of degree <= bound, dropping what leaves the window."""
    paths = [p for n in itertools.product(*(range(b + 1) for b in bound)) for p in g.paths_of_degree(n)]
    idx = {p: i for i, p in enumerate(paths)}
    N = len(paths)
    verts = {v: sc.zeros(N) for v in g.vertices}
    edges = {e: sc.zeros(N) for e in g.edges}
    for tau in paths:
        verts[tau.range][idx[tau], idx[tau]] = 1
        for e in g.edges:
            if g.edges[e].source == tau.range:
                lam = g.compose(g.path((e,)), tau)
                if lam in idx:
                    edges[e][idx[lam], idx[tau]] = 1
    return kg.CKFamily(g, N, verts, edges), paths


def test_paths_of_degree_examples():
    g = CORPUS["square_loop"]
    assert [str(p) for p in g.paths_of_degree((0, 0))] == ["v"]
    assert len(g.paths_of_degree((1, 1))) == 1
    (lam,) = g.paths_of_degree((1, 1))
    assert lam == g.path(("a", "b")) == g.path(("b", "a"))


def test_path_counts_match_composition():
    for g in CORPUS.values():
        for m, n in itertools.product(DEGREES, repeat=2):
            mn = tuple(a + b for a, b in zip(m, n))
            pairs = sum(1 for mu in g.paths_of_degree(m) for nu in g.paths_of_degree(n)
                        if mu.source == nu.range)
            assert len(g.paths_of_degree(mn)) == pairs


def test_paths_of_degree_against_square_classes():
    for g in CORPUS.values():
        for n in DEGREES:
            classes = {O.square_class(g, w) for w in O.edge_sequences(g, n)} if sum(n) else set()
            got = g.paths_of_degree(n)
            assert len(set(got)) == len(got)
            if sum(n):
                assert {O.square_class(g, p.edges) for p in got} == classes


def test_unique_factorization():
    for g in CORPUS.values():
        for n in DEGREES:
            for lam in g.paths_of_degree(n):
                for m in itertools.product(*(range(b + 1) for b in n)):
                    rest = tuple(b - a for a, b in zip(m, n))
                    hits = [(mu, nu) for mu in g.paths_of_degree(m) for nu in g.paths_of_degree(rest)
                            if mu.source == nu.range and g.compose(mu, nu) == lam]
                    assert len(hits) == 1
                    assert hits[0] == g.factor(lam, m)


def test_mce_examples():
    g = CORPUS["square_loop"]
    a, b = g.parse_path("a"), g.parse_path("b")
    assert g.mce(a, a) == [a]
    assert [str(x) for x in g.mce(a, b)] == [str(g.path(("a", "b")))]
    h = CORPUS["cycle_times_loop"]
    assert h.mce(h.vertex("pz"), h.vertex("qz")) == []
    n = CORPUS["no_common_extension"]
    assert n.mce(n.parse_path("e"), n.parse_path("f")) == []


def test_mce_set_extensions_are_unique():
    for g in CORPUS.values():
        short = [p for n in [(1, 0), (0, 1), (1, 1)] for p in g.paths_of_degree(n)]
        for G in itertools.combinations(short, 2):
            lams = g.mce_set(G)
            for tau in g.paths_of_degree((2, 2)):
                assert sum(1 for lam in lams if g.extends(tau, lam)) <= 1


def test_paths_le_definition_scan():
    for g in CORPUS.values():
        for n in DEGREES:
            want = []
            for m in itertools.product(*(range(b + 1) for b in n)):
                for lam in g.paths_of_degree(m):
                    grows = any(g.paths_of_degree(p) and any(
                        nu.range == lam.source for nu in g.paths_of_degree(p))
                        for p in itertools.product(*(range(b - a + 1) for a, b in zip(m, n))) if sum(p))
                    if not grows:
                        want.append(lam)
            assert set(g.paths_le(n)) == set(want)


def test_paths_le_examples():
    g = CORPUS["cycle_times_loop"]  # no sources
    assert set(g.paths_le((1, 0))) == set(g.paths_of_degree((1, 0)))
    t = CORPUS["two_sources"]
    assert t.vertex("w") in t.paths_le((1, 0))


def test_exhaustive_examples():
    for g in CORPUS.values():
        for v in g.vertices:
            assert g.is_exhaustive(v, [g.vertex(v)])
    n = CORPUS["no_common_extension"]
    assert not n.is_exhaustive("v", [n.parse_path("e")])
    assert n.is_exhaustive("v", [n.parse_path("e"), n.parse_path("f")])
    c = CORPUS["cycle_times_loop"]
    for v in c.vertices:
        assert c.is_exhaustive(v, c.paths_from(v, (1, 0)))


def test_exhaustive_bound_agrees_with_larger_scan():
    for g in CORPUS.values():
        for v in g.vertices:
            cands = g.paths_upto(v, (1, 1))
            for size in (1, 2):
                for F in itertools.combinations(cands, size):
                    big = tuple(b + 2 for b in g.default_exhaustive_bound(F))
                    assert g.is_exhaustive(v, F) == g.is_exhaustive(v, F, bound=big)


def test_exhaustive_requires_range():
    n = CORPUS["no_common_extension"]
    with pytest.raises(kg.KGraphError):
        n.is_exhaustive("u", [n.parse_path("e")])


def test_ck_one_graph_cycle():
    g = cycle_1graph()
    rng = samples.rng_of(0)
    U = samples.unitary(rng, 3)
    fam = kg.CKFamily(g, 3, {"v": sc.eye(3)}, {"e": U})
    rep = kg.check_ck_family(fam, "CK", path_bound=(3,), degree_bound=(2,))
    assert rep.passed and rep.nondegenerate and rep.exhaustive_sets > 0


def test_ck_zero_family_is_degenerate():
    g = CORPUS["square_loop"]
    fam = kg.CKFamily(g, 2, {}, {})
    rep = kg.check_ck_family(fam, "TCK")
    assert rep.passed and not rep.nondegenerate


def test_toeplitz_family_fails_ck4_at_the_boundary():
    g = CORPUS["two_sources"]
    fam, paths = toeplitz_family(g, (1, 1))
    assert kg.check_ck_family(fam, "TCK").passed
    rep = kg.check_ck_family(fam, "CK")
    assert rep.violations["CK4"] and all(v["vertex"] == "u" for v in rep.violations["CK4"])
    # the defect is the projection onto delta_u, the one path with nowhere to go
    F = [g.parse_path("e"), g.parse_path("f")]
    prod = sc.eye(fam.dim)
    for mu in F:
        s = fam.s(mu)
        prod = prod @ (fam.vertex_maps["u"] - s @ sc.adjoint(s))
    support = [paths[i] for i in range(fam.dim) if prod[i, i] != 0]
    assert support == [g.vertex("u")] and sc.is_zero(prod - np.diag(np.diag(prod)))


def test_ck_dimension_mismatch():
    with pytest.raises(kg.KGraphError):
        kg.CKFamily(cycle_1graph(), 2, {"v": sc.eye(3)}, {})


def test_ck_corrupted_square_is_reported():
    g = CORPUS["square_loop"]
    fam = kg.CKFamily(g, 2, {"v": sc.eye(2)},
                      {"a": np.array([[0, 1], [1, 0]], dtype=object), "b": np.array([[1, 0], [0, -1]], dtype=object)})
    rep = kg.check_ck_family(fam, "TCK")
    assert rep.violations["CK2"]


def test_ck_defect_symbolic_examples():
    n = CORPUS["no_common_extension"]
    d = kg.ck_defect_symbolic(n, "v", [n.vertex("v")], (2, 2))
    assert d.is_zero()
    d = kg.ck_defect_symbolic(n, "v", [n.parse_path("e")], (1, 1))
    assert [str(t) for t in d.support()] == ["f"]
    for g in CORPUS.values():
        for v in g.vertices:
            for F in g.minimal_exhaustive_sets(v):
                for s in [(1, 1), (2, 1), (2, 2)]:
                    d = kg.ck_defect_symbolic(g, v, F, s)
                    assert d.inclusion_exclusion == d.product_form
                    assert d.is_zero()


def test_inclusion_exclusion_equals_product_for_any_set():
    for g in CORPUS.values():
        for v in g.vertices:
            cands = g.paths_upto(v, (1, 1))
            for F in itertools.combinations(cands, 2):
                d = kg.ck_defect_symbolic(g, v, F, (2, 2))
                assert d.inclusion_exclusion == d.product_form


def test_json_roundtrip_and_product():
    for g in CORPUS.values():
        h = kg.KGraph.from_json(g.to_json())
        assert h.to_json() == g.to_json()
    P = kg.KGraph.product(cycle_1graph(), line_1graph(2))
    assert P.k == 2 and len(P.vertices) == 3
    for m, n in itertools.product(DEGREES, repeat=2):
        mn = tuple(a + b for a, b in zip(m, n))
        pairs = sum(1 for mu in P.paths_of_degree(m) for nu in P.paths_of_degree(n) if mu.source == nu.range)
        assert len(P.paths_of_degree(mn)) == pairs


def test_bad_square_rejected():
    obj = CORPUS["square_loop"].to_json()
    obj["squares"] = []
    with pytest.raises(kg.KGraphError):
        kg.KGraph.from_json(obj)
