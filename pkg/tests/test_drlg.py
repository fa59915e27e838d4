import random

from hypothesis import given, settings, strategies as st

from viewsdb import ViewsDB, builder
from viewsdb.drlg import DRLG, Literal, isomorphic, random_drlg, required_rows


def test_add_edge_registers_vertices():
    g = DRLG()
    g.add_edge("a", "knows", Literal("x"), edge_props=[("since", "y")])
    assert g.vertices == ["a", "knows", "since", "y"]
    assert g.out_degree("a") == 1
    assert g.attachment_count() == 1
    assert required_rows(g) == 4 + 1 + 1


def test_isomorphism_ignores_names():
    g1, g2 = DRLG(), DRLG()
    g1.add_edge("a", "r", "b")
    g2.add_edge("x", "q", "y")
    assert isomorphic(g1, g2)


def test_isomorphism_sees_edge_order():
    g1, g2 = DRLG(), DRLG()
    for g, order in ((g1, ("b", "c")), (g2, ("c", "b"))):
        g.add_vertex("a")
        g.add_vertex("r")
        g.add_vertex("b")
        g.add_edge("b", "r", "b")  # makes b distinguishable from c
        for d in order:
            g.add_edge("a", "r", d)
    assert not isomorphic(g1, g2)


def test_isomorphism_sees_literal_text_and_side():
    g1, g2, g3 = DRLG(), DRLG(), DRLG()
    g1.add_edge("a", "r", Literal("x"))
    g2.add_edge("a", "r", Literal("y"))
    g3.add_edge("a", Literal("x"), "r")
    assert not isomorphic(g1, g2)
    assert not isomorphic(g1, g3)


def test_isomorphism_sees_attachment_side():
    g1, g2 = DRLG(), DRLG()
    g1.add_edge("a", "r", "b", edge_props=[("p", "q")])
    g2.add_edge("a", "r", "b", dest_props=[("p", "q")])
    assert not isomorphic(g1, g2)


def test_random_drlg_respects_bounds():
    rng = random.Random(1)
    for _ in range(50):
        g = random_drlg(rng, max_vertices=30, max_degree=8, max_nesting=4)
        assert len(g.vertices) <= 30
        assert all(g.out_degree(v) <= 8 for v in g.vertices)
        assert required_rows(g) <= 512

        def depth(atts):
            return max((1 + max(depth(a.edge_props), depth(a.dest_props)) for a in atts), default=0)
        assert all(depth(e.edge_props) <= 4 and depth(e.dest_props) <= 4 for e in g.edges)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_round_trip_is_isomorphic(seed):
    g = random_drlg(seed, max_vertices=10, max_degree=4)
    db = ViewsDB()
    builder.import_drlg(db, g)
    assert isomorphic(g, builder.export_drlg(db))
