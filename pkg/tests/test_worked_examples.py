"""Small worked examples: the example databases and the edge cases around them."""

import random

import pytest

from viewsdb import ViewsDB, builder, check_invariants, query, slipnet, textio
from viewsdb.drlg import DRLG, Literal
from viewsdb.errors import CapacityError
from viewsdb.fabric import MemoryFabric
from viewsdb.model import EOC, NULL, ArrayId, Field, Ref, Scheme
from viewsdb.slipnet import (ACTIV_MAX, HeadUniversals, LinkUniversals, SlipnetSpec, SlipnetState,
                             Sliplink, Slipnode, build_slipnet)

from conftest import named

SENTENCE = ("head this\nhead temper\nhead naughty\nhead colour\nhead black\nhead species\n"
            "head cat\nlink this: temper, naughty\nlink this: colour, black\n"
            "link this: species, cat\n")


@pytest.fixture
def sentence():
    return textio.loads(SENTENCE)


def first_links(db, name):
    return [m.addr for m in query.read_chain(db, named(db)[name]).links]


# core records and the checker

def test_tom_hanks_linknode_is_not_a_headnode(tom_hanks):
    link = first_links(tom_hanks, "TomHanks")[0]
    assert not tom_hanks.linknode(link).is_headnode
    assert tom_hanks.linknode(named(tom_hanks)["TomHanks"]).is_headnode


def test_sentence_db_is_clean(sentence):
    assert check_invariants(sentence) == []


def test_two_cycle_reported_once(sentence):
    a, b, _ = first_links(sentence, "this")
    sentence.fabric.prog(b, ArrayId.N2, Ref.addr(a))
    cycles = [v for v in check_invariants(sentence) if v.kind == "cycle"]
    assert len(cycles) == 1
    assert cycles[0].rows == (a, b)


# ISA on the example databases

def test_fill_every_n1_cell():
    f = MemoryFabric()
    for a in range(512):
        f.prog(a, ArrayId.N1, Ref.addr(a))
    assert [int(w) for w in f.column(ArrayId.N1)] == [a + 1 for a in range(512)]
    assert all(list(f.car(ArrayId.N1, Ref.addr(a))) == [a] for a in range(0, 512, 37))


def test_fresh_cells_are_zero():
    f = MemoryFabric(Scheme.NORMALISED, 2, 3)
    assert {f.aar(a, aid) for a in range(6) for aid in Scheme.NORMALISED.arrays} == {0}


def test_tom_hanks_aar_car_car2(tom_hanks):
    n = named(tom_hanks)
    f = tom_hanks.fabric
    act_in, won = first_links(tom_hanks, "TomHanks")
    assert f.aar(act_in, ArrayId.C2) == Ref.addr(n["ThisFilm"]).raw
    assert list(f.car(ArrayId.N1, Ref.addr(n["TomHanks"]))) == [n["TomHanks"], act_in, won]
    assert list(f.car(ArrayId.C1, Ref.literal(99))) == []
    assert list(f.car2(ArrayId.C1, Ref.addr(n["won"]), ArrayId.C2, Ref.addr(n["2_Oscars"]))) == [won]
    assert list(f.car2(ArrayId.C1, Ref.literal(99), ArrayId.C2, Ref.addr(n["2_Oscars"]))) == []


def test_car2_is_intersection_of_cars():
    rng = random.Random(31)
    for _ in range(100):
        f = MemoryFabric(Scheme.CNSM, 1, 64)
        for _ in range(120):
            f.prog(rng.randrange(64), rng.choice(Scheme.CNSM.arrays), rng.randint(0, 3))
        a1, a2 = rng.sample(Scheme.CNSM.arrays, 2)
        x, y = rng.randint(0, 3), rng.randint(0, 3)
        want = sorted(set(f.car(a1, x)) & set(f.car(a2, y)))
        assert list(f.car2(a1, x, a2, y).matches) == want


def test_carnext_constructed_cursor():
    f = MemoryFabric(Scheme.CNSM, 1, 64)
    for a in (40, 3, 17):
        f.prog(a, ArrayId.M2, 0xBEEF)
    cur = f.car(ArrayId.M2, 0xBEEF)
    assert [f.carnext(cur) for _ in range(4)] == [3, 17, 40, None]
    empty = f.car(ArrayId.M2, 1)
    assert f.carnext(empty) is None


def test_head_examples(tom_hanks):
    n = named(tom_hanks)
    f = tom_hanks.fabric
    act_in = first_links(tom_hanks, "TomHanks")[0]
    sub = query.read_subchain(tom_hanks, act_in, 1)[0].addr
    assert f.head(n["TomHanks"]) == n["TomHanks"]
    assert f.head(act_in) == n["TomHanks"]
    assert f.read(sub, ArrayId.N1) == Ref.addr(act_in).raw  # one hop through the emitter
    assert f.head(sub) == n["TomHanks"]


def test_tail_examples(sentence):
    n = named(sentence)
    assert sentence.fabric.tail(n["cat"]) == n["cat"]
    species_cat = first_links(sentence, "this")[-1]
    assert sentence.fabric.tail(n["this"]) == species_cat


def test_tail_random_chains():
    rng = random.Random(6)
    db = ViewsDB(Scheme.CNSM, 2, 64)
    heads = [builder.create_headnode(db) for _ in range(8)]
    log = {h: [h] for h in heads}
    for _ in range(80):
        h = rng.choice(heads)
        log[h].append(builder.add_link(db, h, NULL, NULL))
    for h in heads:
        assert db.fabric.tail(h) == log[h][-1]
        assert [m.addr for m in query.read_chain(db, h).members] == log[h]


# builder

def test_first_headnode_and_capacity():
    db = ViewsDB()
    h = builder.create_headnode(db)
    assert h == 0 and builder.chain_length(db, h) == 1
    assert list(db.fabric.car(ArrayId.N1, Ref.addr(h))) == [h]
    for _ in range(511):
        builder.create_headnode(db)
    with pytest.raises(CapacityError):
        builder.create_headnode(db)


def test_degenerate_link_allowed(db):
    h = builder.create_headnode(db)
    a = builder.add_link(db, h, NULL, NULL)
    assert check_invariants(db) == []
    assert db.linknode(a).primID1 == NULL


def test_tom_hanks_subordinate_row(tom_hanks):
    act_in = first_links(tom_hanks, "TomHanks")[0]
    sub = query.read_subchain(tom_hanks, act_in, 1)
    assert tom_hanks.fabric.aar(act_in, ArrayId.S1) == Ref.addr(sub[0].addr).raw


def test_soup_subchain_of_length_three(db):
    names = ["soup", "contains", "chicken", "part", "breast", "shape", "cubes", "marinated", "soy"]
    h = {k: builder.create_headnode(db) for k in names}
    r = lambda k: Ref.addr(h[k])
    link = builder.add_link(db, h["soup"], r("contains"), r("chicken"))
    rows = [builder.add_subordinate(db, link, 2, r(e), r(d))
            for e, d in (("part", "breast"), ("shape", "cubes"), ("marinated", "soy"))]
    assert [m.addr for m in query.read_subchain(db, link, 2)] == rows


def test_rewire_protagonist(tom_hanks):
    n = named(tom_hanks)
    prot = first_links(tom_hanks, "ThisFilm")[2]
    persona = builder.create_headnode(tom_hanks)
    builder.rewire(tom_hanks, prot, Field.PRIMID2, Ref.addr(persona))
    assert query.read_chain(tom_hanks, n["ThisFilm"]).links[2].primID2 == Ref.addr(persona)
    assert check_invariants(tom_hanks) == []


def test_rewire_next_to_eoc_orphans_rest(sentence):
    a, b, c = first_links(sentence, "this")
    builder.rewire(sentence, a, Field.NEXT, EOC)
    orphans = {v.rows[0] for v in check_invariants(sentence) if v.kind == "orphan"}
    assert orphans == {b, c}


def test_single_labelled_edge():
    g = DRLG()
    g.add_edge("x", "r", "y")
    db = ViewsDB()
    builder.import_drlg(db, g)
    assert len(db.headnodes()) == 3 and len(db) == 4


def test_empty_graph_and_db():
    db = ViewsDB()
    builder.import_drlg(db, DRLG())
    assert len(db) == 0
    assert builder.export_drlg(db) == DRLG()


def test_export_sentence(sentence):
    g = builder.export_drlg(sentence)
    assert [(e.source, e.label, e.dest) for e in g.edges] == [
        ("this", "temper", "naughty"), ("this", "colour", "black"), ("this", "species", "cat")]


def test_double_round_trip_fixpoint():
    from viewsdb.drlg import random_drlg
    rng = random.Random(13)
    for _ in range(30):
        g = random_drlg(rng, max_vertices=15, max_degree=5)
        once = ViewsDB()
        builder.import_drlg(once, g)
        e1 = builder.export_drlg(once)
        twice = ViewsDB()
        builder.import_drlg(twice, e1)
        assert builder.export_drlg(twice) == e1


# queries

def test_tom_hanks_chain_members(tom_hanks):
    n = named(tom_hanks)
    view = query.read_chain(tom_hanks, n["TomHanks"])
    assert [m.addr for m in view.members][0] == n["TomHanks"] and len(view) == 3
    assert len(query.read_chain(tom_hanks, n["won"])) == 1


def test_protagonist_cue(tom_hanks):
    n = named(tom_hanks)
    hits = query.two_cue(tom_hanks, Ref.addr(n["SullySullenberger"]), Ref.addr(n["protagonist"]))
    assert [h.owner for h in hits] == [n["ThisFilm"]]
    assert query.two_cue(tom_hanks, Ref.addr(n["pilot"]), Ref.addr(n["won"])) == []


def test_attribute_examples(sentence):
    n = named(sentence)
    species_cat = first_links(sentence, "this")[-1]
    hits = query.attribute_of(sentence, n["this"], Ref.addr(n["species"]))
    assert hits == [query.AttributeHit(species_cat, Ref.addr(n["cat"]))]
    assert query.attribute_of(sentence, n["this"], Ref.addr(n["cat"])) != []
    assert query.attribute_of(sentence, n["cat"], Ref.addr(n["species"])) == []


def test_attribute_matches_chain_scan_oracle():
    rng = random.Random(41)
    for _ in range(20):
        db = ViewsDB(Scheme.CNSM, 1, 64)
        heads = [builder.create_headnode(db) for _ in range(5)]
        for _ in range(40):
            pick = lambda: rng.choice([NULL] + [Ref.addr(h) for h in heads])
            builder.add_link(db, rng.choice(heads), pick(), pick())
        for h in heads:
            for cue in [Ref.addr(k) for k in heads]:
                want = []
                for m in query.read_chain(db, h).links:
                    if m.primID1 == cue:
                        want.append((m.addr, m.primID2))
                    elif m.primID2 == cue:
                        want.append((m.addr, m.primID1))
                assert [tuple(x) for x in query.attribute_of(db, h, cue)] == want


def test_syllogism_examples(felidae):
    n = named(felidae)
    r = lambda k: Ref.addr(n[k])
    family_felidae = first_links(felidae, "cat")[1]
    assert query.syllogism_search(felidae, n["this"], r("family"), r("Felidae"), r("species")) == family_felidae
    black = query.syllogism_explain(felidae, n["this"], r("colour"), r("black"), r("species"))
    assert black.stage == 1
    absent = builder.create_headnode(felidae)
    assert query.syllogism_search(felidae, n["this"], r("family"), Ref.addr(absent), r("species")) is None
    assert list(felidae.fabric.car(ArrayId.C2, Ref.addr(absent))) == []


# slipnet

def test_zero_universals_pack_to_zero():
    assert HeadUniversals().pack() == 0
    assert LinkUniversals().pack() == 0


def test_three_node_threshold_comparison(three_node):
    n = named(three_node)
    assert slipnet.activation(three_node, n["Opposite"]) == 100 > 80


def test_locked_and_fixed_point_updates():
    spec = SlipnetSpec([Slipnode("a", 1.0, 40), Slipnode("b", 1.0, 25)],
                       [Sliplink("a", "a", "b", cond1=0.0)])
    db, state = build_slipnet(spec)
    link = first_links(db, "a")[0]
    p = slipnet.propagate_step(db, state, link)
    assert p.activ == 25
    before = db.image()
    assert slipnet.propagate_all(db, state) == 0
    assert db.image() == before


def test_single_link_update_applied():
    spec = SlipnetSpec([Slipnode("h", 0.5, 60), Slipnode("e", 0.9, 70), Slipnode("d")],
                       [Sliplink("h", "d", "e", cond1=0.5)])
    db, state = build_slipnet(spec)
    assert slipnet.propagate_all(db, state) == 1
    assert abs(slipnet.activation(db, named(db)["e"]) - 93) <= 2**-10


def test_three_node_propagation_keeps_opposite_above_threshold(three_node):
    n = named(three_node)
    slipnet.propagate_all(three_node, SlipnetState())
    assert slipnet.activation(three_node, n["Opposite"]) >= 80
    assert slipnet.activation(three_node, n["Last"]) == 30


def test_max_threshold_never_slips():
    spec = slipnet.random_slipnet_spec(3)
    for x in spec.nodes:
        x.activ = ACTIV_MAX
    db, _ = build_slipnet(spec)
    assert slipnet.slippage_scan(db, SlipnetState(threshold=ACTIV_MAX)) == {}


def test_slippage_matches_condition_oracle():
    for seed in range(10):
        spec = slipnet.random_slipnet_spec(seed, n_nodes=25, n_links=60, n_categories=5)
        db, _ = build_slipnet(spec)
        state = SlipnetState(threshold=50)
        got = slipnet.slippage_scan(db, state)
        f = db.fabric
        want = {}
        for a in db.allocated_rows():
            node = db.linknode(a)
            if node.is_headnode:
                continue
            edge = node.primID1.payload
            if slipnet.activation(db, edge) > 50 and not node.misc2 >> 63:
                src, dst = f.head(a), node.primID2.payload
                if dst not in want.get(src, []):
                    want.setdefault(src, []).append(dst)
        assert got == want


def test_three_node_build_as_drawn(three_node):
    n = named(three_node)
    link = first_links(three_node, "First")[0]
    node = three_node.linknode(link)
    assert (node.primID1, node.primID2) == (Ref.addr(n["Opposite"]), Ref.addr(n["Last"]))
    edge_side, dest_side = slipnet.link_universals(three_node, link)
    assert edge_side.slip_lock and not dest_side.slip_lock


def test_empty_slipnet():
    db, state = build_slipnet(SlipnetSpec())
    assert len(db) == 0 and state.slipping_from == {}
