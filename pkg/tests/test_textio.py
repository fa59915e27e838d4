import random

import pytest

from viewsdb import ViewsDB, builder, query, textio
from viewsdb.drlg import isomorphic, random_drlg
from viewsdb.errors import CorruptStructureError, ParseError, ViewsError
from viewsdb.model import ArrayId, Ref, Scheme
from viewsdb.slipnet import HeadUniversals, LinkUniversals

from conftest import fixture_text, named

FIXTURES = ["felidae.views", "tom_hanks.views", "three_node_slipnet.views"]


def test_empty_document():
    db = textio.loads("")
    assert len(db) == 0
    assert textio.serialize(db) == ""
    assert textio.loads("\n  # only a comment\n\n").free_count() == 512


def test_sentence_four_statements():
    db = textio.loads('head this\nlink this: temper, naughty\nlink this: colour, black\n'
                      'link this: species, cat\nhead temper\nhead naughty\nhead colour\n'
                      'head black\nhead species\nhead cat\n')
    assert builder.chain_length(db, named(db)["this"]) == 4


def test_forward_references_and_literals():
    db = textio.loads('link a: b, greeting  # b and greeting are defined below\n'
                      'head a\nhead b\nlit greeting = "hi\\n"\nlink a: _, "hi\\n"\n')
    n = named(db)
    links = query.read_chain(db, n["a"]).links
    assert links[0].primID2 == links[1].primID2 == Ref.literal(0)
    assert links[1].primID1 == Ref(0)
    assert db.literals.text(Ref.literal(0)) == "hi\n"


def test_heads_take_lowest_addresses():
    db = textio.loads("link z: _, _\nhead y\nhead z\n")
    assert named(db) == {"y": 0, "z": 1}


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_byte_fixpoint(name):
    text = fixture_text(name)
    assert textio.serialize(textio.loads(text)) == text


def test_felidae_keeps_bare_family_headnode(felidae):
    n = named(felidae)
    assert builder.chain_length(felidae, n["family"]) == 1
    assert "head family\n" in textio.serialize(felidae)


def test_tom_hanks_sub_block(tom_hanks):
    n = named(tom_hanks)
    act_in = query.read_chain(tom_hanks, n["TomHanks"]).links[0]
    sub = query.read_subchain(tom_hanks, act_in.addr, 1)
    assert [(m.primID1, m.primID2) for m in sub] == [
        (Ref.addr(n["as"]), Ref.addr(n["SullySullenberger"]))]


def test_univ_and_link_attrs(three_node):
    n = named(three_node)
    assert three_node.fabric.read(n["Last"], ArrayId.M1) == HeadUniversals(0.8, 30, True).pack()
    link = query.read_chain(three_node, n["First"]).links[0].addr
    assert LinkUniversals.unpack(three_node.fabric.read(link, ArrayId.M1)) == LinkUniversals(0.5, True)
    assert three_node.fabric.read(link, ArrayId.M2) == 0


@pytest.mark.parametrize("text, line, col", [
    ("head", 1, 5),
    ("head a\nhead a\n", 2, 1),
    ("head a\nlink a: b, _\n", 2, 9),
    ("head a\nlink a _, _\n", 2, 8),
    ("head a\nunivx a [depth=1]\n", 2, 1),
    ("head a\nuniv a [cond1=0.5]\n", 2, 9),
    ("head a\nlink a: _, _ [depth=0.5]\n", 2, 15),
    ("head a\nuniv a [alock=2]\n", 2, 9),
    ("head a\nuniv a [depth=2]\n", 2, 1),
    ("head a\nlink a: _, _ {\n  prop3: _, _\n}\n", 3, 3),
    ("lit s = \"x\"\nlink s: _, _\n", 2, 1),
    ('lit s = "\\q"\n', 1, 9),
    ("head a\nlink a: _, _ {\n", 3, 1),
    ("head a\n$\n", 2, 1),
    ("head a\nuniv a [depth=0.5]\nuniv a [activ=1]\n", 3, 1),
])
def test_positioned_errors(text, line, col):
    with pytest.raises(ParseError) as info:
        textio.loads(text)
    assert (info.value.line, info.value.column) == (line, col)
    assert str(info.value).startswith(f"{line}:{col}: ")


def test_capacity_exceeded_is_positioned():
    text = "".join(f"head h{i}\n" for i in range(5))
    with pytest.raises(ParseError) as info:
        textio.loads(text, superclusters=1, rows_per_supercluster=4)
    assert info.value.line == 5


def test_invalid_utf8():
    with pytest.raises(ParseError) as info:
        textio.loads(b"head a\nhead \xff\n")
    assert (info.value.line, info.value.column) == (2, 6)


def test_normalised_subs_rejected():
    with pytest.raises(ParseError):
        textio.loads("head a\nlink a: _, _ {\n  prop1: _, _\n}\n", scheme=Scheme.NORMALISED)


def test_serialize_rejects_corrupt_db(felidae):
    felidae.fabric.prog(0, ArrayId.N2, Ref.addr(0))
    with pytest.raises(CorruptStructureError):
        textio.serialize(felidae)


def test_serialize_names_unnamed_heads():
    db = ViewsDB()
    h = builder.create_headnode(db)
    builder.add_link(db, h, Ref.addr(h), db.literal('quote " and \\'))
    text = textio.serialize(db)
    assert text == 'head h0\nlink h0: h0, "quote \\" and \\\\"\n'
    assert textio.serialize(textio.loads(text)) == text


def test_random_graphs_survive_text_round_trip():
    rng = random.Random(17)
    for _ in range(40):
        g = random_drlg(rng, max_vertices=12, max_degree=4)
        db = ViewsDB()
        builder.import_drlg(db, g)
        text = textio.serialize(db)
        again = textio.loads(text)
        assert isomorphic(builder.export_drlg(db), builder.export_drlg(again))
        assert textio.serialize(again) == text


def test_file_round_trip(tmp_path, tom_hanks):
    path = tmp_path / "db.views"
    textio.dump(tom_hanks, path)
    assert textio.serialize(textio.load(path)) == textio.serialize(tom_hanks)


def _total(data):
    try:
        textio.loads(data)
    except ParseError as exc:
        assert exc.line >= 1 and exc.column >= 1
    except ViewsError as exc:  # pragma: no cover - would be a totality bug
        raise AssertionError(f"unpositioned error {exc!r}") from exc


def test_parser_totality_random_bytes():
    rng = random.Random(2024)
    alphabet = b'headlinkunivprop12_:,=[]{}"#\\\n \t.0123456789-abc\xc3\xa9\xff'
    for i in range(100_000):
        n = rng.randint(0, 40)
        if i % 2:
            data = bytes(rng.getrandbits(8) for _ in range(n))
        else:
            data = bytes(rng.choice(alphabet) for _ in range(n))
        _total(data)


def test_parser_totality_mutated_fixtures():
    rng = random.Random(5)
    seeds = [fixture_text(name).encode() for name in FIXTURES]
    for _ in range(3000):
        data = bytearray(rng.choice(seeds))
        for _ in range(rng.randint(1, 4)):
            op = rng.random()
            pos = rng.randrange(len(data) + 1)
            if op < 0.4 and data:
                del data[min(pos, len(data) - 1)]
            elif op < 0.8:
                data.insert(pos, rng.choice(b'{}[]:,_"=\n x9.'))
            else:
                data[pos:pos] = rng.choice(seeds)[:rng.randint(0, 30)]
        _total(bytes(data))


def test_deep_nesting_is_a_diagnostic():
    text = "head a\nlink a: _, _ {\n" + "prop1: _, _ {\n" * 5000 + "}\n" * 5001
    with pytest.raises(ParseError):
        textio.loads(text)
