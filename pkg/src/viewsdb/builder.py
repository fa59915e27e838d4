"""Construction and rewiring of Views databases.

All mutations go through the fabric's PROG instruction.  New linknodes are
appended at the chain tail, so chain order equals insertion order.
Subordinate-chain members carry ``head = Addr(emitting linknode)``; HEAD
therefore ascends through the emitting linknode to the true headnode.
"""

from .database import check_invariants, is_headnode
from .drlg import DRLG, Literal, required_rows
from .errors import (CapacityError, CorruptStructureError, NotHeadnodeError,
                     SchemeError, TargetError)
from .model import EOC, NULL, ArrayId, Field, Ref, RefKind, as_word, decode_ref


def _check_primid(db, ref, what):
    if not isinstance(ref, Ref):
        raise TypeError(f"{what} must be a Ref, got {type(ref).__name__}")
    kind, p = decode_ref(ref)
    if kind is RefKind.NULL:
        return
    if kind is RefKind.LITERAL:
        if p >= len(db.literals):
            raise TargetError(f"{what} names literal {p}, table has {len(db.literals)}")
        return
    if kind is RefKind.ADDR and p < db.capacity and db.is_allocated(p) and is_headnode(db, p):
        return
    raise TargetError(f"{what} {ref!r} is not NULL, a literal or a headnode")


def _require_headnode(db, h):
    db.require_allocated(h)
    if not is_headnode(db, h):
        raise NotHeadnodeError(f"row {h:#x} is not a headnode")


def create_headnode(db):
    """Allocate a row that heads itself, with NULL primIDs and next = EOC."""
    with db.fabric.lock:
        a = db.allocate()
        db.fabric.prog(a, ArrayId.N1, Ref.addr(a))
        db.fabric.prog(a, ArrayId.N2, EOC)
        return a


def add_link(db, h, edge, dest):
    """Append a linknode (edge, dest) to the chain headed by ``h``."""
    f = db.fabric
    with f.lock:
        _require_headnode(db, h)
        _check_primid(db, edge, "edge")
        _check_primid(db, dest, "dest")
        last = f.tail(h)
        a = db.allocate()
        f.prog(a, ArrayId.N1, Ref.addr(h))
        f.prog(a, ArrayId.N2, EOC)
        f.prog(a, ArrayId.C1, edge)
        f.prog(a, ArrayId.C2, dest)
        f.prog(last, ArrayId.N2, Ref.addr(a))
        return a


def _walk_next(db, start):
    """Rows from ``start`` following N2 until EOC."""
    f = db.fabric
    out = []
    cur = start
    for _ in range(db.capacity):
        out.append(cur)
        word = f.read(cur, ArrayId.N2)
        if word == EOC.raw:
            return out
        kind, nxt = decode_ref(word)
        if kind is not RefKind.ADDR or nxt >= db.capacity:
            raise CorruptStructureError(f"row {cur:#x} has invalid next {word:#x}")
        cur = nxt
    raise CorruptStructureError(f"chain from {start:#x} does not terminate")


def _side_array(side):
    if side in (1, "1", Field.PROP1):
        return ArrayId.S1
    if side in (2, "2", Field.PROP2):
        return ArrayId.S2
    raise ValueError(f"side must be 1 or 2, got {side!r}")


def add_subordinate(db, parent, side, edge, dest):
    """Hang a linknode (edge, dest) off ``parent``'s prop1 (side 1) or prop2 (side 2).

    The first row on a side becomes the sub-chain root; later rows append
    at the sub-chain tail.  Headnodes cannot emit sub-chains here: their
    members would share the headnode's N1 value with the main chain.
    """
    if not db.scheme.has(ArrayId.S1):
        raise SchemeError(f"subordinate chains need S arrays; scheme is {db.scheme.value}")
    aid = _side_array(side)
    f = db.fabric
    with f.lock:
        db.require_allocated(parent)
        if is_headnode(db, parent):
            raise TargetError(f"row {parent:#x} is a headnode; sub-chains hang off linknodes")
        _check_primid(db, edge, "edge")
        _check_primid(db, dest, "dest")
        root = f.read(parent, aid)
        last = _walk_next(db, decode_ref(root)[1])[-1] if root else None
        a = db.allocate()
        f.prog(a, ArrayId.N1, Ref.addr(parent))
        f.prog(a, ArrayId.N2, EOC)
        f.prog(a, ArrayId.C1, edge)
        f.prog(a, ArrayId.C2, dest)
        if last is None:
            f.prog(parent, aid, Ref.addr(a))
        else:
            f.prog(last, ArrayId.N2, Ref.addr(a))
        return a


def rewire(db, a, field, value):
    """Overwrite one field of row ``a`` after checking the field's target rules.

    primIDs take NULL, a literal or a headnode; next takes EOC or an
    allocated row; props take NULL or an allocated row; head takes an
    allocated row; misc fields take any word.
    """
    field = Field(field)
    if not db.scheme.has(field.array):
        raise SchemeError(f"field {field.value} has no array under {db.scheme.value}")
    f = db.fabric
    with f.lock:
        db.require_allocated(a)
        if field in (Field.MISC1, Field.MISC2):
            word = as_word(value)
        else:
            if not isinstance(value, Ref):
                raise TypeError(f"{field.value} takes a Ref")
            word = value.raw
            kind, p = decode_ref(word)
            is_row = kind is RefKind.ADDR and p < db.capacity and db.is_allocated(p)
            if field in (Field.PRIMID1, Field.PRIMID2):
                _check_primid(db, value, field.value)
            elif field is Field.NEXT and not (is_row or kind is RefKind.EOC):
                raise TargetError(f"next must be EOC or an allocated row, got {value!r}")
            elif field in (Field.PROP1, Field.PROP2) and not (is_row or kind is RefKind.NULL):
                raise TargetError(f"{field.value} must be NULL or an allocated row, got {value!r}")
            elif field is Field.HEAD and not is_row:
                raise TargetError(f"head must be an allocated row, got {value!r}")
        if f.read(a, field.array) != word:
            f.prog(a, field.array, word)


def _subtree(db, root):
    """All rows of the sub-chain starting at ``root`` and everything nested below."""
    out = []
    stack = [root]
    while stack:
        for r in _walk_next(db, stack.pop()):
            out.append(r)
            for aid in (ArrayId.S1, ArrayId.S2):
                word = db.fabric.read(r, aid)
                if word:
                    stack.append(decode_ref(word)[1])
    return out


def unlink(db, a):
    """Detach linknode ``a`` from its chain and free it with its sub-chains.

    The predecessor (found with CAR on N2, S1 and S2) is rewired to skip
    ``a``; the freed rows are zeroed so associative searches no longer see
    them.
    """
    f = db.fabric
    with f.lock:
        db.require_allocated(a)
        if is_headnode(db, a):
            raise TargetError(f"row {a:#x} is a headnode; only linknodes can be unlinked")
        cue = Ref.addr(a)
        nxt = Ref(f.read(a, ArrayId.N2))
        preds = [(p, Field.NEXT) for p in f.car(ArrayId.N2, cue)]
        if db.scheme.has(ArrayId.S1):
            preds += [(p, Field.PROP1) for p in f.car(ArrayId.S1, cue)]
            preds += [(p, Field.PROP2) for p in f.car(ArrayId.S2, cue)]
        for p, field in preds:
            if field is Field.NEXT:
                rewire(db, p, field, nxt)
            else:
                rewire(db, p, field, NULL if nxt.is_eoc else nxt)
        doomed = [a]
        if db.scheme.has(ArrayId.S1):
            for aid in (ArrayId.S1, ArrayId.S2):
                word = f.read(a, aid)
                if word:
                    doomed += _subtree(db, decode_ref(word)[1])
        for r in doomed:
            db.release(r)


def chain_length(db, h):
    """Rows from headnode ``h`` to EOC inclusive: out-degree + 1."""
    _require_headnode(db, h)
    return len(_walk_next(db, h))


def _ref_for(db, mapping, item):
    if item is None:
        return NULL
    if isinstance(item, Literal):
        return db.literal(item.text)
    return Ref.addr(mapping[item])


def import_drlg(db, g):
    """Store ``g`` in ``db``: one headnode per vertex, one linknode per edge.

    Recursive attachments become subordinate chains.  Returns the vertex ->
    address mapping and records vertex names in ``db.names``.
    """
    need = required_rows(g)
    free = db.free_count()
    if need > free:
        raise CapacityError(f"graph needs {need} rows, {free} free", required=need, available=free)
    if not db.scheme.has(ArrayId.S1) and need > len(g.vertices) + len(g.edges):
        raise SchemeError("attachments need subordinate chains; scheme is Normalised")
    mapping = {}
    with db.fabric.lock:
        for v in g.vertices:
            mapping[v] = create_headnode(db)
            db.names[mapping[v]] = str(v)

        def attach(parent, side, items):
            for att in items:
                r = add_subordinate(db, parent, side,
                                    _ref_for(db, mapping, att.label),
                                    _ref_for(db, mapping, att.value))
                attach(r, 1, att.edge_props)
                attach(r, 2, att.dest_props)

        for e in g.edges:
            a = add_link(db, mapping[e.source], _ref_for(db, mapping, e.label),
                         _ref_for(db, mapping, e.dest))
            attach(a, 1, e.edge_props)
            attach(a, 2, e.dest_props)
    return mapping


def export_drlg(db, names=None):
    """Read ``db`` back as a :class:`DRLG`.

    Vertex names come from ``names``, then ``db.names``, then ``@<addr>``.
    Literal targets export as :class:`Literal` leaves.
    """
    problems = check_invariants(db)
    if problems:
        raise CorruptStructureError("; ".join(str(v) for v in problems))
    names = {**db.names, **(names or {})}
    f = db.fabric
    heads = db.headnodes()
    label = {h: names.get(h, f"@{h}") for h in heads}

    def item(word):
        kind, p = decode_ref(word)
        if kind is RefKind.NULL:
            return None
        if kind is RefKind.LITERAL:
            return Literal(db.literals.text(Ref(word)))
        return label[p]

    def props(row, aid):
        if not db.scheme.has(aid):
            return []
        word = f.read(row, aid)
        if not word:
            return []
        out = []
        for r in _walk_next(db, decode_ref(word)[1]):
            out.append((item(f.read(r, ArrayId.C1)), item(f.read(r, ArrayId.C2)),
                        props(r, ArrayId.S1), props(r, ArrayId.S2)))
        return out

    g = DRLG()
    for h in heads:
        g.add_vertex(label[h])
    for h in heads:
        for r in _walk_next(db, h)[1:]:
            g.add_edge(label[h], item(f.read(r, ArrayId.C1)), item(f.read(r, ArrayId.C2)),
                       edge_props=props(r, ArrayId.S1), dest_props=props(r, ArrayId.S2))
    return g
