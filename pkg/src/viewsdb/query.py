"""Query idioms built from ISA instructions: chain reads, two-cue search and
the syllogistic two-stage search.

All queries are read-only.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

from .database import is_headnode
from .errors import CorruptStructureError, NotHeadnodeError
from .model import EOC_WORD, ArrayId, Ref, RefKind, decode_ref


class Member(NamedTuple):
    addr: int
    primID1: Ref
    primID2: Ref
    prop1: Ref
    prop2: Ref


@dataclass
class ChainView:
    head: int
    members: list
    # (parent address, side) -> list of Member; filled only when descending.
    subchains: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.members)

    @property
    def links(self):
        return self.members[1:]


class TwoCueHit(NamedTuple):
    link: int
    owner: int


class AttributeHit(NamedTuple):
    link: int
    value: Ref


class SyllogismResult(NamedTuple):
    addr: int
    stage: int
    via: Ref


def _require_headnode(db, h):
    db.require_allocated(h)
    if not is_headnode(db, h):
        raise NotHeadnodeError(f"row {h:#x} is not a headnode")


def _member(db, a):
    f = db.fabric
    if db.scheme.has(ArrayId.S1):
        p1, p2 = Ref(f.aar(a, ArrayId.S1)), Ref(f.aar(a, ArrayId.S2))
    else:
        p1 = p2 = Ref(0)
    return Member(a, Ref(f.aar(a, ArrayId.C1)), Ref(f.aar(a, ArrayId.C2)), p1, p2)


def _follow(db, start):
    f = db.fabric
    out = []
    cur = start
    for _ in range(db.capacity):
        out.append(_member(db, cur))
        word = f.aar(cur, ArrayId.N2)
        if word == EOC_WORD:
            return out
        kind, nxt = decode_ref(word)
        if kind is not RefKind.ADDR or nxt >= db.capacity:
            raise CorruptStructureError(f"row {cur:#x} has invalid next {word:#x}")
        cur = nxt
    raise CorruptStructureError(f"chain from {start:#x} does not terminate")


def read_subchain(db, parent, side):
    """Members of the sub-chain on ``parent``'s prop1 (side 1) or prop2 (side 2)."""
    aid = ArrayId.S1 if side == 1 else ArrayId.S2
    word = db.fabric.aar(parent, aid)
    if not word:
        return []
    return _follow(db, decode_ref(word)[1])


def read_chain(db, h, descend=False):
    """Traverse the chain of headnode ``h`` in next order.

    With ``descend`` every reachable sub-chain is read too and stored in
    ``ChainView.subchains``.
    """
    _require_headnode(db, h)
    view = ChainView(h, _follow(db, h))
    if descend and db.scheme.has(ArrayId.S1):
        stack = list(view.members[1:])
        while stack:
            m = stack.pop(0)
            for side in (1, 2):
                sub = read_subchain(db, m.addr, side)
                if sub:
                    view.subchains[(m.addr, side)] = sub
                    stack.extend(sub)
    return view


def two_cue(db, cue_a, cue_b):
    """Linknodes whose primID pair is {cue_a, cue_b} in either order, with owners.

    Hits are ascending by address; each owner is the HEAD of its hit, so a
    match inside a sub-chain reports the chain's true headnode.
    """
    f = db.fabric
    hits = set(f.car2(ArrayId.C1, cue_a, ArrayId.C2, cue_b))
    hits.update(f.car2(ArrayId.C1, cue_b, ArrayId.C2, cue_a))
    return [TwoCueHit(a, f.head(a)) for a in sorted(hits)]


def attribute_of(db, subject, attribute):
    """Values paired with ``attribute`` in the chain of ``subject``.

    Uses CAR2 on (N1, C1) and (N1, C2) and reads the opposite primID.
    Results are ascending by link address.
    """
    _require_headnode(db, subject)
    return [AttributeHit(a, value) for a, _, value in _pairings(db, subject, attribute)]


def _pairings(db, subject, cue):
    """(link, side, other primID) for every CAR2 hit, C1 pairing first on ties."""
    f = db.fabric
    me = Ref.addr(subject)
    found = []
    for side, (cue_arr, other_arr) in enumerate(((ArrayId.C1, ArrayId.C2), (ArrayId.C2, ArrayId.C1))):
        for a in list(f.car2(ArrayId.N1, me, cue_arr, cue)):
            found.append((a, side, Ref(f.aar(a, other_arr))))
    found.sort(key=lambda t: (t[0], t[1]))
    out, seen = [], set()
    for a, side, value in found:
        if (a, value) not in seen:
            seen.add((a, value))
            out.append((a, side, value))
    return out


def _find_pair(db, subject, attribute, target):
    """First linknode of ``subject`` pairing ``attribute`` with ``target``.

    The C1=attribute pairing is tried before C2=attribute; within each the
    lowest address wins.
    """
    f = db.fabric
    me = Ref.addr(subject)
    target = int(target)
    for cue_arr, other_arr in ((ArrayId.C1, ArrayId.C2), (ArrayId.C2, ArrayId.C1)):
        for a in f.car2(ArrayId.N1, me, cue_arr, attribute):
            if f.aar(a, other_arr) == target:
                return a
    return None


def syllogism_explain(db, subject, attribute, target, via):
    """Two-stage search for the (attribute, target) pairing.

    Stage 1 looks in ``subject``'s own chain.  Stage 2 reads every value
    of ``via`` in that chain (ascending link address) and looks in each
    value's chain.  Returns :class:`SyllogismResult` or ``None``.
    """
    _require_headnode(db, subject)
    hit = _find_pair(db, subject, attribute, target)
    if hit is not None:
        return SyllogismResult(hit, 1, Ref(0))
    for _, _, value in _pairings(db, subject, via):
        kind, v = decode_ref(value)
        if kind is not RefKind.ADDR or v >= db.capacity or not db.is_allocated(v):
            continue
        if not is_headnode(db, v):
            continue
        hit = _find_pair(db, v, attribute, target)
        if hit is not None:
            return SyllogismResult(hit, 2, value)
    return None


def syllogism_search(db, subject, attribute, target, via):
    """Address of the matching linknode, or ``None`` (the NULL result)."""
    res = syllogism_explain(db, subject, attribute, target, via)
    return None if res is None else res.addr
