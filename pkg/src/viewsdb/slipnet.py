"""Copycat-style slipnet on top of a CNSM database.

Slipnodes are headnodes; sliplinks are linknodes with C1 = relation label
and C2 = destination concept.  Scalar universals live in the M arrays as
fixed-point fields:

Headnode M1 word
    bits 0-31   activation, Q16.16, saturating at 32767
    bits 32-48  conceptual depth, Q1.16 (0x10000 == 1.0)
    bit 63      activation lock

Linknode M1 (edge side) / M2 (destination side) word
    bits 0-16   conductance, Q1.16
    bit 63      slip lock

All other bits are reserved and must be zero.
"""

import math
import random
from dataclasses import dataclass, field
from typing import NamedTuple

from . import builder
from .database import ViewsDB, is_headnode
from .errors import CapacityError, EncodingError, SchemeError
from .model import ArrayId, Ref, RefKind, Scheme, decode_ref

FRAC_BITS = 16
ONE = 1 << FRAC_BITS
ACTIV_MAX = 32767
ACTIV_MAX_RAW = ACTIV_MAX << FRAC_BITS
LOCK_BIT = 1 << 63
_ACTIV_MASK = (1 << 32) - 1
_UNIT_MASK = (1 << 17) - 1
_DEPTH_SHIFT = 32
_HEAD_USED = LOCK_BIT | (_UNIT_MASK << _DEPTH_SHIFT) | _ACTIV_MASK
_LINK_USED = LOCK_BIT | _UNIT_MASK

DEFAULT_THRESHOLD = 80.0


def to_fixed(x):
    """Nearest Q.16 raw value for ``x``."""
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x * ONE):
        raise EncodingError(f"not a finite scalar: {x!r}")
    return round(x * ONE)


def from_fixed(raw):
    return raw / ONE


def format_fixed(raw):
    """Shortest decimal string that maps back to ``raw`` under :func:`to_fixed`."""
    if raw % ONE == 0:
        return str(raw // ONE)
    for digits in range(1, 20):
        text = f"{raw / ONE:.{digits}f}".rstrip("0")
        if to_fixed(float(text)) == raw:
            return text
    return repr(raw / ONE)


def _unit(x, name):
    raw = to_fixed(x)
    if not 0 <= raw <= ONE:
        raise EncodingError(f"{name} {x!r} outside [0, 1]")
    return raw


@dataclass(frozen=True)
class HeadUniversals:
    conceptual_depth: float = 0.0
    activ: float = 0.0
    activ_lock: bool = False

    def pack(self):
        depth = _unit(self.conceptual_depth, "conceptual depth")
        activ = to_fixed(self.activ)
        if not 0 <= activ <= ACTIV_MAX_RAW:
            raise EncodingError(f"activ {self.activ!r} outside [0, {ACTIV_MAX}]")
        return (LOCK_BIT if self.activ_lock else 0) | depth << _DEPTH_SHIFT | activ

    @classmethod
    def unpack(cls, word):
        if word & ~_HEAD_USED:
            raise EncodingError(f"reserved bits set in headnode universals {word:#x}")
        depth = (word >> _DEPTH_SHIFT) & _UNIT_MASK
        activ = word & _ACTIV_MASK
        if depth > ONE or activ > ACTIV_MAX_RAW:
            raise EncodingError(f"headnode universals {word:#x} out of range")
        return cls(from_fixed(depth), from_fixed(activ), bool(word & LOCK_BIT))


@dataclass(frozen=True)
class LinkUniversals:
    conductance: float = 0.0
    slip_lock: bool = False

    def pack(self):
        return (LOCK_BIT if self.slip_lock else 0) | _unit(self.conductance, "conductance")

    @classmethod
    def unpack(cls, word):
        if word & ~_LINK_USED or (word & _UNIT_MASK) > ONE:
            raise EncodingError(f"invalid link universals {word:#x}")
        return cls(from_fixed(word & _UNIT_MASK), bool(word & LOCK_BIT))


def pack_universals(u):
    return u.pack()


def _activ_raw(word):
    return word & _ACTIV_MASK


def _depth_raw(word):
    return (word >> _DEPTH_SHIFT) & _UNIT_MASK


def _cond_raw(word):
    return word & _UNIT_MASK


@dataclass
class SlipnetState:
    threshold: float = DEFAULT_THRESHOLD
    slipping_from: dict = field(default_factory=dict)


class PendingUpdate(NamedTuple):
    target: int
    link: int
    contribution: int
    activ_raw: int

    @property
    def activ(self):
        return from_fixed(self.activ_raw)


def _require_cnsm(db):
    if db.scheme is not Scheme.CNSM:
        raise SchemeError(f"slipnet universals need M arrays; scheme is {db.scheme.value}")


def _edge_headnode(db, a):
    kind, p = decode_ref(db.fabric.read(a, ArrayId.C1))
    if kind is not RefKind.ADDR or p >= db.capacity or not db.is_allocated(p):
        return None
    return p if is_headnode(db, p) else None


def _pending(db, m1, a):
    """Update of ``a``'s edge headnode computed against the M1 snapshot ``m1``."""
    target = _edge_headnode(db, a)
    if target is None:
        return None
    tw = m1[target]
    if tw & LOCK_BIT:
        return None
    source = db.fabric.head(a)
    contribution = (_activ_raw(m1[source]) * _cond_raw(m1[a])) >> FRAC_BITS
    decayed = (_activ_raw(tw) * _depth_raw(tw)) >> FRAC_BITS
    return PendingUpdate(target, a, contribution, min(decayed + contribution, ACTIV_MAX_RAW))


def propagate_step(db, state, a):
    """Pending update for linknode ``a``'s edge headnode, or ``None`` if skipped.

    new activ = activ * conceptual depth + head activ * conductance, in
    truncating fixed point, saturating at 32767.  Nothing is written.
    """
    _require_cnsm(db)
    db.require_allocated(a)
    m1 = db.fabric.column(ArrayId.M1)
    return _pending(db, _Snapshot(m1), a)


class _Snapshot:
    """Python-int view of an M1 column."""

    def __init__(self, column):
        self._words = [int(w) for w in column]

    def __getitem__(self, a):
        return self._words[a]


def _linknodes(db):
    return [a for a in db.allocated_rows() if not is_headnode(db, a)]


def propagate_all(db, state, order=None):
    """One synchronous propagation sweep; returns the number of headnodes changed.

    Every linknode is evaluated against a frozen snapshot; contributions to
    the same headnode are summed and its decay is applied once.  ``order``
    optionally fixes the linknode evaluation order.
    """
    _require_cnsm(db)
    f = db.fabric
    with f.lock:
        snap = _Snapshot(f.column(ArrayId.M1))
        links = _linknodes(db) if order is None else list(order)
        totals = {}
        for a in links:
            p = _pending(db, snap, a)
            if p is not None:
                totals[p.target] = totals.get(p.target, 0) + p.contribution
        changed = 0
        for target in sorted(totals):
            old = snap[target]
            decayed = (_activ_raw(old) * _depth_raw(old)) >> FRAC_BITS
            new_activ = min(decayed + totals[target], ACTIV_MAX_RAW)
            word = (old & ~_ACTIV_MASK) | new_activ
            if word != old:
                f.prog(target, ArrayId.M1, word)
                changed += 1
        return changed


def slippage_scan(db, state):
    """Record slippage candidates; returns ``{source headnode: [new candidates]}``.

    A linknode qualifies when its edge headnode's activation exceeds
    ``state.threshold`` and its destination-side slip lock is clear.
    """
    _require_cnsm(db)
    f = db.fabric
    added = {}
    for a in _linknodes(db):
        edge = _edge_headnode(db, a)
        if edge is None:
            continue
        if not from_fixed(_activ_raw(f.read(edge, ArrayId.M1))) > state.threshold:
            continue
        if f.read(a, ArrayId.M2) & LOCK_BIT:
            continue
        kind, dest = decode_ref(f.read(a, ArrayId.C2))
        if kind is not RefKind.ADDR:
            continue
        dest = f.head(dest)
        source = f.head(a)
        current = state.slipping_from.setdefault(source, [])
        if dest not in current:
            current.append(dest)
            added.setdefault(source, []).append(dest)
    return added


def activation(db, h):
    return from_fixed(_activ_raw(db.fabric.read(h, ArrayId.M1)))


def head_universals(db, h):
    return HeadUniversals.unpack(db.fabric.read(h, ArrayId.M1))


def link_universals(db, a):
    f = db.fabric
    return LinkUniversals.unpack(f.read(a, ArrayId.M1)), LinkUniversals.unpack(f.read(a, ArrayId.M2))


def set_head_universals(db, h, u):
    _require_cnsm(db)
    builder.rewire(db, h, "misc1", u.pack())


def set_link_universals(db, a, edge_side=None, dest_side=None):
    _require_cnsm(db)
    if edge_side is not None:
        builder.rewire(db, a, "misc1", edge_side.pack())
    if dest_side is not None:
        builder.rewire(db, a, "misc2", dest_side.pack())


def activation_trace(db, step, names=None):
    """``step=<n> head=<name> activ=<decimal>`` for every headnode, ascending."""
    names = {**db.names, **(names or {})}
    return [f"step={step} head={names.get(h, f'@{h}')} "
            f"activ={format_fixed(_activ_raw(db.fabric.read(h, ArrayId.M1)))}"
            for h in db.headnodes()]


@dataclass
class Slipnode:
    name: str
    conceptual_depth: float = 0.0
    activ: float = 0.0
    activ_lock: bool = False


@dataclass
class Sliplink:
    source: str
    dest: str
    label: str = None
    cond1: float = 0.0
    cond2: float = 0.0
    slip1: bool = False
    slip2: bool = False


@dataclass
class SlipnetSpec:
    nodes: list = field(default_factory=list)
    links: list = field(default_factory=list)
    threshold: float = DEFAULT_THRESHOLD

    def required_rows(self):
        names = {n.name for n in self.nodes}
        extra = {l.label for l in self.links if l.label is not None and l.label not in names}
        anonymous = sum(1 for l in self.links if l.label is None)
        return len(self.nodes) + len(extra) + anonymous + len(self.links)


def build_slipnet(spec, superclusters=8, rows_per_supercluster=64):
    """Build a CNSM database from ``spec``; returns ``(db, state)``.

    Unlabelled sliplinks each get a fresh label headnode with an empty
    chain.  Raises :class:`CapacityError` (with the exact shortfall) when
    the net does not fit the geometry.
    """
    db = ViewsDB(Scheme.CNSM, superclusters, rows_per_supercluster)
    need = spec.required_rows()
    if need > db.capacity:
        raise CapacityError(f"slipnet needs {need} rows, geometry holds {db.capacity}",
                            required=need, available=db.capacity)
    addr = {}

    def headnode(name, universals=None):
        h = builder.create_headnode(db)
        addr[name] = h
        db.names[h] = name
        if universals is not None:
            set_head_universals(db, h, universals)
        return h

    for n in spec.nodes:
        headnode(n.name, HeadUniversals(n.conceptual_depth, n.activ, n.activ_lock))
    taken = {n.name for n in spec.nodes} | {l.label for l in spec.links if l.label}
    for l in spec.links:
        if l.label is not None and l.label not in addr:
            headnode(l.label)
    anon = 0
    for l in spec.links:
        if l.label is None:
            while f"_anon{anon}" in taken:
                anon += 1
            label = headnode(f"_anon{anon}")
            anon += 1
        else:
            label = addr[l.label]
        a = builder.add_link(db, addr[l.source], Ref.addr(label), Ref.addr(addr[l.dest]))
        set_link_universals(db, a, LinkUniversals(l.cond1, l.slip1), LinkUniversals(l.cond2, l.slip2))
    return db, SlipnetState(spec.threshold)


def random_slipnet_spec(rng=None, n_nodes=77, n_links=195, n_categories=11,
                        unlabelled_fraction=0.25, threshold=DEFAULT_THRESHOLD):
    """Random net with ``n_nodes`` slipnodes split across ``n_categories``.

    Relation labels are drawn from the slipnodes themselves, as in Copycat,
    or left unlabelled.
    """
    rng = rng if isinstance(rng, random.Random) else random.Random(rng)
    nodes = [Slipnode(f"c{i % n_categories}_{i // n_categories}",
                      conceptual_depth=rng.randint(0, ONE) / ONE,
                      activ=rng.randint(0, 100 * ONE) / ONE,
                      activ_lock=rng.random() < 0.1)
             for i in range(n_nodes)]
    links = []
    for _ in range(n_links):
        src, dst = rng.choice(nodes).name, rng.choice(nodes).name
        label = None if rng.random() < unlabelled_fraction else rng.choice(nodes).name
        links.append(Sliplink(src, dst, label,
                              cond1=rng.randint(0, ONE) / ONE, cond2=rng.randint(0, ONE) / ONE,
                              slip1=rng.random() < 0.2, slip2=rng.random() < 0.2))
    return SlipnetSpec(nodes, links, threshold)
