"""The Views database: a fabric plus literal table and row allocation."""

from dataclasses import dataclass

import numpy as np

from .errors import AddressError, CapacityError, NotAllocatedError
from .fabric import DEFAULT_ROWS, DEFAULT_SUPERCLUSTERS, MemoryFabric
from .model import (EOC_WORD, NULL, ArrayId, LiteralTable, Linknode, Ref, RefKind, Scheme,
                    decode_ref)


class ViewsDB:
    """Rows are allocated lowest-free-first from a free map kept outside the arrays.

    ``names`` is an optional text-layer symbol table (address -> name); it is
    never stored in the arrays or in binary images.
    """

    def __init__(self, scheme=Scheme.CNSM, superclusters=DEFAULT_SUPERCLUSTERS,
                 rows_per_supercluster=DEFAULT_ROWS, *, fabric=None, literals=None):
        if fabric is None:
            fabric = MemoryFabric(scheme, superclusters, rows_per_supercluster)
        self.fabric = fabric
        self.literals = literals if literals is not None else LiteralTable()
        self.names = {}
        # A row is in use iff its head cell holds a pointer.
        self._allocated = self.fabric.column(ArrayId.N1) != 0

    @classmethod
    def from_fabric(cls, fabric, literals=None):
        return cls(fabric=fabric, literals=literals)

    @property
    def scheme(self):
        return self.fabric.scheme

    @property
    def capacity(self):
        return self.fabric.capacity

    def __len__(self):
        return int(self._allocated.sum())

    def free_count(self):
        return self.capacity - len(self)

    def is_allocated(self, a):
        if not 0 <= a < self.capacity:
            raise AddressError(f"address {a:#x} outside capacity {self.capacity}")
        return bool(self._allocated[a])

    def require_allocated(self, a):
        if not self.is_allocated(a):
            raise NotAllocatedError(f"row {a:#x} is not allocated")

    def allocate(self):
        """Claim the lowest free row; the caller writes its fields."""
        free = np.flatnonzero(~self._allocated)
        if free.size == 0:
            raise CapacityError(f"all {self.capacity} rows are allocated",
                                required=len(self) + 1, available=self.capacity)
        a = int(free[0])
        self._allocated[a] = True
        return a

    def release(self, a):
        """Zero every cell of row ``a`` and return it to the free map."""
        self.require_allocated(a)
        with self.fabric.lock:
            for aid in self.scheme.arrays:
                if self.fabric.read(a, aid) != 0:
                    self.fabric.prog(a, aid, 0)
        self._allocated[a] = False

    def allocated_rows(self):
        return [int(a) for a in np.flatnonzero(self._allocated)]

    def linknode(self, a):
        self.require_allocated(a)
        f = self.fabric
        has_s = self.scheme.has(ArrayId.S1)
        return Linknode(
            address=a,
            head=Ref(f.read(a, ArrayId.N1)),
            next=Ref(f.read(a, ArrayId.N2)),
            primID1=Ref(f.read(a, ArrayId.C1)),
            primID2=Ref(f.read(a, ArrayId.C2)),
            prop1=Ref(f.read(a, ArrayId.S1)) if has_s else NULL,
            prop2=Ref(f.read(a, ArrayId.S2)) if has_s else NULL,
            misc1=f.read(a, ArrayId.M1) if has_s else 0,
            misc2=f.read(a, ArrayId.M2) if has_s else 0,
        )

    def headnodes(self):
        return [a for a in self.allocated_rows() if _is_headnode_row(self, a)]

    def literal(self, text):
        return self.literals.intern(text)

    def image(self):
        return self.fabric.image()


def _is_headnode_row(db, a):
    f = db.fabric
    return (f.read(a, ArrayId.N1) == a + 1
            and f.read(a, ArrayId.C1) == 0 and f.read(a, ArrayId.C2) == 0)


def is_headnode(db, a):
    """True iff row ``a`` heads itself and both primIDs are NULL."""
    db.require_allocated(a)
    return _is_headnode_row(db, a)


@dataclass(frozen=True)
class Violation:
    kind: str
    rows: tuple
    detail: str

    def __str__(self):
        rows = ",".join(f"{r:#x}" for r in self.rows)
        return f"{self.kind} rows={rows} {self.detail}"


def check_invariants(db):
    """Return a list of :class:`Violation` (empty for a well-formed database).

    Violation kinds: ``bad-head``, ``bad-next``, ``bad-primid``, ``bad-prop``,
    ``malformed-root`` (heads itself but carries primIDs), ``rooting``,
    ``cycle``, ``foreign-member`` and ``orphan``.
    """
    f = db.fabric
    cap = db.capacity
    rows = db.allocated_rows()
    allocated = set(rows)
    has_s = db.scheme.has(ArrayId.S1)
    out = []

    def addr_of(word):
        kind, p = decode_ref(word)
        if kind is RefKind.ADDR and p < cap:
            return p
        return None

    headnodes = set()
    bad_next = set()
    for a in rows:
        n1 = f.read(a, ArrayId.N1)
        h = addr_of(n1)
        if h is None or h not in allocated:
            out.append(Violation("bad-head", (a,), f"head {n1:#x} is not an allocated row"))
        elif h == a:
            if f.read(a, ArrayId.C1) == 0 and f.read(a, ArrayId.C2) == 0:
                headnodes.add(a)
            else:
                out.append(Violation("malformed-root", (a,), "row heads itself but has primIDs"))
        n2 = f.read(a, ArrayId.N2)
        if n2 != EOC_WORD and addr_of(n2) not in allocated:
            bad_next.add(a)
            out.append(Violation("bad-next", (a,), f"next {n2:#x} is neither EOC nor an allocated row"))

    for a in rows:
        for aid in (ArrayId.C1, ArrayId.C2):
            word = f.read(a, aid)
            kind, p = decode_ref(word)
            if kind is RefKind.NULL:
                continue
            if kind is RefKind.LITERAL and p < len(db.literals):
                continue
            if kind is RefKind.ADDR and p in headnodes:
                continue
            out.append(Violation("bad-primid", (a,), f"{aid} {word:#x} is not NULL, a literal or a headnode"))
        if has_s:
            for aid in (ArrayId.S1, ArrayId.S2):
                word = f.read(a, aid)
                if word != 0 and addr_of(word) not in allocated:
                    out.append(Violation("bad-prop", (a,), f"{aid} {word:#x} is not NULL or an allocated row"))

    # Rooting: the head walk from every row must reach a self-headed row.
    for a in rows:
        cur, ok = a, False
        for _ in range(cap):
            h = addr_of(f.read(cur, ArrayId.N1))
            if h is None or h not in allocated:
                break
            if h == cur:
                ok = True
                break
            cur = h
        if not ok and addr_of(f.read(a, ArrayId.N1)) in allocated:
            out.append(Violation("rooting", (a,), "head walk does not reach a root"))

    reached = set()
    cycles = set()

    def walk(start, owner, label):
        """Walk next pointers from ``start``; every member must have head == owner."""
        seen = []
        index = {}
        cur = start
        while True:
            if cur in index:
                cyc = tuple(seen[index[cur]:])
                key = frozenset(cyc)
                if key not in cycles:
                    cycles.add(key)
                    out.append(Violation("cycle", tuple(sorted(cyc)), f"next pointers loop in {label}"))
                break
            index[cur] = len(seen)
            seen.append(cur)
            if addr_of(f.read(cur, ArrayId.N1)) != owner:
                out.append(Violation("foreign-member", (cur,),
                                     f"member of {label} has head {f.read(cur, ArrayId.N1):#x}"))
            if cur in bad_next:
                break
            n2 = f.read(cur, ArrayId.N2)
            if n2 == EOC_WORD:
                break
            cur = addr_of(n2)
        reached.update(seen)
        return seen

    pending = []
    for h in sorted(headnodes):
        members = walk(h, h, f"chain {h:#x}")
        pending.extend(members)
    while pending and has_s:
        parent = pending.pop(0)
        for aid in (ArrayId.S1, ArrayId.S2):
            root = addr_of(f.read(parent, aid))
            if root is None or root not in allocated or root in reached:
                continue
            pending.extend(walk(root, parent, f"sub-chain {aid} of {parent:#x}"))

    for a in rows:
        if a not in reached:
            out.append(Violation("orphan", (a,), "row is not reachable from any headnode"))
    return out
