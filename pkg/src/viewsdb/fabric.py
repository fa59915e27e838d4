"""Supercluster memory fabric and the associative instruction set.

A fabric is a bank of ``superclusters`` groups, each holding one
``rows_per_supercluster``-word array per :class:`~viewsdb.model.ArrayId`
present in the scheme.  Rows are addressed by a flat index
``supercluster * rows_per_supercluster + row``.

Instructions: :meth:`MemoryFabric.prog`, :meth:`~MemoryFabric.aar`,
:meth:`~MemoryFabric.car`, :meth:`~MemoryFabric.car2`,
:meth:`~MemoryFabric.carnext`, :meth:`~MemoryFabric.head` and
:meth:`~MemoryFabric.tail`.

When ``trace`` is set to a callable, every executed instruction emits one
line ``OP key=value ... -> result``.  Keys appear in argument order;
addresses and words are lower-case hex with a ``0x`` prefix.
"""

import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import (AddressError, CorruptStructureError, InvalidQueryError,
                     NotAllocatedError, SchemeError, StaleCursorError)
from .model import (ArrayId, EOC_WORD, NULL_WORD, RefKind, Scheme, as_word,
                    decode_ref)

DEFAULT_SUPERCLUSTERS = 8
DEFAULT_ROWS = 64


@dataclass
class MatchCursor:
    """Snapshot of a CAR/CAR2 match set, drained with :meth:`MemoryFabric.carnext`."""

    fabric: "MemoryFabric" = field(repr=False)
    query: tuple
    matches: tuple
    version: int
    ident: int
    position: int = None
    _next: int = field(default=0, repr=False)

    def __iter__(self):
        while True:
            a = self.fabric.carnext(self)
            if a is None:
                return
            yield a

    def __len__(self):
        return len(self.matches)


class MemoryFabric:
    def __init__(self, scheme=Scheme.CNSM, superclusters=DEFAULT_SUPERCLUSTERS,
                 rows_per_supercluster=DEFAULT_ROWS, trace=None):
        if superclusters < 1 or rows_per_supercluster < 1:
            raise ValueError("fabric geometry must be positive")
        self.scheme = Scheme(scheme)
        self.superclusters = int(superclusters)
        self.rows_per_supercluster = int(rows_per_supercluster)
        self.arrays = {
            aid: np.zeros((self.superclusters, self.rows_per_supercluster), dtype=np.uint64)
            for aid in self.scheme.arrays
        }
        # Flat views share memory with ``arrays``; keyed by ArrayId and its string value.
        self._flat = {}
        for aid, arr in self.arrays.items():
            self._flat[aid] = self._flat[aid.value] = arr.reshape(-1)
        self.trace = trace
        self.version = 0
        self.lock = threading.RLock()
        self._cursor_ids = 0

    @property
    def capacity(self):
        return self.superclusters * self.rows_per_supercluster

    def split(self, a):
        """Flat address -> (supercluster, row)."""
        self._check_addr(a)
        return divmod(a, self.rows_per_supercluster)

    def flat(self, supercluster, row):
        if not (0 <= supercluster < self.superclusters and 0 <= row < self.rows_per_supercluster):
            raise AddressError(f"(supercluster={supercluster}, row={row}) out of range")
        return supercluster * self.rows_per_supercluster + row

    def _check_addr(self, a):
        if isinstance(a, bool) or not isinstance(a, (int, np.integer)):
            raise AddressError(f"address must be an int, got {a!r}")
        if not 0 <= a < self.capacity:
            raise AddressError(f"address {a:#x} outside capacity {self.capacity}")

    def _cells(self, array):
        cells = self._flat.get(array)
        if cells is not None:
            return cells
        try:
            aid = ArrayId(array)
        except ValueError:
            raise SchemeError(f"unknown array {array!r}") from None
        if aid not in self.arrays:
            raise SchemeError(f"array {aid} is not allocated under the {self.scheme.value} scheme")
        return self.arrays[aid].reshape(-1)

    def _emit(self, op, args, result):
        if self.trace is not None:
            parts = " ".join(f"{k}={v}" for k, v in args)
            self.trace(f"{op} {parts} -> {result}")

    # Untraced primitives shared by the composite instructions.

    def read(self, a, array):
        return int(self._cells(array)[a])

    def column(self, array):
        """Read-only view of one array across all superclusters, flat-indexed."""
        view = self._cells(array).view()
        view.flags.writeable = False
        return view

    # Instructions

    def prog(self, a, array, value):
        """PROG: write ``value`` into cell (a, array)."""
        with self.lock:
            cells = self._cells(array)
            self._check_addr(a)
            word = as_word(value)
            cells[a] = np.uint64(word)
            self.version += 1
            if self.trace is not None:
                self._emit("PROG", [("addr", f"{a:#x}"), ("array", ArrayId(array)),
                                    ("value", f"{word:#x}")], "ok")

    def aar(self, a, array):
        """AAR: address-addressable read."""
        with self.lock:
            cells = self._cells(array)
            self._check_addr(a)
            word = int(cells[a])
            if self.trace is not None:
                self._emit("AAR", [("addr", f"{a:#x}"), ("array", ArrayId(array))], f"{word:#x}")
            return word

    def _new_cursor(self, query, hits):
        self._cursor_ids += 1
        return MatchCursor(self, query, tuple(int(h) for h in hits), self.version, self._cursor_ids)

    def car(self, array, value):
        """CAR: every flat address whose ``array`` cell equals ``value`` bit-exactly.

        Sentinel values are legal cues: NULL finds unwritten cells, EOC finds
        chain ends.
        """
        with self.lock:
            cells = self._cells(array)
            word = as_word(value)
            hits = np.flatnonzero(cells == np.uint64(word))
            cursor = self._new_cursor(((ArrayId(array), word),), hits)
            self._emit("CAR", [("array", ArrayId(array)), ("value", f"{word:#x}")],
                       f"cursor={cursor.ident} matches={len(hits)}")
            return cursor

    def car2(self, array_a, value_a, array_b, value_b):
        """CAR2: addresses where both cue cells match simultaneously."""
        with self.lock:
            cells_a = self._cells(array_a)
            cells_b = self._cells(array_b)
            if ArrayId(array_a) == ArrayId(array_b):
                raise InvalidQueryError(f"CAR2 needs two distinct arrays, got {array_a} twice")
            wa, wb = as_word(value_a), as_word(value_b)
            hits = np.flatnonzero((cells_a == np.uint64(wa)) & (cells_b == np.uint64(wb)))
            cursor = self._new_cursor(((ArrayId(array_a), wa), (ArrayId(array_b), wb)), hits)
            self._emit("CAR2", [("arrayA", ArrayId(array_a)), ("valueA", f"{wa:#x}"),
                                ("arrayB", ArrayId(array_b)), ("valueB", f"{wb:#x}")],
                       f"cursor={cursor.ident} matches={len(hits)}")
            return cursor

    def carnext(self, cursor):
        """CARNEXT: next ascending match of ``cursor``, or ``None`` once exhausted."""
        with self.lock:
            if cursor.fabric is not self:
                raise InvalidQueryError("cursor belongs to a different fabric")
            if cursor.version != self.version:
                raise StaleCursorError(f"fabric changed since cursor {cursor.ident} was created")
            if cursor._next >= len(cursor.matches):
                self._emit("CARNEXT", [("cursor", cursor.ident)], "exhausted")
                return None
            a = cursor.matches[cursor._next]
            cursor._next += 1
            cursor.position = a
            self._emit("CARNEXT", [("cursor", cursor.ident)], f"{a:#x}")
            return a

    def _head(self, a):
        self._check_addr(a)
        n1 = self._cells(ArrayId.N1)
        cur = a
        for _ in range(self.capacity):
            kind, target = decode_ref(int(n1[cur]))
            if kind is not RefKind.ADDR:
                if cur == a and int(n1[cur]) == NULL_WORD:
                    raise NotAllocatedError(f"row {a:#x} is not allocated")
                raise CorruptStructureError(f"row {cur:#x} has non-address head {int(n1[cur]):#x}")
            if target == cur:
                return cur
            if target >= self.capacity:
                raise CorruptStructureError(f"row {cur:#x} head points outside the fabric")
            cur = target
        raise CorruptStructureError(f"head walk from {a:#x} did not reach a root")

    def head(self, a):
        """HEAD: follow N1 from ``a`` to the row that heads itself."""
        with self.lock:
            h = self._head(a)
            self._emit("HEAD", [("addr", f"{a:#x}")], f"{h:#x}")
            return h

    def _tail(self, a):
        n2 = self._cells(ArrayId.N2)
        cur = self._head(a)
        for _ in range(self.capacity):
            word = int(n2[cur])
            if word == EOC_WORD:
                return cur
            kind, nxt = decode_ref(word)
            if kind is not RefKind.ADDR or nxt >= self.capacity:
                raise CorruptStructureError(f"row {cur:#x} has invalid next {word:#x}")
            cur = nxt
        raise CorruptStructureError(f"chain through {a:#x} does not terminate")

    def tail(self, a):
        """TAIL: last row of the chain owning ``a`` (walk starts at head(a))."""
        with self.lock:
            t = self._tail(a)
            self._emit("TAIL", [("addr", f"{a:#x}")], f"{t:#x}")
            return t

    def image(self):
        """Bytes of every array in fixed order; equal images mean identical fabrics."""
        return b"".join(self.arrays[aid].astype("<u8").tobytes()
                        for aid in self.scheme.arrays)

    def copy(self):
        other = MemoryFabric(self.scheme, self.superclusters, self.rows_per_supercluster)
        for aid, arr in self.arrays.items():
            other.arrays[aid][...] = arr
        return other
