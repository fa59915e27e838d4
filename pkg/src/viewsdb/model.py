"""Stored-word encoding, array layout and linknode records.

Every cell in the memory fabric holds one 64-bit word.  Pointer-valued
fields decode into one of four variants:

====================  ===========================================
variant               raw word
====================  ===========================================
NULL                  ``0x0000_0000_0000_0000``
EOC                   ``0xFFFF_FFFF_FFFF_FFFF``
``Literal(i)``        ``1 << 63 | i``  (``i < 2**63 - 1``)
``Addr(a)``           ``a + 1``        (``a < 2**63 - 2``)
====================  ===========================================

Addresses are shifted by one so that row 0 is addressable without
colliding with NULL.
"""

from dataclasses import dataclass
from enum import Enum

from .errors import EncodingError

WORD_BITS = 64
WORD_MASK = (1 << WORD_BITS) - 1
NULL_WORD = 0
EOC_WORD = WORD_MASK
LITERAL_TAG = 1 << 63
MAX_PAYLOAD = (1 << 63) - 2


class RefKind(Enum):
    NULL = "NULL"
    EOC = "EOC"
    ADDR = "Addr"
    LITERAL = "Literal"


def encode_ref(kind, payload=0):
    """Return the :class:`Ref` for ``kind`` carrying ``payload``."""
    kind = RefKind(kind)
    if kind is RefKind.NULL:
        return Ref(NULL_WORD)
    if kind is RefKind.EOC:
        return Ref(EOC_WORD)
    if not isinstance(payload, int) or isinstance(payload, bool):
        raise EncodingError(f"{kind.value} payload must be an int, got {payload!r}")
    if payload < 0 or payload > MAX_PAYLOAD:
        raise EncodingError(f"{kind.value} payload {payload} out of range")
    if kind is RefKind.ADDR:
        return Ref(payload + 1)
    return Ref(LITERAL_TAG | payload)


def decode_ref(word):
    """Split a raw word (or Ref) into ``(RefKind, payload)``.

    The payload of NULL and EOC is ``None``.
    """
    word = int(word)
    if word < 0 or word > WORD_MASK:
        raise EncodingError(f"word {word:#x} does not fit in 64 bits")
    if word == NULL_WORD:
        return RefKind.NULL, None
    if word == EOC_WORD:
        return RefKind.EOC, None
    if word & LITERAL_TAG:
        return RefKind.LITERAL, word & ~LITERAL_TAG
    return RefKind.ADDR, word - 1


@dataclass(frozen=True, order=True)
class Ref:
    """A 64-bit stored pointer word."""

    raw: int

    def __post_init__(self):
        if not isinstance(self.raw, int) or not 0 <= self.raw <= WORD_MASK:
            raise EncodingError(f"raw word {self.raw!r} is not a 64-bit unsigned int")

    @classmethod
    def addr(cls, flat):
        if type(flat) is int and 0 <= flat <= MAX_PAYLOAD:
            return cls(flat + 1)  # fast path for the common case
        return encode_ref(RefKind.ADDR, flat)

    @classmethod
    def literal(cls, index):
        return encode_ref(RefKind.LITERAL, index)

    @property
    def kind(self):
        return decode_ref(self.raw)[0]

    @property
    def payload(self):
        return decode_ref(self.raw)[1]

    @property
    def is_null(self):
        return self.raw == NULL_WORD

    @property
    def is_eoc(self):
        return self.raw == EOC_WORD

    @property
    def is_addr(self):
        return self.kind is RefKind.ADDR

    @property
    def is_literal(self):
        return self.kind is RefKind.LITERAL

    def __int__(self):
        return self.raw

    def __repr__(self):
        kind, payload = decode_ref(self.raw)
        if payload is None:
            return kind.value
        return f"{kind.value}({payload})"


NULL = Ref(NULL_WORD)
EOC = Ref(EOC_WORD)


def as_word(value):
    """Coerce a Ref or int to a raw 64-bit word."""
    word = int(value)
    if not 0 <= word <= WORD_MASK:
        raise EncodingError(f"value {value!r} does not fit in 64 bits")
    return word


class ArrayId(str, Enum):
    N1 = "N1"
    N2 = "N2"
    C1 = "C1"
    C2 = "C2"
    S1 = "S1"
    S2 = "S2"
    M1 = "M1"
    M2 = "M2"

    def __str__(self):
        return self.value


# Fixed serialisation order for images and fabric snapshots.
ARRAY_ORDER = (ArrayId.N1, ArrayId.N2, ArrayId.C1, ArrayId.C2,
               ArrayId.S1, ArrayId.S2, ArrayId.M1, ArrayId.M2)


class Field(Enum):
    HEAD = "head"
    NEXT = "next"
    PRIMID1 = "primID1"
    PRIMID2 = "primID2"
    PROP1 = "prop1"
    PROP2 = "prop2"
    MISC1 = "misc1"
    MISC2 = "misc2"

    @property
    def array(self):
        return _FIELD_ARRAYS[self]


_FIELD_ARRAYS = {
    Field.HEAD: ArrayId.N1,
    Field.NEXT: ArrayId.N2,
    Field.PRIMID1: ArrayId.C1,
    Field.PRIMID2: ArrayId.C2,
    Field.PROP1: ArrayId.S1,
    Field.PROP2: ArrayId.S2,
    Field.MISC1: ArrayId.M1,
    Field.MISC2: ArrayId.M2,
}


class Scheme(Enum):
    """Array allocation: CNSM carries all eight arrays, Normalised only C and N."""

    CNSM = "CNSM"
    NORMALISED = "Normalised"

    @property
    def arrays(self):
        if self is Scheme.CNSM:
            return ARRAY_ORDER
        return (ArrayId.N1, ArrayId.N2, ArrayId.C1, ArrayId.C2)

    def has(self, array):
        return ArrayId(array) in self.arrays


@dataclass(frozen=True)
class Linknode:
    """One row read across all arrays of a fabric."""

    address: int
    head: Ref
    next: Ref
    primID1: Ref
    primID2: Ref
    prop1: Ref = NULL
    prop2: Ref = NULL
    misc1: int = 0
    misc2: int = 0

    @property
    def is_headnode(self):
        return (self.head == Ref.addr(self.address)
                and self.primID1.is_null and self.primID2.is_null)


class LiteralTable:
    """Append-only, deduplicated table of UTF-8 strings addressed by Literal refs."""

    def __init__(self, entries=()):
        self._entries = []
        self._index = {}
        for entry in entries:
            if self._key(entry) in self._index:
                raise EncodingError(f"duplicate literal {entry!r}")
            self.intern(entry)

    @staticmethod
    def _key(entry):
        if isinstance(entry, bytes):
            return entry
        return str(entry).encode("utf-8")

    def intern(self, text):
        """Return the Literal ref for ``text``, adding it if new."""
        key = self._key(text)
        index = self._index.get(key)
        if index is None:
            index = len(self._entries)
            self._entries.append(key)
            self._index[key] = index
        return Ref.literal(index)

    def find(self, text):
        index = self._index.get(self._key(text))
        return None if index is None else Ref.literal(index)

    def text(self, ref):
        return self.entry(ref).decode("utf-8")

    def entry(self, ref):
        kind, index = decode_ref(ref)
        if kind is not RefKind.LITERAL:
            raise EncodingError(f"{ref!r} is not a literal")
        if index >= len(self._entries):
            raise EncodingError(f"literal index {index} not in table of {len(self)}")
        return self._entries[index]

    def contains(self, ref):
        kind, index = decode_ref(ref)
        return kind is RefKind.LITERAL and index < len(self._entries)

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __eq__(self, other):
        return isinstance(other, LiteralTable) and self._entries == other._entries
