"""The ``.vimg`` binary image: a bit-exact dump of every array and the literal table.

Layout (all integers little-endian)::

    magic       8 bytes  b"VIEWSDB1"
    header      4 x u32  scheme (0 CNSM, 1 Normalised), superclusters,
                         rows per supercluster, literal count
    payload     for each supercluster, for each present array in
                N1 N2 C1 C2 S1 S2 M1 M2 order: rows x u64
    literals    per entry: u32 byte length, UTF-8 bytes

Names are not stored.  Row allocation is recovered from the N1 array.
"""

import struct

import numpy as np

from .database import ViewsDB
from .errors import EncodingError, FormatError, TruncationError
from .fabric import MemoryFabric
from .model import LiteralTable, Scheme

MAGIC = b"VIEWSDB1"
_HEADER = struct.Struct("<4I")
_U32 = struct.Struct("<I")
_SCHEME_CODES = {Scheme.CNSM: 0, Scheme.NORMALISED: 1}
_CODE_SCHEMES = {v: k for k, v in _SCHEME_CODES.items()}


def dumps_image(db):
    f = db.fabric
    out = [MAGIC, _HEADER.pack(_SCHEME_CODES[f.scheme], f.superclusters,
                               f.rows_per_supercluster, len(db.literals))]
    # Supercluster-major: stack to (superclusters, arrays, rows).
    stacked = np.stack([f.arrays[aid] for aid in f.scheme.arrays], axis=1)
    out.append(stacked.astype("<u8").tobytes())
    for entry in db.literals:
        out.append(_U32.pack(len(entry)))
        out.append(entry)
    return b"".join(out)


def _take(data, pos, n, what):
    if pos + n > len(data):
        raise TruncationError(f"image truncated in {what}: need {n} bytes at offset {pos}, "
                              f"{len(data) - pos} left")
    return data[pos:pos + n], pos + n


def loads_image(data):
    """Rebuild a database from image bytes."""
    data = bytes(data)
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        if MAGIC.startswith(data):
            raise TruncationError("image truncated in magic")
        raise FormatError("bad magic; not a viewsdb image")
    pos = len(MAGIC)
    raw, pos = _take(data, pos, _HEADER.size, "header")
    code, superclusters, rows, n_literals = _HEADER.unpack(raw)
    if code not in _CODE_SCHEMES:
        raise FormatError(f"unknown scheme code {code}")
    if superclusters < 1 or rows < 1:
        raise FormatError(f"invalid geometry {superclusters}x{rows}")
    scheme = _CODE_SCHEMES[code]
    n_arrays = len(scheme.arrays)
    size = superclusters * n_arrays * rows * 8
    raw, pos = _take(data, pos, size, "payload")
    stacked = np.frombuffer(raw, dtype="<u8").reshape(superclusters, n_arrays, rows)
    fabric = MemoryFabric(scheme, superclusters, rows)
    for i, aid in enumerate(scheme.arrays):
        fabric.arrays[aid][:] = stacked[:, i, :]
    entries = []
    for i in range(n_literals):
        raw, pos = _take(data, pos, _U32.size, f"literal {i} length")
        (length,) = _U32.unpack(raw)
        entry, pos = _take(data, pos, length, f"literal {i}")
        try:
            entry.decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(f"literal {i} is not valid UTF-8") from None
        entries.append(entry)
    if pos != len(data):
        raise TruncationError(f"{len(data) - pos} trailing bytes after literal table")
    try:
        literals = LiteralTable(entries)
    except EncodingError as exc:
        raise FormatError(str(exc)) from None
    return ViewsDB.from_fabric(fabric, literals)


def is_image(data):
    return bytes(data[:len(MAGIC)]) == MAGIC


def save_image(db, path):
    with open(path, "wb") as fh:
        fh.write(dumps_image(db))


def load_image(path):
    with open(path, "rb") as fh:
        return loads_image(fh.read())
