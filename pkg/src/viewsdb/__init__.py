"""viewsdb: a storage engine and functional simulator for the Views graph-database model.

Graphs are stored as chains of fixed-width linknodes in a simulated
associative memory fabric, driven through a small instruction set
(PROG, AAR, CAR, CAR2, CARNEXT, HEAD, TAIL).
"""

from .builder import (add_link, add_subordinate, chain_length, create_headnode, export_drlg,
                      import_drlg, rewire, unlink)
from .database import ViewsDB, Violation, check_invariants, is_headnode
from .drlg import DRLG, Attachment, Edge, Literal, isomorphic, random_drlg
from .errors import (AddressError, CapacityError, CorruptStructureError, EncodingError,
                     FormatError, InvalidQueryError, NotAllocatedError, NotHeadnodeError,
                     ParseError, SchemeError, StaleCursorError, TargetError, TruncationError,
                     ViewsError)
from .fabric import MatchCursor, MemoryFabric
from .image import dumps_image, load_image, loads_image, save_image
from .model import (EOC, NULL, ArrayId, Field, Linknode, LiteralTable, Ref, RefKind, Scheme,
                    decode_ref, encode_ref)
from .query import attribute_of, read_chain, read_subchain, syllogism_explain, syllogism_search, two_cue
from .slipnet import (HeadUniversals, LinkUniversals, SlipnetSpec, SlipnetState, build_slipnet,
                      propagate_all, propagate_step, slippage_scan)
from .textio import dump, load, loads, parse_document, serialize

__version__ = "0.1.0"
