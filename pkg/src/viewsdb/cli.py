"""Command-line front end: ``viewsdb <command> ...``.

Exit codes: 0 success, 1 query found nothing, 2 usage error, 3 data error.

Reference arguments accept a headnode name from a ``.views`` file, ``@N``
or ``0xN`` for an address, ``lit:TEXT`` for a stored literal and ``_`` for
NULL.  ISA values additionally accept ``EOC`` and raw integers.
"""

import argparse
import sys
from collections import Counter
from importlib import resources

from . import builder, query, slipnet
from .database import check_invariants
from .errors import ViewsError
from .image import is_image, loads_image, save_image
from .model import EOC, NULL, ArrayId, Ref, RefKind, decode_ref
from .textio import dump, loads

EXIT_OK, EXIT_NOT_FOUND, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# Loading and argument resolution

def open_db(path):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return loads_image(data) if is_image(data) else loads(data)


def bundled(name):
    return loads(resources.files("viewsdb").joinpath("data", name).read_bytes())


def save_db(db, path):
    if str(path).endswith(".views"):
        dump(db, path)
    else:
        save_image(db, path)


def _int(text):
    try:
        return int(text, 0)
    except ValueError:
        return None


def resolve_addr(db, text):
    if text.startswith("@"):
        a = _int(text[1:])
    else:
        a = _int(text)
        if a is None:
            by_name = {n: h for h, n in db.names.items()}
            if text not in by_name:
                raise UsageError(f"unknown name {text!r}")
            a = by_name[text]
    if a is None or not 0 <= a < db.capacity:
        raise UsageError(f"bad address {text!r}")
    return a


def resolve_ref(db, text):
    """Ref for a query cue."""
    if text == "_":
        return NULL
    if text.startswith("lit:"):
        found = db.literals.find(text[4:])
        # An unknown literal cannot match anything; any unused index will do.
        return found if found is not None else Ref.literal(len(db.literals))
    return Ref.addr(resolve_addr(db, text))


def resolve_word(db, text):
    """Raw 64-bit word for an ISA value."""
    if text == "EOC":
        return EOC.raw
    if text == "NULL":
        return 0
    raw = _int(text)
    if raw is not None:
        if not 0 <= raw < 1 << 64:
            raise UsageError(f"value {text!r} does not fit in 64 bits")
        return raw
    return resolve_ref(db, text).raw


def resolve_array(db, text):
    try:
        aid = ArrayId(text.upper())
    except ValueError:
        raise UsageError(f"unknown array {text!r}") from None
    if not db.scheme.has(aid):
        raise UsageError(f"array {aid.value} not present under {db.scheme.value}")
    return aid


def describe(db, word):
    """Human text for a stored primID word."""
    kind, p = decode_ref(word)
    if kind is RefKind.NULL:
        return "_"
    if kind is RefKind.EOC:
        return "EOC"
    if kind is RefKind.LITERAL:
        return f"lit:{db.literals.text(Ref(word))}" if db.literals.contains(Ref(word)) else f"lit#{p}"
    return db.names.get(p, f"{p:#x}")


# Commands

def cmd_load(args, out):
    db = open_db(args.file)
    out(f"rows {len(db)}/{db.capacity} headnodes {len(db.headnodes())} literals {len(db.literals)}")
    if args.save:
        save_db(db, args.save)
        out(f"saved {args.save}")
    return EXIT_OK


def cmd_save(args, out):
    save_db(open_db(args.src), args.dst)
    out(f"saved {args.dst}")
    return EXIT_OK


def cmd_check(args, out):
    problems = check_invariants(open_db(args.db))
    if not problems:
        out("ok")
        return EXIT_OK
    for v in problems:
        out(str(v))
    return EXIT_DATA


def cmd_isa(args, out):
    db = open_db(args.db)
    if args.trace:
        db.fabric.trace = lambda line: print(line, file=args.stderr)
    f = db.fabric
    op, rest = args.op.lower(), args.args
    arity = {"prog": 3, "aar": 2, "car": 2, "car2": 4, "head": 1, "tail": 1}
    if op == "carnext":
        if len(rest) not in (2, 4):
            raise UsageError("carnext takes ARRAY VALUE or ARRAY_A VALUE_A ARRAY_B VALUE_B")
    elif op not in arity:
        raise UsageError(f"unknown ISA op {args.op!r}")
    elif len(rest) != arity[op]:
        raise UsageError(f"{op} takes {arity[op]} arguments, got {len(rest)}")

    if op == "prog":
        f.prog(resolve_addr(db, rest[0]), resolve_array(db, rest[1]), resolve_word(db, rest[2]))
        out("ok")
    elif op == "aar":
        out(f"{f.aar(resolve_addr(db, rest[0]), resolve_array(db, rest[1])):#x}")
    elif op in ("head", "tail"):
        out(f"{getattr(f, op)(resolve_addr(db, rest[0])):#x}")
    else:
        cues = [(resolve_array(db, rest[i]), resolve_word(db, rest[i + 1]))
                for i in range(0, len(rest), 2)]
        cursor = f.car(*cues[0]) if len(cues) == 1 else f.car2(*cues[0], *cues[1])
        if op == "carnext":
            limit = args.count if args.count is not None else len(cursor.matches) + 1
            for _ in range(limit):
                a = f.carnext(cursor)
                out("exhausted" if a is None else f"{a:#x}")
                if a is None:
                    break
        else:
            for a in cursor.matches:
                out(f"{a:#x}")
    if args.save:
        save_db(db, args.save)
    return EXIT_OK


def cmd_query(args, out):
    db = open_db(args.db)
    kind = args.kind
    params = args.params
    need = {"two-cue": 2, "attr": 2, "syllogism": 3}
    if kind not in need:
        raise UsageError(f"unknown query {kind!r}; use two-cue, attr or syllogism")
    if len(params) != need[kind]:
        raise UsageError(f"{kind} takes {need[kind]} arguments, got {len(params)}")
    if kind == "two-cue":
        hits = query.two_cue(db, resolve_ref(db, params[0]), resolve_ref(db, params[1]))
        for hit in hits:
            out(f"{hit.link:#x} owner={describe(db, Ref.addr(hit.owner).raw)}")
        found = bool(hits)
    elif kind == "attr":
        hits = query.attribute_of(db, resolve_addr(db, params[0]), resolve_ref(db, params[1]))
        for hit in hits:
            out(f"{hit.link:#x} value={describe(db, hit.value.raw)}")
        found = bool(hits)
    else:
        if args.via is None:
            raise UsageError("syllogism needs --via")
        res = query.syllogism_explain(db, resolve_addr(db, params[0]), resolve_ref(db, params[1]),
                                      resolve_ref(db, params[2]), resolve_ref(db, args.via))
        out(_syllogism_line(db, res))
        found = res is not None
    if not found:
        if kind != "syllogism":
            out("no match")
        return EXIT_NOT_FOUND
    return EXIT_OK


def _syllogism_line(db, res):
    if res is None:
        return "NULL"
    via = "" if res.stage == 1 else f" via={describe(db, res.via.raw)}"
    return f"found {res.addr:#x} stage={res.stage}{via}"


def cmd_demo(args, out):
    if args.name == "felidae":
        db = bundled("felidae.views")
        names = {n: h for h, n in db.names.items()}
        out("query: syllogism this family Felidae --via species")
        res = query.syllogism_explain(db, names["this"], Ref.addr(names["family"]),
                                      Ref.addr(names["Felidae"]), Ref.addr(names["species"]))
        out(_syllogism_line(db, res))
        return EXIT_OK if res is not None else EXIT_NOT_FOUND
    if args.name == "tomhanks":
        db = bundled("tom_hanks.views")
        names = {n: h for h, n in db.names.items()}
        out("query: two-cue won 2_Oscars")
        hits = query.two_cue(db, Ref.addr(names["won"]), Ref.addr(names["2_Oscars"]))
        for hit in hits:
            out(f"{hit.link:#x} owner={db.names[hit.owner]}")
        return EXIT_OK if hits else EXIT_NOT_FOUND
    if args.name == "slipnet":
        if args.steps < 0:
            raise UsageError("--steps must be non-negative")
        db = bundled("three_node_slipnet.views")
        state = slipnet.SlipnetState(threshold=args.threshold)
        for line in slipnet.activation_trace(db, 0):
            out(line)
        for step in range(1, args.steps + 1):
            slipnet.propagate_all(db, state)
            for line in slipnet.activation_trace(db, step):
                out(line)
            for source, dests in sorted(slipnet.slippage_scan(db, state).items()):
                for d in dests:
                    out(f"step={step} slip from={db.names[source]} to={db.names[d]}")
        for source in sorted(state.slipping_from):
            cands = " ".join(db.names[d] for d in state.slipping_from[source])
            out(f"slippingFrom[{db.names[source]}] = [{cands}]")
        return EXIT_OK
    raise UsageError(f"unknown demo {args.name!r}")


def cmd_stats(args, out):
    db = open_db(args.db)
    heads = db.headnodes()
    out(f"capacity {db.capacity}")
    out(f"rows {len(db)}")
    out(f"headnodes {len(heads)}")
    out(f"linknodes {len(db) - len(heads)}")
    out(f"literals {len(db.literals)}")
    hist = Counter(builder.chain_length(db, h) for h in heads)
    for length in sorted(hist):
        out(f"chain_length {length}: {hist[length]}")
    return EXIT_OK


def make_parser():
    p = _Parser(prog="viewsdb", description="Views graph-database engine and simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("load", help="parse a database and print a summary")
    s.add_argument("file")
    s.add_argument("--save", metavar="OUT", help="write .vimg (or .views) output")
    s.set_defaults(func=cmd_load)

    s = sub.add_parser("save", help="convert between .views and .vimg")
    s.add_argument("src")
    s.add_argument("dst")
    s.set_defaults(func=cmd_save)

    s = sub.add_parser("check", help="report invariant violations")
    s.add_argument("db")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("isa", help="run one ISA instruction")
    s.add_argument("db")
    s.add_argument("op", help="prog, aar, car, car2, head, tail or carnext")
    s.add_argument("args", nargs="*")
    s.add_argument("--trace", action="store_true", help="print the instruction trace to stderr")
    s.add_argument("--count", type=int, help="carnext: number of CARNEXT steps")
    s.add_argument("--save", metavar="OUT", help="write the database after the op")
    s.set_defaults(func=cmd_isa)

    s = sub.add_parser("query", help="two-cue, attr or syllogism query")
    s.add_argument("db")
    s.add_argument("kind")
    s.add_argument("params", nargs="*")
    s.add_argument("--via")
    s.set_defaults(func=cmd_query)

    s = sub.add_parser("demo", help="run a bundled example")
    s.add_argument("name", choices=("felidae", "tomhanks", "slipnet"))
    s.add_argument("--steps", type=int, default=1)
    s.add_argument("--threshold", type=float, default=slipnet.DEFAULT_THRESHOLD)
    s.set_defaults(func=cmd_demo)

    s = sub.add_parser("stats", help="row counts and chain-length histogram")
    s.add_argument("db")
    s.set_defaults(func=cmd_stats)
    return p


def run(argv, stdout=None, stderr=None):
    """Execute one command; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr

    def out(line):
        print(line, file=stdout)

    try:
        args = make_parser().parse_args(argv)
        args.stderr = stderr
        return args.func(args, out)
    except UsageError as exc:
        print(f"viewsdb: usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except ViewsError as exc:
        print(f"viewsdb: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_DATA


def main(argv=None):
    sys.exit(run(sys.argv[1:] if argv is None else argv))
