"""The ``.views`` text format.

Grammar::

    doc      := (stmt NL)*
    stmt     := "head" NAME
              | "lit" NAME "=" STRING
              | "link" NAME ":" ref "," ref attrlist? block?
              | "univ" NAME attrlist
    block    := "{" NL (substmt NL)* "}"
    substmt  := ("prop1" | "prop2") ":" ref "," ref attrlist? block?
    ref      := NAME | STRING | "_"
    attrlist := "[" (KEY "=" NUM)* "]"

``_`` is NULL, a STRING is a literal, ``#`` starts a comment.  Strings use
JSON escapes.  Link and sub-statement keys: cond1, cond2, slip1, slip2;
univ keys: depth, activ, alock.

Names are resolved in two passes: every ``head`` statement is executed
first (in document order, so headnodes take the lowest addresses), then
the remaining statements run in document order.
"""

import json
import re
from dataclasses import dataclass, field

from . import builder
from .database import ViewsDB, check_invariants
from .errors import CorruptStructureError, EncodingError, ParseError, ViewsError
from .model import EOC_WORD, NULL, ArrayId, Ref, RefKind, Scheme, decode_ref
from .slipnet import HeadUniversals, LinkUniversals, format_fixed, to_fixed

LINK_KEYS = ("cond1", "cond2", "slip1", "slip2")
UNIV_KEYS = ("depth", "activ", "alock")
KEYWORDS = ("head", "lit", "link", "univ", "prop1", "prop2")

_NAME = re.compile(r"\w[\w.\-]*\Z")
_NUM = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?\Z")
_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<word>[\w.+\-]+)
  | (?P<punct>[:,=\[\]{}])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text):
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            prefix = bytes(text)[:exc.start]
            line = prefix.count(b"\n") + 1
            column = exc.start - (prefix.rfind(b"\n") + 1) + 1
            raise ParseError("input is not valid UTF-8", line, column) from None
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        column = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, column)
        kind = m.lastgroup
        if kind == "nl":
            tokens.append(Token("nl", "\n", line, column))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, column))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# Document model

@dataclass
class RefExpr:
    kind: str  # "name", "string" or "null"
    value: str
    line: int
    column: int


@dataclass
class SubStmt:
    side: int
    edge: RefExpr
    dest: RefExpr
    attrs: dict
    subs: list
    line: int
    column: int


@dataclass
class Statement:
    kind: str  # head, lit, link, univ
    name: str
    line: int
    column: int
    value: str = None
    edge: RefExpr = None
    dest: RefExpr = None
    attrs: dict = field(default_factory=dict)
    subs: list = field(default_factory=list)


@dataclass
class ViewsTextDocument:
    statements: list


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def fail(self, message, tok=None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.column)

    def advance(self):
        tok = self.tok
        if tok.kind != "eof":
            self.i += 1
        return tok

    def expect_punct(self, ch):
        if self.tok.kind != "punct" or self.tok.text != ch:
            self.fail(f"expected {ch!r}, found {self.describe()}")
        return self.advance()

    def describe(self, tok=None):
        tok = tok or self.tok
        return {"nl": "end of line", "eof": "end of input"}.get(tok.kind, repr(tok.text))

    def expect_nl(self):
        if self.tok.kind == "eof":
            return
        if self.tok.kind != "nl":
            self.fail(f"expected end of line, found {self.describe()}")
        self.advance()

    def skip_nl(self):
        while self.tok.kind == "nl":
            self.advance()

    def name(self):
        tok = self.tok
        if tok.kind != "word" or not _NAME.match(tok.text) or tok.text == "_":
            self.fail(f"expected a name, found {self.describe()}")
        return self.advance().text

    def string(self):
        tok = self.tok
        if tok.kind != "string":
            self.fail(f"expected a string, found {self.describe()}")
        self.advance()
        try:
            value = json.loads(tok.text)
            value.encode("utf-8")
        except (ValueError, UnicodeEncodeError):
            self.fail("invalid string escape", tok)
        return value

    def ref(self):
        tok = self.tok
        if tok.kind == "string":
            return RefExpr("string", self.string(), tok.line, tok.column)
        if tok.kind == "word" and tok.text == "_":
            self.advance()
            return RefExpr("null", "_", tok.line, tok.column)
        return RefExpr("name", self.name(), tok.line, tok.column)

    def attrlist(self):
        self.expect_punct("[")
        attrs = {}
        while not (self.tok.kind == "punct" and self.tok.text == "]"):
            tok = self.tok
            if tok.kind != "word" or tok.text not in LINK_KEYS + UNIV_KEYS:
                self.fail(f"expected an attribute key, found {self.describe()}")
            self.advance()
            if tok.text in attrs:
                self.fail(f"duplicate attribute {tok.text!r}", tok)
            self.expect_punct("=")
            num = self.tok
            if num.kind != "word" or not _NUM.match(num.text):
                self.fail(f"expected a number, found {self.describe()}")
            self.advance()
            attrs[tok.text] = (float(num.text), tok)
        self.advance()
        return attrs

    def pair(self):
        self.expect_punct(":")
        edge = self.ref()
        self.expect_punct(",")
        dest = self.ref()
        attrs = {}
        if self.tok.kind == "punct" and self.tok.text == "[":
            attrs = self.attrlist()
        subs = []
        if self.tok.kind == "punct" and self.tok.text == "{":
            subs = self.block()
        return edge, dest, attrs, subs

    def block(self):
        self.expect_punct("{")
        if self.tok.kind != "nl":
            self.fail(f"expected end of line after '{{', found {self.describe()}")
        subs = []
        while True:
            self.skip_nl()
            tok = self.tok
            if tok.kind == "punct" and tok.text == "}":
                self.advance()
                return subs
            if tok.kind != "word" or tok.text not in ("prop1", "prop2"):
                self.fail(f"expected 'prop1', 'prop2' or '}}', found {self.describe()}")
            self.advance()
            edge, dest, attrs, nested = self.pair()
            subs.append(SubStmt(1 if tok.text == "prop1" else 2, edge, dest, attrs, nested,
                                tok.line, tok.column))
            if not (self.tok.kind == "punct" and self.tok.text == "}"):
                self.expect_nl()

    def statement(self):
        tok = self.tok
        if tok.kind != "word" or tok.text not in ("head", "lit", "link", "univ"):
            self.fail(f"expected a statement keyword, found {self.describe()}")
        self.advance()
        kw = tok.text
        name = self.name()
        st = Statement(kw, name, tok.line, tok.column)
        if kw == "lit":
            self.expect_punct("=")
            st.value = self.string()
        elif kw == "link":
            st.edge, st.dest, st.attrs, st.subs = self.pair()
        elif kw == "univ":
            st.attrs = self.attrlist()
        return st

    def document(self):
        statements = []
        while True:
            self.skip_nl()
            if self.tok.kind == "eof":
                return ViewsTextDocument(statements)
            statements.append(self.statement())
            self.expect_nl()


def parse_document(text):
    """Parse ``text`` (str or UTF-8 bytes) into a :class:`ViewsTextDocument`."""
    tokens = tokenize(text)
    try:
        return _Parser(tokens).document()
    except RecursionError:
        raise ParseError("blocks nested too deeply", 1, 1) from None


def _check_keys(attrs, allowed, what):
    for key, (_, tok) in attrs.items():
        if key not in allowed:
            raise ParseError(f"attribute {key!r} not allowed on {what}", tok.line, tok.column)


def _flag(attrs, key):
    if key not in attrs:
        return False
    value, tok = attrs[key]
    if value not in (0.0, 1.0):
        raise ParseError(f"{key} must be 0 or 1", tok.line, tok.column)
    return value == 1.0


def _link_universals(attrs):
    get = lambda k: attrs[k][0] if k in attrs else 0.0
    return (LinkUniversals(get("cond1"), _flag(attrs, "slip1")),
            LinkUniversals(get("cond2"), _flag(attrs, "slip2")))


def build(doc, scheme=Scheme.CNSM, superclusters=8, rows_per_supercluster=64):
    """Execute a parsed document against a fresh database."""
    db = ViewsDB(scheme, superclusters, rows_per_supercluster)
    symbols = {}
    for st in doc.statements:
        if st.kind in ("head", "lit"):
            if st.name in symbols:
                raise ParseError(f"name {st.name!r} defined twice", st.line, st.column)
            symbols[st.name] = st

    def at(node):
        return node.line, node.column

    def run(fn, node, *args):
        try:
            return fn(*args)
        except ParseError:
            raise
        except ViewsError as exc:
            raise ParseError(str(exc), *at(node)) from exc

    heads = {}
    for st in doc.statements:
        if st.kind == "head":
            heads[st.name] = run(builder.create_headnode, st, db)
            db.names[heads[st.name]] = st.name

    def resolve(ref):
        if ref.kind == "null":
            return NULL
        if ref.kind == "string":
            return db.literal(ref.value)
        target = symbols.get(ref.value)
        if target is None:
            raise ParseError(f"unresolved name {ref.value!r}", ref.line, ref.column)
        if target.kind == "lit":
            return db.literal(target.value)
        return Ref.addr(heads[ref.value])

    def owner(st):
        target = symbols.get(st.name)
        if target is None:
            raise ParseError(f"unresolved name {st.name!r}", st.line, st.column)
        if target.kind != "head":
            raise ParseError(f"{st.name!r} is a literal, not a headnode", st.line, st.column)
        return heads[st.name]

    def write_link_attrs(a, node):
        if node.attrs:
            _check_keys(node.attrs, LINK_KEYS, "link")
            edge_side, dest_side = run(_link_universals, node, node.attrs)
            for fld, u in (("misc1", edge_side), ("misc2", dest_side)):
                word = run(u.pack, node)
                if word:
                    run(builder.rewire, node, db, a, fld, word)

    def subs(parent, items):
        for sub in items:
            a = run(builder.add_subordinate, sub, db, parent, sub.side,
                    resolve(sub.edge), resolve(sub.dest))
            write_link_attrs(a, sub)
            subs(a, sub.subs)

    univ_done = set()
    for st in doc.statements:
        if st.kind == "lit":
            db.literal(st.value)
        elif st.kind == "link":
            h = owner(st)
            a = run(builder.add_link, st, db, h, resolve(st.edge), resolve(st.dest))
            write_link_attrs(a, st)
            subs(a, st.subs)
        elif st.kind == "univ":
            h = owner(st)
            if h in univ_done:
                raise ParseError(f"second univ statement for {st.name!r}", st.line, st.column)
            univ_done.add(h)
            _check_keys(st.attrs, UNIV_KEYS, "univ")
            get = lambda k: st.attrs[k][0] if k in st.attrs else 0.0
            u = HeadUniversals(get("depth"), get("activ"), _flag(st.attrs, "alock"))
            run(builder.rewire, st, db, h, "misc1", run(u.pack, st))
    return db


def loads(text, scheme=Scheme.CNSM, superclusters=8, rows_per_supercluster=64):
    """Parse and build in one step; the result carries the name table in ``db.names``."""
    return build(parse_document(text), scheme, superclusters, rows_per_supercluster)


def load(path, **kwargs):
    with open(path, "rb") as fh:
        return loads(fh.read(), **kwargs)


# Serialisation

def _num(raw):
    return format_fixed(raw)


def _link_attr_text(db, a):
    if not db.scheme.has(ArrayId.M1):
        return ""
    try:
        e = LinkUniversals.unpack(db.fabric.read(a, ArrayId.M1))
        d = LinkUniversals.unpack(db.fabric.read(a, ArrayId.M2))
    except EncodingError as exc:
        raise CorruptStructureError(f"row {a:#x}: misc words are not link universals ({exc})") from None
    parts = []
    if e.conductance:
        parts.append(f"cond1={_num(to_fixed(e.conductance))}")
    if d.conductance:
        parts.append(f"cond2={_num(to_fixed(d.conductance))}")
    if e.slip_lock:
        parts.append("slip1=1")
    if d.slip_lock:
        parts.append("slip2=1")
    return f" [{' '.join(parts)}]" if parts else ""


def serialize(db, names=None):
    """Canonical text: heads ascending, then univ lines, then links per chain."""
    problems = check_invariants(db)
    if problems:
        raise CorruptStructureError("; ".join(str(v) for v in problems))
    heads = db.headnodes()
    given = {**db.names, **(names or {})}
    label = {}
    used = set()
    for h in heads:
        name = given.get(h)
        if name is None or name in used or name == "_" or not _NAME.match(str(name)):
            name = f"h{h}"
            while name in used:
                name += "_"
        label[h] = str(name)
        used.add(label[h])
    f = db.fabric
    has_s = db.scheme.has(ArrayId.S1)

    def ref(word):
        kind, p = decode_ref(word)
        if kind is RefKind.NULL:
            return "_"
        if kind is RefKind.LITERAL:
            return json.dumps(db.literals.text(Ref(word)), ensure_ascii=False)
        return label[p]

    def chain(start):
        cur = start
        while True:
            yield cur
            word = f.read(cur, ArrayId.N2)
            if word == EOC_WORD:
                return
            cur = decode_ref(word)[1]

    lines = [f"head {label[h]}" for h in heads]
    if has_s:
        for h in heads:
            word = f.read(h, ArrayId.M2)
            if word:
                raise CorruptStructureError(f"headnode {h:#x} has a nonzero M2 word")
            word = f.read(h, ArrayId.M1)
            if not word:
                continue
            try:
                u = HeadUniversals.unpack(word)
            except EncodingError as exc:
                raise CorruptStructureError(f"headnode {h:#x}: {exc}") from None
            parts = []
            if u.conceptual_depth:
                parts.append(f"depth={_num(to_fixed(u.conceptual_depth))}")
            if u.activ:
                parts.append(f"activ={_num(to_fixed(u.activ))}")
            if u.activ_lock:
                parts.append("alock=1")
            lines.append(f"univ {label[h]} [{' '.join(parts)}]")

    def emit(row, prefix, indent):
        text = (f"{indent}{prefix}{ref(f.read(row, ArrayId.C1))}, {ref(f.read(row, ArrayId.C2))}"
                f"{_link_attr_text(db, row)}")
        children = []
        if has_s:
            for side, aid in ((1, ArrayId.S1), (2, ArrayId.S2)):
                word = f.read(row, aid)
                if word:
                    for r in chain(decode_ref(word)[1]):
                        children.append((r, f"prop{side}: "))
        if not children:
            lines.append(text)
            return
        lines.append(text + " {")
        for r, p in children:
            emit(r, p, indent + "  ")
        lines.append(indent + "}")

    for h in heads:
        for r in list(chain(h))[1:]:
            emit(r, f"link {label[h]}: ", "")
    return "".join(line + "\n" for line in lines)


def dump(db, path, names=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize(db, names))
