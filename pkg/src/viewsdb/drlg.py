"""Directed recursively labelled graphs (DRLGs) in plain Python form.

A DRLG has named vertices and an ordered list of edges ``(source, label,
dest)``.  Labels and destinations are vertex names, :class:`Literal` leaves
or ``None``.  Edges, and attachments themselves, can carry ordered
attachment lists on the label side and the destination side, nested to any
depth.
"""

import random
from dataclasses import dataclass, field

import networkx as nx


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass
class Attachment:
    label: object
    value: object
    edge_props: list = field(default_factory=list)
    dest_props: list = field(default_factory=list)


@dataclass
class Edge:
    source: object
    label: object
    dest: object
    edge_props: list = field(default_factory=list)
    dest_props: list = field(default_factory=list)


def _attachment(obj):
    if isinstance(obj, Attachment):
        return obj
    label, value, *rest = obj
    edge_props = rest[0] if len(rest) > 0 else ()
    dest_props = rest[1] if len(rest) > 1 else ()
    return Attachment(label, value, [_attachment(x) for x in edge_props],
                      [_attachment(x) for x in dest_props])


@dataclass
class DRLG:
    vertices: list = field(default_factory=list)
    edges: list = field(default_factory=list)

    def add_vertex(self, name):
        if name is None or isinstance(name, Literal):
            raise ValueError(f"{name!r} cannot be a vertex")
        if name not in self.vertices:
            self.vertices.append(name)
        return name

    def _touch(self, item):
        if item is not None and not isinstance(item, Literal):
            self.add_vertex(item)

    def _touch_all(self, atts):
        for att in atts:
            self._touch(att.label)
            self._touch(att.value)
            self._touch_all(att.edge_props)
            self._touch_all(att.dest_props)

    def add_edge(self, source, label, dest, edge_props=(), dest_props=()):
        """Append an edge; every vertex it mentions is added to ``vertices``."""
        e = Edge(source, label, dest, [_attachment(x) for x in edge_props],
                 [_attachment(x) for x in dest_props])
        self.add_vertex(source)
        self._touch(label)
        self._touch(dest)
        self._touch_all(e.edge_props)
        self._touch_all(e.dest_props)
        self.edges.append(e)
        return e

    def out_degree(self, v):
        return sum(1 for e in self.edges if e.source == v)

    def attachment_count(self):
        def count(atts):
            return sum(1 + count(a.edge_props) + count(a.dest_props) for a in atts)
        return sum(count(e.edge_props) + count(e.dest_props) for e in self.edges)


def required_rows(g):
    """Rows needed to store ``g``: headnodes + linknodes + sub-chain rows."""
    return len(g.vertices) + len(g.edges) + g.attachment_count()


def to_networkx(g):
    """Encode ``g`` as a node- and arc-labelled DiGraph.

    Edges and attachments become nodes of their own so labels, nesting and
    per-list order survive as arc roles.
    """
    G = nx.DiGraph()
    for v in g.vertices:
        G.add_node(("v", v), kind="vertex", text=None)
    counter = iter(range(10**9))

    def target(item):
        if item is None:
            return None
        if isinstance(item, Literal):
            node = ("lit", item.text)
            G.add_node(node, kind="literal", text=item.text)
            return node
        return ("v", item)

    def arc(u, w, role):
        if w is None:
            return
        if G.has_edge(u, w):
            G[u][w]["roles"] = tuple(sorted(G[u][w]["roles"] + (role,)))
        else:
            G.add_edge(u, w, roles=(role,))

    def link(owner, role, item):
        node = ("x", next(counter))
        G.add_node(node, kind="link", text=None)
        arc(owner, node, role)
        arc(node, target(item.label), "label")
        arc(node, target(item.dest if isinstance(item, Edge) else item.value), "dest")
        for i, att in enumerate(item.edge_props):
            link(node, ("p1", i), att)
        for i, att in enumerate(item.dest_props):
            link(node, ("p2", i), att)

    position = {}
    for e in g.edges:
        i = position.get(e.source, 0)
        position[e.source] = i + 1
        link(("v", e.source), ("out", i), e)
    return G


def isomorphic(g1, g2):
    """Exhaustive (VF2) labelled-graph isomorphism of two DRLGs, names ignored."""
    G1, G2 = to_networkx(g1), to_networkx(g2)
    if (G1.number_of_nodes(), G1.number_of_edges()) != (G2.number_of_nodes(), G2.number_of_edges()):
        return False
    return nx.is_isomorphic(
        G1, G2,
        node_match=lambda a, b: a["kind"] == b["kind"] and a["text"] == b["text"],
        edge_match=lambda a, b: a["roles"] == b["roles"],
    )


def random_drlg(rng=None, max_vertices=30, max_degree=8, max_nesting=4,
                literal_prob=0.2, attach_prob=0.3, null_prob=0.03, max_rows=512):
    """Random DRLG that fits in ``max_rows`` rows.

    Labels and destinations are drawn from the vertex pool or from a small
    set of literals; attachment nesting never exceeds ``max_nesting``.
    """
    rng = rng if isinstance(rng, random.Random) else random.Random(rng)
    n = rng.randint(0, max_vertices)
    g = DRLG()
    names = [f"v{i}" for i in range(n)]
    for name in names:
        g.add_vertex(name)
    if n == 0:
        return g
    budget = max_rows - n

    def pick():
        r = rng.random()
        if r < null_prob:
            return None
        if r < null_prob + literal_prob:
            return Literal(f"s{rng.randint(0, 9)}")
        return rng.choice(names)

    def attachments(depth):
        nonlocal budget
        out = []
        if depth > max_nesting:
            return out
        while budget > 0 and rng.random() < attach_prob / depth:
            budget -= 1
            out.append(Attachment(pick(), pick(), attachments(depth + 1), attachments(depth + 1)))
        return out

    for v in names:
        for _ in range(rng.randint(0, max_degree)):
            if budget <= 0:
                break
            budget -= 1
            g.add_edge(v, pick(), pick(), attachments(1), attachments(1))
    # Interleave sources so their rows are not allocated in contiguous runs.
    rng.shuffle(g.edges)
    return g
