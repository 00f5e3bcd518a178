"""Concrete vertex programs for the literal simulator.

These are the small-message algorithms that run round by round: token
flooding, distributed BFS-tree construction, and the distributed twin of the
heavy-light decomposition (bottom-up sizes, then classification, then
top-down compressed paths).
"""

from __future__ import annotations

from .engine import VertexAPI, VertexProgram
from .tree import CompressedPath


class FloodProgram(VertexProgram):
    """Flood a token from a source; rounds used equal its eccentricity."""

    def __init__(self, v: int, source: int = 0):
        self.v = v
        self.source = source
        self.got = v == source

    def on_round(self, api: VertexAPI, messages):
        if api.round_no == 1 and self.v == self.source:
            for w in api.neighbors:
                api.send(w, "token")
            api.halt()
            return
        if any(m.payload == "token" for m in messages):
            self.got = True
            for w in api.neighbors:
                if all(m.sender != w for m in messages):
                    api.send(w, "token")
            api.halt()


class BfsProgram(VertexProgram):
    """Each vertex learns its BFS parent and depth from the root.

    Joins the tree on the first JOIN message; ties broken by smallest sender
    id, matching the centralized bfs_tree.
    """

    def __init__(self, v: int, root: int = 0):
        self.v = v
        self.root = root
        self.parent: int | None = None
        self.depth: int | None = 0 if v == root else None

    def on_round(self, api: VertexAPI, messages):
        if api.round_no == 1 and self.v == self.root:
            for w in api.neighbors:
                api.send(w, 0)
            api.halt()
            return
        if self.depth is None:
            joins = [m for m in messages if isinstance(m.payload, int)]
            if joins:
                best = min(joins, key=lambda m: m.sender)
                self.parent = best.sender
                self.depth = best.payload + 1
                for w in api.neighbors:
                    api.send(w, self.depth)
                api.halt()


class TokenPassProgram(VertexProgram):
    """Pass a token along a fixed path; dilation equals the path length."""

    def __init__(self, v: int, path: list[int]):
        self.v = v
        self.path = path
        self.done = False

    def init(self, api: VertexAPI):
        if self.v not in self.path:
            api.halt()

    def on_round(self, api: VertexAPI, messages):
        i = self.path.index(self.v)
        if api.round_no == 1 and i == 0:
            api.send(self.path[1], "tok")
            api.halt()
            return
        if any(m.payload == "tok" for m in messages):
            if i + 1 < len(self.path):
                api.send(self.path[i + 1], "tok")
            self.done = True
            api.halt()


class SentinelProgram(VertexProgram):
    """Records everything visible through the API; the locality test asserts
    nothing global leaks in."""

    def __init__(self, v: int):
        self.v = v
        self.seen_api_fields: list[str] = []
        self.seen_neighbors: list[int] = []

    def on_round(self, api: VertexAPI, messages):
        self.seen_api_fields = [a for a in dir(api) if not a.startswith("_")]
        self.seen_neighbors = list(api.neighbors)
        api.halt()


class HeavyLightProgram(VertexProgram):
    """Distributed heavy-light decomposition plus compressed-path labels.

    init data per vertex: (parent, children tuple, label_words).  Subtree
    sizes aggregate bottom-up; parents classify children (ties to the
    smallest id) and push classifications down; labels then extend top-down,
    each vertex deriving its own from its parent's label and its class.
    """

    def __init__(self, v: int):
        self.v = v
        self.size = 1
        self.pending = None
        self.is_heavy = False
        self.label: CompressedPath | None = None

    def _extend(self, parent_label: CompressedPath | None) -> CompressedPath:
        if parent_label is None:      # root is light by convention
            return CompressedPath((self.v,), (0,), self.v, 0)
        lights, gaps = list(parent_label.lights), list(parent_label.gaps)
        if self.is_heavy:
            gaps[-1] += 1
        else:
            lights.append(self.v)
            gaps.append(0)
        return CompressedPath(tuple(lights), tuple(gaps), self.v, parent_label.lead)

    def init(self, api: VertexAPI):
        self.parent, self.children, self.label_words = api.data
        self.pending = set(self.children)
        self.child_size: dict[int, int] = {}

    def on_round(self, api: VertexAPI, messages):
        for m in messages:
            kind, body = m.payload
            if kind == "size":
                self.pending.discard(m.sender)
                self.child_size[m.sender] = body
                self.size += body
            elif kind == "class":
                self.is_heavy = body
            elif kind == "label":
                self.label = self._extend(body)
                for c in self.children:
                    api.send(c, ("label", self.label), self.label_words)
                api.halt()
        if self.pending is not None and not self.pending:
            # subtree size known: classify children, report size upward
            heavy = None
            for c in sorted(self.children):
                if heavy is None or self.child_size[c] > self.child_size[heavy]:
                    heavy = c
            for c in self.children:
                api.send(c, ("class", c == heavy))
            if self.parent is not None:
                api.send(self.parent, ("size", self.size))
            else:
                self.is_heavy = False
                self.label = self._extend(None)
                for c in self.children:
                    api.send(c, ("label", self.label), self.label_words)
                api.halt()
            self.pending = None
