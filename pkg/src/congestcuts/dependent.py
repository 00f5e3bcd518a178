"""Dependent cut pairs: for every y, rebuild structure in G minus y.

Algorithm A_y glues the components of T minus y back together with the
recovered edge set E~(y) into a spanning tree T~, recomputes ancestry labels
and sketches with respect to it (using y as coordinator so no information
has to cross the possibly-huge punctured diameter), and lets every descendant
x of y decide locally whether {x, y} is a cut pair.  A_y touches only edges
incident to V(T_y); the engine asserts that footprint.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .boruvka import BoruvkaResult, local_boruvka
from .context import GraphContext
from .cut_vertex import PreprocState
from .engine import AlgoScope, CongestEngine
from .errors import ExtractionExhausted, NotSpanning
from .sketch import SketchSpace
from .tree import AncLabel, CompressedPath, compress_path, is_path_prefix


@dataclass(frozen=True)
class HybridAncLabel:
    """T~-ancestry label: T-prefix to the C_0 exit, bridge edge, T~-suffix.

    C_0 vertices reuse their plain T-label (prefix only), so nothing needs to
    be sent outside V(T_y).  For y = s there is no C_0 and labels are pure
    suffixes from the re-rooted tree root.
    """

    prefix: AncLabel | None
    bridge: tuple[int, int] | None        # (p_j, r_j)
    suffix: CompressedPath | None

    @property
    def vertex(self) -> int:
        if self.suffix is not None:
            return self.suffix.terminal
        return self.prefix.terminal


def is_ancestor_tt(a: HybridAncLabel, b: HybridAncLabel) -> bool:
    from .tree import is_ancestor
    if a.bridge is None and a.suffix is None:         # a in C_0
        if a.prefix is None:
            raise ValueError("empty label")
        if b.bridge is None and b.suffix is None:
            return is_ancestor(a.prefix, b.prefix)
        if b.prefix is None:                          # y = s form cannot mix
            return False
        return is_ancestor(a.prefix, b.prefix)        # b.prefix = anc_T(p_j)
    if a.prefix is None and b.prefix is None:         # y = s: one suffix system
        return b.suffix is not None and is_path_prefix(a.suffix, b.suffix)
    if b.bridge is None or b.suffix is None:
        return False                                  # component below C_0 only
    return a.bridge == b.bridge and is_path_prefix(a.suffix, b.suffix)


@dataclass
class ComponentTree:
    y: int
    comps: list[list[int]]                 # comp 0 is C_0 when y != s
    comp_of: dict[int, int]
    root_comp: int
    parent_comp: dict[int, int]
    bridge: dict[int, tuple[int, int]]     # comp -> (r_i inside, p_i in parent)
    order: list[int]                       # comp ids, root first (BFS)

    def subtree_comps(self, c: int) -> list[int]:
        out = [c]
        i = 0
        while i < len(out):
            out.extend(k for k in self.order if self.parent_comp.get(k) == out[i])
            i += 1
        return out


def build_component_tree(ctx: GraphContext, y: int,
                         span_edges: list[tuple[int, int]]) -> ComponentTree:
    """Step 0: purely local at y, from ancestry labels inside the E~ eids."""
    t = ctx.t
    comps: list[list[int]] = []
    comp_of: dict[int, int] = {}
    if y != ctx.s:
        inside = set(t.subtree(y))
        c0 = [v for v in range(ctx.g.n) if v not in inside]
        comps.append(c0)
    for c in t.children[y]:
        comps.append(t.subtree(c))
    for i, blk in enumerate(comps):
        for v in blk:
            comp_of[v] = i
    adj: dict[int, list[tuple[int, tuple[int, int]]]] = {i: [] for i in range(len(comps))}
    for (a, b) in span_edges:
        ca, cb = comp_of[a], comp_of[b]
        if ca == cb:
            raise NotSpanning(f"edge {(a, b)} internal to a component of T minus {y}")
        adj[ca].append((cb, (b, a)))      # (inside endpoint of cb, outside)
        adj[cb].append((ca, (a, b)))
    if len(span_edges) != len(comps) - 1:
        raise NotSpanning(f"E~({y}) has {len(span_edges)} edges for {len(comps)} components")
    if y != ctx.s:
        root = 0
    else:
        root = comp_of[min(t.children[y])]
    parent_comp: dict[int, int] = {}
    bridge: dict[int, tuple[int, int]] = {}
    order = [root]
    seen = {root}
    q = deque([root])
    while q:
        c = q.popleft()
        for (d, (r_in, p_out)) in adj[c]:
            if d not in seen:
                seen.add(d)
                parent_comp[d] = c
                bridge[d] = (r_in, p_out)
                order.append(d)
                q.append(d)
    if len(seen) != len(comps):
        raise NotSpanning(f"E~({y}) does not connect all components of T minus {y}")
    return ComponentTree(y, comps, comp_of, root, parent_comp, bridge, order)


class TTilde:
    """Simulated distributed state of T~ = (T minus y) + E~(y) for one y."""

    def __init__(self, ctx: GraphContext, y: int, ct: ComponentTree):
        self.ctx = ctx
        self.y = y
        self.ct = ct
        self.parent: dict[int, int | None] = {}
        self.children: dict[int, list[int]] = {}
        self.members: list[int] = []         # component vertices (not C_0)
        self.root_vertex: int | None = None  # for y = s
        self.size_td: dict[int, int] = {}
        self.is_heavy_td: dict[int, bool] = {}
        self.label: dict[int, HybridAncLabel] = {}
        self.coord_root: dict[int, int] = {}
        self.bfs_depth: dict[int, int] = {}      # within-component, from r_i
        self.tin: dict[int, int] = {}
        self.tout: dict[int, int] = {}

    # -- structure ------------------------------------------------------------

    def build_structure(self):
        ctx, ct, y = self.ctx, self.ct, self.y
        t = ctx.t
        member_comps = [c for c in ct.order
                        if not (y != ctx.s and c == 0)]
        for c in member_comps:
            self.members.extend(ct.comps[c])
        self.members.sort()
        in_c0 = (lambda v: ct.comp_of[v] == 0) if y != ctx.s else (lambda v: False)

        # within-component re-rooting: BFS from the bridge endpoint r_i
        for c in member_comps:
            if c == ct.root_comp and y == ctx.s:
                r = min(t.children[y])
                self.root_vertex = r
                self.parent[r] = None
            else:
                r, p = ct.bridge[c]
                self.parent[r] = p
            verts = set(ct.comps[c])
            start = r
            seen = {start}
            self.bfs_depth[start] = 0
            q = deque([start])
            while q:
                u = q.popleft()
                nbrs = list(t.children[u])
                if t.parent[u] is not None:
                    nbrs.append(t.parent[u])
                for w in sorted(nbrs):
                    if w in verts and w not in seen:
                        seen.add(w)
                        self.parent[w] = u
                        self.bfs_depth[w] = self.bfs_depth[u] + 1
                        q.append(w)
        for v in self.members:
            self.children[v] = []
        for v in self.members:
            p = self.parent[v]
            if p is not None and not in_c0(p):
                self.children[p].append(v)
        for v in self.members:
            self.children[v].sort()

    # -- sizes, classes, labels -------------------------------------------------

    def compute_sizes_and_classes(self):
        order = self._bottom_up_order()
        for v in order:
            self.size_td[v] = 1 + sum(self.size_td[c] for c in self.children[v])
        # classification: parent picks its max-size child, ties to smallest id
        for v in self.members:
            heavy = None
            for c in self.children[v]:
                if heavy is None or self.size_td[c] > self.size_td[heavy]:
                    heavy = c
            for c in self.children[v]:
                self.is_heavy_td[c] = (c == heavy)
        # coordinate roots (exits from C_0, or the global root when y = s)
        for v in self.members:
            p = self.parent[v]
            if p is None or p not in self.children:   # p in C_0 or v is root
                self.is_heavy_td[v] = False           # coordinate roots are light
        for v in self._top_down_order():
            p = self.parent[v]
            if p is None or p not in self.children:
                self.coord_root[v] = v
            else:
                self.coord_root[v] = self.coord_root[p]

    def _bottom_up_order(self) -> list[int]:
        return list(reversed(self._top_down_order()))

    def _top_down_order(self) -> list[int]:
        roots = [v for v in self.members
                 if self.parent[v] is None or self.parent[v] not in self.children]
        out = []
        q = deque(sorted(roots))
        while q:
            v = q.popleft()
            out.append(v)
            for c in self.children[v]:
                q.append(c)
        return out

    def td_path(self, v: int) -> list[int]:
        path = [v]
        while self.parent[path[-1]] is not None and path[-1] != self.coord_root[path[-1]]:
            path.append(self.parent[path[-1]])
        path.reverse()
        return path

    def compute_labels(self):
        ctx = self.ctx
        for v in self.members:
            r = self.coord_root[v]
            path = self.td_path(v)
            assert path[0] == r
            suffix = compress_path(path, lambda u: not self.is_heavy_td[u])
            if self.y == ctx.s:
                self.label[v] = HybridAncLabel(None, None, suffix)
            else:
                p = self.parent[r]
                self.label[v] = HybridAncLabel(ctx.labels[p], (p, r), suffix)
        if self.y != ctx.s:
            for v in self.ct.comps[0]:
                self.label[v] = HybridAncLabel(ctx.labels[v], None, None)

    def euler(self):
        clock = 0
        roots = sorted(v for v in self.members
                       if self.parent[v] is None or self.parent[v] not in self.children)
        # iterative DFS over the member forest (coordinate subtrees)
        stack = [(r, False) for r in reversed(roots)]
        while stack:
            v, done = stack.pop()
            if done:
                self.tout[v] = clock
                continue
            self.tin[v] = clock
            clock += 1
            stack.append((v, True))
            for c in reversed(self.children[v]):
                stack.append((c, False))

    def in_subtree(self, a: int, u: int) -> bool:
        """Is u in the T~-subtree of a?  Both must be member vertices."""
        return self.tin[a] <= self.tin.get(u, -1) < self.tout[a]


@dataclass
class DependentOutcome:
    pairs: set[tuple[int, int]]
    per_y_boruvka: dict[tuple[int, int], BoruvkaResult] = field(default_factory=dict)
    states: dict[int, TTilde] = field(default_factory=dict)
    retries: int = 0
    retry_log: list[str] = field(default_factory=list)


def footprint_of_subtree(ctx: GraphContext, y: int) -> set[tuple[int, int]]:
    inside = set(ctx.t.subtree(y))
    return {e for e in ctx.g.edges if e[0] in inside or e[1] in inside}


def run_ay(ctx: GraphContext, engine: CongestEngine, pre: PreprocState,
           span_edges: dict[int, list[tuple[int, int]]], y: int,
           collect: DependentOutcome, seed_salt: str = "") -> None:
    """One A_y: steps 0-4, charged under its own algo id and footprint."""
    t, wf = ctx.t, ctx.wf
    A = engine.algo(f"dep:{y}", footprint=footprint_of_subtree(ctx, y))
    if not t.children[y]:
        return                                     # leaf: nothing below y
    ct = build_component_tree(ctx, y, span_edges[y])
    td = TTilde(ctx, y, ct)
    td.build_structure()
    td.compute_sizes_and_classes()
    td.compute_labels()
    td.euler()
    collect.states[y] = td

    eid_w = wf.words(wf.eid_bits)
    lab_w = wf.words(wf.hybrid_anc_bits)
    sub_heights = {c: _rerooted_height(td, ct, c) for c in ct.order
                   if not (y != ctx.s and c == 0)}
    maxh = max(sub_heights.values(), default=0)

    # Step 1: bridge eids down the subtrees, then BFS from each r_i
    rs = []
    for c, (r, p) in ct.bridge.items():
        A.edge_send(y, _child_of(ctx, y, c), eid_w, advance=False)
    A.advance(1)
    for c in t.children[y]:
        rs.append(A.broadcast(t, eid_w, root=c, advance=False))
    A.advance(max(rs, default=0))
    A.advance(maxh)                                # parallel in-component BFS
    for v in td.members:
        p = td.parent[v]
        if p is not None:
            A.charge(min(v, p), max(v, p), 1)

    # Step 2: sizes (A), suffix paths (B), label assembly at y (C)
    for c in t.children[y]:
        A.broadcast(t, 1, root=c, advance=False)   # T~-subtree size of r_i
    A.advance(1 + maxh)                            # y -> y_i -> down
    for c, (r, p) in ct.bridge.items():
        A.edge_send(r, p, 1, advance=False)
    A.advance(1)
    A.advance(maxh)                                # alpha-sum, re-rooted trees
    for v in td.members:
        p = td.parent[v]
        if p is not None:
            A.charge(min(v, p), max(v, p), 2)      # size up, class down
    A.advance(2)
    A.advance(maxh)                                # Step B top-down suffixes
    for v in td.members:
        p = td.parent[v]
        if p is not None:
            A.charge(min(v, p), max(v, p), lab_w)
    A.advance(2 * maxh + 2)                        # Step C: pi_j up to y, labels down
    for v in td.members:
        p = td.parent[v]
        if p is not None:
            A.charge(min(v, p), max(v, p), 2 * lab_w)

    # Step 3: sketches w.r.t. G~ = G minus y and T~
    seeds_y = ctx.seeds.derive(f"dep{seed_salt}:{y}")
    members = set(td.members)
    edges_y = [e for e in ctx.g.edges
               if y not in e and (e[0] in members or e[1] in members)]
    space = SketchSpace(ctx.g.n, edges_y, seeds_y, ctx.cfg,
                        graph_tag=f"G-minus:{y}", tree_tag=f"T~:{y}")
    sk_w = wf.sketch_words(ctx.cfg.total_units, "hybrid")
    for (a, b) in edges_y:
        A.charge(a, b, lab_w * ((a in members) + (b in members)))
    A.advance(1)                                   # anc_T~ neighbor exchange
    for c in t.children[y]:
        A.broadcast(t, sk_w, root=c, advance=False)
    A.advance(maxh + 2)                            # aggregate comp sketches to y
    for c in t.children[y]:
        A.edge_send(y, c, sk_w, advance=False)
    A.advance(1 + maxh)                            # r_i subtree sketches down
    for c, (r, p) in ct.bridge.items():
        A.edge_send(r, p, sk_w, advance=False)
    A.advance(1)
    A.advance(maxh)                                # beta aggregation
    for v in td.members:
        p = td.parent[v]
        if p is not None:
            A.charge(min(v, p), max(v, p), 2 * sk_w)

    subtree_rows = _td_subtree_rows_factory(td, space)

    # Step 4: local Boruvka in G minus {x, y} at every descendant x
    for x in sorted(td.members):
        res = _decide_dependent(ctx, td, space, subtree_rows, x)
        collect.per_y_boruvka[(x, y)] = res
        if res.num_parts > 1:
            collect.pairs.add((min(x, y), max(x, y)))


def _child_of(ctx: GraphContext, y: int, comp: int) -> int:
    """The T-child of y whose subtree is component `comp`."""
    offset = 1 if y != ctx.s else 0
    return ctx.t.children[y][comp - offset]


def _rerooted_height(td: TTilde, ct: ComponentTree, c: int) -> int:
    return max((td.bfs_depth[v] for v in ct.comps[c]), default=0)


def _td_subtree_rows_factory(td: TTilde, space: SketchSpace):
    cache: dict[int, dict[int, np.ndarray]] = {}

    def subtree_rows(epoch: int) -> dict[int, np.ndarray]:
        if epoch not in cache:
            R = space.rows(epoch)
            agg = {v: R[v].copy() for v in td.members}
            for v in td._bottom_up_order():
                p = td.parent[v]
                if p is not None and p in agg:
                    agg[p] ^= agg[v]
            cache[epoch] = agg
        return cache[epoch]

    return subtree_rows


def _decide_dependent(ctx: GraphContext, td: TTilde, space: SketchSpace,
                      subtree_rows, x: int) -> BoruvkaResult:
    kids = td.children[x]
    blocks = list(kids)
    has_rest = not (td.root_vertex == x)
    if has_rest:
        blocks.append(None)                        # rest of V minus {x, y}
    if len(blocks) <= 1:
        return BoruvkaResult([list(range(len(blocks)))], [], 0, [])
    rest_idx = len(blocks) - 1 if has_rest else None

    def classify(u: int) -> int:
        for i, c in enumerate(kids):
            if u in td.tin and td.in_subtree(c, u):
                return i
        return rest_idx

    groups: dict[int, list[tuple[int, int]]] = {i: [] for i in range(len(blocks))}
    for w in ctx.g.adj[x]:
        if w != td.y:
            groups[classify(w)].append((x, w))

    cache: dict[tuple[int, int], np.ndarray] = {}

    def block_rows(b: int, epoch: int) -> np.ndarray:
        key = (b, epoch)
        if key not in cache:
            rows = subtree_rows(epoch)
            base = rows[kids[b]] if b < len(kids) else rows[x]
            cache[key] = base ^ space.xor_contributions(groups[b], epoch)
        return cache[key]

    return local_boruvka(len(blocks), block_rows, classify, space.decode_unit,
                         ctx.cfg.epochs, what=f"dep x={x} y={td.y}")


def detect_dependent_pairs(ctx: GraphContext, engine: CongestEngine,
                           pre: PreprocState,
                           span_edges: dict[int, list[tuple[int, int]]],
                           max_retries: int = 3) -> DependentOutcome:
    """All A_y, composed sequentially (deterministic vertex-id order); the
    detected pairs are convergecast to the root under their own algo id."""
    collect = DependentOutcome(set())
    for attempt in range(max_retries + 1):
        salt = "" if attempt == 0 else f":retry{attempt}"
        try:
            for y in range(ctx.g.n):
                run_ay(ctx, engine, pre, span_edges, y, collect, seed_salt=salt)
            break
        except ExtractionExhausted as exc:
            collect.retry_log.append(f"attempt {attempt}: {exc}")
            collect.retries = attempt + 1
            collect.pairs.clear()
            collect.per_y_boruvka.clear()
            collect.states.clear()
            if attempt == max_retries:
                raise
    A = engine.algo("dep:report")
    A.convergecast(ctx.t, 1 + len(collect.pairs))
    return collect
