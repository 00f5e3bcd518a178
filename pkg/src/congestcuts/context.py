"""Per-run bundle of tree structure, labels and sketch geometry."""

from __future__ import annotations

from dataclasses import dataclass, field

from .graphs import Graph
from .sketch import SeedPack, SketchConfig, WireFormat
from .tree import AncLabel, BfsTree, HeavyLight, all_anc_labels, bfs_tree, heavy_light


@dataclass
class GraphContext:
    g: Graph
    s: int
    t: BfsTree
    hl: HeavyLight
    labels: list[AncLabel]
    cfg: SketchConfig
    wf: WireFormat
    seeds: SeedPack
    tin: list[int] = field(default_factory=list)
    tout: list[int] = field(default_factory=list)
    paths: list[tuple[int, ...]] = field(default_factory=list)

    def is_anc(self, a: int, u: int) -> bool:
        """Is a an ancestor of u in T (including a == u)?"""
        return self.tin[a] <= self.tin[u] < self.tout[a]

    def child_toward(self, x: int, u: int) -> int:
        """The child of x on pi(x, u); u must be a strict descendant of x."""
        return self.paths[u][self.t.depth[x] + 1]

    def light_ancestors(self, v: int) -> list[int]:
        """LA(v), top-down: ancestors u such that the edge below u on
        pi(s, v) is light."""
        out = []
        path = self.paths[v]
        for i in range(len(path) - 1):
            if not self.hl.is_heavy[path[i + 1]]:
                out.append(path[i])
        return out

    def light_descendants(self, x: int) -> list[int]:
        """LD(x): vertices whose root path leaves x on a light edge."""
        out = []
        for c in self.t.children[x]:
            if not self.hl.is_heavy[c]:
                out.extend(self.t.subtree(c))
        return sorted(out)

    def independent(self, x: int, y: int) -> bool:
        return x != y and not self.is_anc(x, y) and not self.is_anc(y, x)


def build_context(g: Graph, master_seed: int, c: int = 8, root: int = 0) -> GraphContext:
    t = bfs_tree(g, root)
    hl = heavy_light(t)
    labels = all_anc_labels(t, hl)
    cfg = SketchConfig(g.n, c=c)
    wf = WireFormat(g.n, t.height(), cfg)
    seeds = SeedPack(master_seed)
    tin = [0] * g.n
    tout = [0] * g.n
    clock = 0
    stack = [(root, False)]
    while stack:
        v, done = stack.pop()
        if done:
            tout[v] = clock
            continue
        tin[v] = clock
        clock += 1
        stack.append((v, True))
        for cch in reversed(t.children[v]):
            stack.append((cch, False))
    tout = [max(to, tin[v] + 1) for v, to in enumerate(tout)]
    paths = [tuple(t.path_to_root(v)) for v in range(g.n)]
    return GraphContext(g, root, t, hl, labels, cfg, wf, seeds, tin, tout, paths)
