"""Independent cut pairs: connectivity trees, sensitivity, pair algorithms.

For a vertex x, the connectivity tree records, for every component C of the
graph induced on x's strict descendants, one escape path from the root that
avoids x.  Potential independent cut-mates of x all sit on those paths.  The
pair machinery then splits into three cases: light pairs and mutual heavy
pairs run a joint two-coordinator Boruvka over a dedicated channel, touching
only channel edges and edges incident to the sensitive light descendants;
the remaining heavy pairs are decided by local computation from aggregated
punctured sketches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boruvka import local_boruvka
from .context import GraphContext
from .cut_vertex import PreprocState
from .engine import AlgoScope, CongestEngine
from .errors import ExtractionExhausted, FootprintViolation
from .sketch import SketchConfig, SketchSpace
from .tree import compress_path


@dataclass
class ConnectivityTree:
    """Escape paths of the components of G[V_x]: for each component C (keyed
    by its component id, the largest T-child of x inside it), the path
    pi(s, u_C) + (u_C, v_C) with v_C in C and u_C outside T_x."""

    x: int
    children_of: dict[int, list[int]]      # comp id -> T-children of x in it
    members: dict[int, list[int]]          # comp id -> vertices
    path: dict[int, tuple[int, ...]]       # comp id -> pi_x(s, C) vertex list
    uc: dict[int, int]
    vc: dict[int, int]
    heavy_comp: int | None                 # comp id of H_x (None for leaves)

    def comp_ids(self) -> list[int]:
        return sorted(self.children_of)


@dataclass
class IndependentOutcome:
    pairs: dict[tuple[int, int], str]      # (x, y) -> case tag
    lds_load: dict[int, int] = field(default_factory=dict)
    light_channel_edge_load: dict[tuple[int, int], int] = field(default_factory=dict)
    mutual_channel_edge_load: dict[tuple[int, int], int] = field(default_factory=dict)
    nonmutual_miss_log: list[tuple[int, int]] = field(default_factory=list)
    ap_retries: list[tuple[int, int, int]] = field(default_factory=list)
    invariant_checks: int = 0


class IndependentStage:
    """Shared prestep state plus the per-pair algorithms."""

    ALGO_DEPTH = "indep:depth"
    ALGO_TREES = "indep:trees"
    ALGO_DIST = "indep:dist"
    ALGO_LCA = "indep:lca"
    ALGO_NM = "indep:nm"
    ALGO_REPORT = "indep:report"

    def __init__(self, ctx: GraphContext, engine: CongestEngine, pre: PreprocState,
                 assert_invariants_for: int = 0):
        self.ctx = ctx
        self.engine = engine
        self.pre = pre
        self.out = IndependentOutcome({})
        self.assert_budget = assert_invariants_for
        # filled by the steps below
        self.cmpid: dict[int, dict[int, int]] = {}      # x -> child -> comp id
        self.comp_of_vertex: dict[int, dict[int, int]] = {}  # x -> u -> comp id
        self.that: dict[int, ConnectivityTree] = {}
        self.r_of: dict[int, int | None] = {}
        self.light_mates: dict[int, set[int]] = {}
        self._nm_space: SketchSpace | None = None
        self._nm_subtree: dict[int, np.ndarray] = {}
        self._smatrix_agg: dict[int, dict[tuple[int, int], np.ndarray]] = {}

    # -- Step 1: connectivity inside G[V_x], all x at once --------------------

    def component_ids_all_depths(self):
        ctx = self.ctx
        t, wf = ctx.t, ctx.wf
        A = self.engine.algo(self.ALGO_DEPTH)
        D = t.height()
        # every vertex learns its root path and trades it with its neighbors
        A.to_parent(t, 0)
        for v in range(ctx.g.n):
            p = t.parent[v]
            if p is not None:
                A.charge(v, p, wf.words((t.depth[v] + 1) * wf.id_bits))
        A.advance(D)
        A.neighbor_exchange(wf.words((D + 2) * wf.id_bits))
        A.broadcast(t, wf.words(192))                    # depth-family seed

        seeds_d = ctx.seeds.derive("depth")
        from .tree import edge_depth
        edge_by_depth: dict[int, list[tuple[int, int]]] = {d: [] for d in range(D + 1)}
        for e in ctx.g.edges:
            edge_by_depth[edge_depth(t, e)].append(e)
        # spaces for "depth >= d" universes, built lazily per depth
        spaces: dict[int, SketchSpace] = {}

        def space_at(d: int) -> SketchSpace:
            if d not in spaces:
                edges = [e for dd in range(d, D + 1) for e in edge_by_depth[dd]]
                spaces[d] = SketchSpace(ctx.g.n, edges, seeds_d, ctx.cfg,
                                        graph_tag=f"G:depth>={d}")
            return spaces[d]

        subtree_cache: dict[tuple[int, int], np.ndarray] = {}

        def subtree_rows(d: int, epoch: int) -> np.ndarray:
            key = (d, epoch)
            if key not in subtree_cache:
                agg = space_at(d).rows(epoch).copy()
                for v in reversed(t.order):
                    p = t.parent[v]
                    if p is not None:
                        agg[p] ^= agg[v]
                subtree_cache[key] = agg
            return subtree_cache[key]

        sk_w = wf.sketch_words(ctx.cfg.total_units, "eid")
        A.pipelined_multi_aggregate_cost(t, D + 1, sk_w)

        # one depth at a time, dropping finished tensors to bound memory
        for x in sorted(range(ctx.g.n), key=lambda v: t.depth[v]):
            d = t.depth[x]
            for dd in [k for (k, _) in subtree_cache if k < d]:
                spaces.pop(dd, None)
            for key in [k for k in subtree_cache if k[0] < d]:
                subtree_cache.pop(key)
            self._components_at(x, space_at(d), subtree_rows)

        # items 2 and 3: component ids of all ancestors, downcast + exchanged
        per_anc_w = wf.words((D + 1) * wf.id_bits)
        for v in range(ctx.g.n):
            p = t.parent[v]
            if p is not None:
                A.charge(v, p, per_anc_w)
        A.advance(D + 1)
        A.neighbor_exchange(per_anc_w)
        self.comp_of_vertex = {}
        for x in range(ctx.g.n):
            table = {}
            for c, cid in self.cmpid[x].items():
                for u in t.subtree(c):
                    table[u] = cid
            self.comp_of_vertex[x] = table

    def _components_at(self, x: int, space: SketchSpace, subtree_rows):
        ctx = self.ctx
        t = ctx.t
        kids = t.children[x]
        self.cmpid[x] = {}
        if not kids:
            return
        d = t.depth[x]
        groups: dict[int, list[tuple[int, int]]] = {i: [] for i in range(len(kids))}
        for w in ctx.g.adj[x]:
            if ctx.is_anc(x, w) and w != x:
                i = kids.index(ctx.child_toward(x, w))
                groups[i].append((x, w))

        cache: dict[tuple[int, int], np.ndarray] = {}

        def block_rows(b: int, epoch: int) -> np.ndarray:
            key = (b, epoch)
            if key not in cache:
                base = subtree_rows(d, epoch)[kids[b]]
                cache[key] = base ^ space.xor_contributions(groups[b], epoch)
            return cache[key]

        def classify(u: int):
            if u == x or not ctx.is_anc(x, u):
                return None                   # reject: outside G[V_x]
            return kids.index(ctx.child_toward(x, u))

        res = local_boruvka(len(kids), block_rows, classify, space.decode_unit,
                            ctx.cfg.epochs, what=f"G[V_{x}]")
        for part in res.parts:
            cid = max(kids[b] for b in part)
            for b in part:
                self.cmpid[x][kids[b]] = cid

    # -- Step 2: connectivity trees via path sketches --------------------------

    def connectivity_trees(self, max_retries: int = 3):
        ctx = self.ctx
        t, wf = ctx.t, ctx.wf
        A = self.engine.algo(self.ALGO_TREES)
        A.broadcast(t, wf.words(192))
        sk_w = wf.sketch_words(ctx.cfg.units_per_epoch, "path")
        A.convergecast(t, sk_w)
        A.to_parent(t, sk_w)
        for attempt in range(max_retries + 1):
            salt = "path" if attempt == 0 else f"path:retry{attempt}"
            seeds_p = ctx.seeds.derive(salt)
            space = SketchSpace(ctx.g.n, ctx.g.edges, seeds_p, ctx.cfg,
                                graph_tag="G", tree_tag="T")
            agg = space.rows(0).copy()
            for v in reversed(t.order):
                p = t.parent[v]
                if p is not None:
                    agg[p] ^= agg[v]
            try:
                for x in range(ctx.g.n):
                    if x == ctx.s:
                        continue          # the root has no independent mates
                    self.that[x] = self._tree_at(x, space, agg)
                return
            except ExtractionExhausted as exc:
                self.out.ap_retries.append((-1, -1, attempt))
                if attempt == max_retries:
                    raise

    def _tree_at(self, x: int, space: SketchSpace, agg: np.ndarray) -> ConnectivityTree:
        ctx = self.ctx
        t = ctx.t
        kids = t.children[x]
        by_comp: dict[int, list[int]] = {}
        for c in kids:
            by_comp.setdefault(self.cmpid[x][c], []).append(c)
        members = {cid: sorted(v for c in cs for v in t.subtree(c))
                   for cid, cs in by_comp.items()}
        path: dict[int, tuple[int, ...]] = {}
        uc: dict[int, int] = {}
        vc: dict[int, int] = {}
        for cid, cs in sorted(by_comp.items()):
            rows = None
            cancel = [(x, w) for w in ctx.g.adj[x]
                      if ctx.is_anc(x, w) and w != x
                      and self.cmpid[x][ctx.child_toward(x, w)] == cid]
            for c in cs:
                rows = agg[c].copy() if rows is None else rows ^ agg[c]
            rows ^= space.xor_contributions(cancel, 0)
            got = None
            for i in range(rows.shape[0]):
                cand = space.decode_unit(rows[i])
                if cand is None:
                    continue
                a, b = cand
                a_in = ctx.is_anc(x, a) and a != x
                b_in = ctx.is_anc(x, b) and b != x
                if a_in == b_in:
                    continue                    # false decode
                got = (b, a) if a_in else (a, b)   # (u_C outside, v_C inside)
                break
            if got is None:
                raise ExtractionExhausted(f"no escape edge for component {cid} of {x}")
            u_out, v_in = got
            assert not ctx.is_anc(x, u_out), "escape edge must leave the subtree"
            path[cid] = ctx.paths[u_out] + (v_in,)
            uc[cid], vc[cid] = u_out, v_in
        heavy_comp = None
        hch = ctx.hl.heavy_child[x]
        if hch is not None:
            heavy_comp = self.cmpid[x][hch]
        return ConnectivityTree(x, by_comp, members, path, uc, vc, heavy_comp)

    # -- Step 3: path knowledge distribution -----------------------------------

    def distribute_component_paths(self):
        ctx = self.ctx
        t, wf = ctx.t, ctx.wf
        A = self.engine.algo(self.ALGO_DIST)
        D = t.height()
        full_w = wf.words((D + 3) * wf.id_bits)
        comp_w = wf.words(wf.anc_bits + 2 * wf.id_bits)
        # every tree edge carries compressed entries for all ancestors and
        # full paths only for the light ones
        for v in range(ctx.g.n):
            p = t.parent[v]
            if p is not None:
                lights = len(ctx.light_ancestors(v))
                A.charge(v, p, lights * full_w + (t.depth[v]) * comp_w)
        A.advance(D + 1)
        for (a, b) in ctx.g.edges:
            la, lb = len(ctx.light_ancestors(a)), len(ctx.light_ancestors(b))
            A.charge(a, b, (la + lb) * full_w + (t.depth[a] + t.depth[b]) * comp_w)
        A.advance(1)

    def lds(self, x: int, y: int) -> list[int]:
        """Light descendants of x inside y-sensitive components."""
        out = []
        ct = self.that.get(x)
        if ct is None:
            return out
        for cid, cs in ct.children_of.items():
            if y not in ct.path[cid]:
                continue
            for c in cs:
                if not self.ctx.hl.is_heavy[c]:
                    out.extend(self.ctx.t.subtree(c))
        return sorted(out)

    # -- Step 4: sensitivity (Lemma 4.7 + the channel closure) ----------------

    def sens_algos(self):
        """Charge the L_x / H_x uplifts; knowledge itself is in `that`."""
        ctx = self.ctx
        t, wf = ctx.t, ctx.wf
        D = t.height()
        bundle_w = wf.words((D + 1) * (wf.anc_bits + 3 * wf.id_bits))
        light_w = wf.words((int(np.log2(max(ctx.g.n, 2))) + 1)
                           * (wf.anc_bits + 3 * wf.id_bits))
        for x in range(ctx.g.n):
            ct = self.that.get(x)
            if ct is None or not ct.children_of:
                continue
            ld = set(ctx.light_descendants(x))
            lx = self.engine.algo(
                f"sens:L:{x}",
                footprint=[e for e in ctx.g.edges if e[0] in ld or e[1] in ld])
            hx = self.engine.algo(
                f"sens:H:{x}",
                footprint=[e for e in ctx.g.edges
                           if e[0] in set(t.subtree(x)) or e[1] in set(t.subtree(x))])
            rs = []
            for cid in ct.comp_ids():
                v_c = ct.vc[cid]
                seg = ctx.paths[v_c][t.depth[x]:]
                if cid == ct.heavy_comp:
                    rs.append(hx.path_send(list(reversed(seg)), light_w, advance=False))
                    hx.advance(rs[-1])
                else:
                    r = lx.path_send(list(reversed(seg)), bundle_w, advance=False)
                    rs.append(r)
            if rs:
                lx.advance(max(rs))

    def classify_sensitivity(self, x: int, y: int, via_channel: bool = False):
        """non / pseudo / fully for each component of C_x against mate y.

        Without a channel the heavy component stays unresolved when the edge
        below y on its path is (y, y_h); pair algorithms close that gap by
        exchanging the heavy-path label over the channel (charged there).
        """
        ctx = self.ctx
        ct = self.that.get(x)
        table: dict[int, str] = {}
        if ct is None:
            return table
        for cid in ct.comp_ids():
            pth = ct.path[cid]
            if y not in pth or y == ct.vc[cid]:
                table[cid] = "non"
                continue
            if y == ct.uc[cid]:
                table[cid] = "fully"
                continue
            nxt = pth[pth.index(y) + 1]
            if nxt == ctx.hl.heavy_child[y] and cid == ct.heavy_comp and not via_channel:
                table[cid] = "unknown"
                continue
            # x is fully sensitive iff it lies on the escape path of the
            # component of y' under y
            ypath = self.comp_path(y, nxt)
            table[cid] = "fully" if x in ypath else "pseudo"
        return table

    def comp_path(self, y: int, child_side: int) -> tuple[int, ...]:
        cid = self.comp_of_vertex[y].get(child_side)
        ct = self.that.get(y)
        if ct is None or cid is None or cid not in ct.path:
            return ()
        return ct.path[cid]

    # -- light / heavy pair classification -------------------------------------

    def ordered_light(self, x: int, y: int) -> tuple[bool, int | None]:
        """Is <x, y> an ordered light pair?  Returns (flag, chosen comp id).

        Equivalent form: some fully-y-sensitive component whose escape path
        does not use the heavy edge below y.
        """
        ctx = self.ctx
        ct = self.that.get(x)
        if ct is None or not ctx.independent(x, y):
            return False, None
        best = None
        table = self.classify_sensitivity(x, y)
        for cid in ct.comp_ids():
            if table.get(cid) != "fully":
                continue
            pth = ct.path[cid]
            if y == ct.uc[cid]:
                qualifies = True
            else:
                nxt = pth[pth.index(y) + 1]
                qualifies = nxt != ctx.hl.heavy_child[y]
            if qualifies and (best is None or cid < best):
                best = cid
        return best is not None, best

    def light_pairs_and_channels(self):
        ctx = self.ctx
        wf = ctx.wf
        self.light_mates = {x: set() for x in range(ctx.g.n)}
        chans: dict[tuple[int, int], list[int]] = {}
        load: dict[tuple[int, int], int] = {}
        A = self.engine.algo("chan:light")
        rs = []
        for x in range(ctx.g.n):
            ct = self.that.get(x)
            if ct is None:
                continue
            cands = {v for cid in ct.comp_ids() for v in ct.path[cid][:-1]}
            for y in sorted(cands):
                ok, cid = self.ordered_light(x, y)
                if not ok:
                    continue
                self.light_mates[x].add(y)
                chan = self._channel(x, ct.vc[cid], ct.uc[cid], y)
                chans[(x, y)] = chan
                for a, b in zip(chan, chan[1:]):
                    e = (a, b) if a < b else (b, a)
                    load[e] = load.get(e, 0) + 1
                rs.append(A.path_send(chan, wf.words(5 * wf.anc_bits), advance=False))
        A.advance(max(rs, default=0))
        self.out.light_channel_edge_load = load
        self._light_channels = chans
        return chans

    def _channel(self, x: int, v_c: int, u_c: int, y: int) -> list[int]:
        ctx = self.ctx
        down = list(ctx.paths[v_c][ctx.t.depth[x]:])        # x .. v_C
        up = list(reversed(ctx.paths[u_c][ctx.t.depth[y]:]))  # u_C .. y
        return down + up

    # -- mutual machinery -------------------------------------------------------

    def mutual_info(self):
        ctx = self.ctx
        t, wf = ctx.t, ctx.wf
        A = self.engine.algo(self.ALGO_LCA)
        D = t.height()
        A.pipelined_multi_aggregate_cost(t, D + 1, wf.words(wf.anc_bits))
        A.to_parent(t, wf.words(wf.anc_bits) * (D + 1))
        self.r_of = {}
        for x in range(ctx.g.n):
            self.r_of[x] = self._r_of(x)
        # I_y dissemination: neighbors exchange, downcast, path-sketch rerun
        nm_w = wf.sketch_words(self._nm_cfg().units_per_epoch, "eid")
        iy_w = wf.words(2 * wf.anc_bits + 2 * wf.id_bits) + nm_w
        A.neighbor_exchange(iy_w)
        for v in range(ctx.g.n):
            p = t.parent[v]
            if p is not None:
                A.charge(v, p, iy_w * (t.depth[v] + 1))
        A.advance(D + 1)
        sk_w = wf.sketch_words(ctx.cfg.units_per_epoch, "path",
                               extra_payload_bits=(D + 1) * 8 * iy_w)
        A.convergecast(t, sk_w)
        A.to_parent(t, sk_w)

    def _r_of(self, x: int) -> int | None:
        ctx = self.ctx
        ct = self.that.get(x)
        if ct is None or ct.heavy_comp is None:
            return None
        hm = set(ct.members[ct.heavy_comp])
        outside = sorted({u for w in hm for u in ctx.g.adj[w]
                          if not (ctx.is_anc(x, u) and u != x) and u != x})
        if not outside:
            return None
        r = outside[0]
        for u in outside[1:]:
            r = self._lca(r, u)
        assert r in ctx.paths[ct.uc[ct.heavy_comp]], "r(x) must sit on the escape path"
        return r

    def _lca(self, a: int, b: int) -> int:
        pa, pb = self.ctx.paths[a], self.ctx.paths[b]
        out = pa[0]
        for u, v in zip(pa, pb):
            if u != v:
                break
            out = u
        return out

    def mutual_pairs(self) -> list[tuple[int, int]]:
        ctx = self.ctx
        out = []
        for x in range(ctx.g.n):
            y = self.r_of.get(x)
            if y is None or y <= x:
                continue
            if self.r_of.get(y) != x or not ctx.independent(x, y):
                continue
            if y in self.light_mates.get(x, ()) or x in self.light_mates.get(y, ()):
                continue                      # light pairs are handled there
            out.append((x, y))
        # mutual pairs form a partial matching by construction (r is a map)
        seen: set[int] = set()
        for (x, y) in out:
            assert x not in seen and y not in seen
            seen.update((x, y))
        return out

    def mutual_channels(self, pairs) -> dict[tuple[int, int], list[int]]:
        ctx = self.ctx
        wf = ctx.wf
        A = self.engine.algo("chan:mutual")
        chans = {}
        load: dict[tuple[int, int], int] = {}
        rs = []
        for (x, y) in pairs:
            ct = self.that[x]
            hc = ct.heavy_comp
            chan = self._channel(x, ct.vc[hc], ct.uc[hc], y)
            chans[(x, y)] = chan
            for a, b in zip(chan, chan[1:]):
                e = (a, b) if a < b else (b, a)
                load[e] = load.get(e, 0) + 1
            rs.append(A.path_send(chan, wf.words(5 * wf.anc_bits), advance=False))
        A.advance(max(rs, default=0))
        self.out.mutual_channel_edge_load = load
        self._mutual_channels = chans
        return chans

    # -- the joint pair algorithm A^P ------------------------------------------

    def pair_connectivity(self, x: int, y: int, channel: list[int],
                          assert_invariants: bool = False,
                          max_retries: int = 3) -> bool:
        for attempt in range(max_retries + 1):
            try:
                return self._pair_connectivity_once(x, y, channel, attempt,
                                                    assert_invariants)
            except ExtractionExhausted:
                self.out.ap_retries.append((x, y, attempt + 1))
                if attempt == max_retries:
                    raise
        raise AssertionError("unreachable")

    def _pair_connectivity_once(self, x: int, y: int, channel: list[int],
                                attempt: int, assert_invariants: bool) -> bool:
        ctx = self.ctx
        t, wf = ctx.t, ctx.wf
        lds_x = set(self.lds(x, y))
        lds_y = set(self.lds(y, x))
        lds_all = lds_x | lds_y
        foot = {e for e in ctx.g.edges if e[0] in lds_all or e[1] in lds_all}
        foot.update((min(a, b), max(a, b)) for a, b in zip(channel, channel[1:]))
        A = self.engine.algo(f"AP:{x}:{y}", footprint=foot)
        chan_len = len(channel) - 1
        sk_w = wf.sketch_words(ctx.cfg.total_units, "eid")

        if attempt == 0:
            pre = self.pre
        else:
            seeds2 = ctx.seeds.derive(f"ap:{x}:{y}:retry{attempt}")
            pre = PreprocState(ctx, SketchSpace(ctx.g.n, ctx.g.edges, seeds2, ctx.cfg))
        space = pre.space

        # sensitivity with the channel gap closed (heavy-path labels traded)
        A.path_send(channel, wf.words(wf.anc_bits + 2 * wf.id_bits))
        tx = self.classify_sensitivity(x, y, via_channel=True)
        ty = self.classify_sensitivity(y, x, via_channel=True)
        fs_x = sorted(cid for cid, s in tx.items() if s == "fully")
        fs_y = sorted(cid for cid, s in ty.items() if s == "fully")

        # initial parts: fully sensitive components both sides, plus the rest
        parts: list[dict] = []
        for cid in fs_x:
            parts.append({"key": ("x", cid), "verts": set(self.that[x].members[cid]),
                          "leader": cid, "owner": "x"})
        for cid in fs_y:
            parts.append({"key": ("y", cid), "verts": set(self.that[y].members[cid]),
                          "leader": cid, "owner": "y"})
        used = set().union(*(p["verts"] for p in parts)) if parts else set()
        rest = [v for v in range(ctx.g.n) if v not in used and v not in (x, y)]
        parts.append({"key": ("U",), "verts": set(rest), "leader": ctx.s, "owner": "x"})

        hx, hy = ctx.hl.heavy_child[x], ctx.hl.heavy_child[y]
        for p in parts:
            p["is_s"] = ctx.s in p["verts"]
            p["is_xh"] = hx in p["verts"] if hx is not None else False
            p["is_yh"] = hy in p["verts"] if hy is not None else False
            if not (p["is_s"] or p["is_xh"] or p["is_yh"]):
                assert p["verts"] <= lds_all, "light parts live inside LDS"

        # I*1-4 -> I1-4: G-sketches assembled, then x/y edges cancelled; the
        # cancel banks travel over LDS paths and the channel
        A.path_send(channel, 4 * sk_w)
        light_parts = [p for p in parts if not (p["is_s"] or p["is_xh"] or p["is_yh"])]
        rs = [0]
        for p in light_parts:
            anchor = min(p["verts"])
            rs.append(A.path_send(self._tree_path_within(p["verts"], anchor), sk_w,
                                  advance=False))
        A.advance(2 * max(rs) + 2)

        def part_rows(p, epoch):
            rows = None
            for v in p["verts"]:
                rv = pre.vertex_rows(epoch)[v]
                rows = rv.copy() if rows is None else rows ^ rv
            cancel = [(z, w) for z in (x, y) for w in ctx.g.adj[z]
                      if w in p["verts"]]
            return rows ^ space.xor_contributions(cancel, epoch)

        cache: dict[tuple[int, int], np.ndarray] = {}

        def rows_of(idx, epoch):
            if (idx, epoch) not in cache:
                cache[(idx, epoch)] = part_rows(parts[idx], epoch)
            return cache[(idx, epoch)]

        alive = list(range(len(parts)))
        checks = 0
        for phase in range(ctx.cfg.epochs):
            if assert_invariants and checks < 8:
                self._assert_ap_invariants(x, y, space, [parts[i] for i in alive],
                                           rows_of, alive, phase)
                checks += 1
                self.out.invariant_checks += 1
            growable = [i for i in alive if rows_of(i, phase).any()]
            if len(alive) <= 1 or not growable:
                break
            coins = {i: ctx.seeds.coin("ap", x, y, attempt, phase, parts[i]["leader"])
                     for i in alive}
            vert_part = {v: i for i in alive for v in parts[i]["verts"]}
            merges = []
            for i in growable:
                if coins[i] == 1:
                    continue                   # heads act as star centers
                rows = rows_of(i, phase)
                for u in range(rows.shape[0]):
                    got = space.decode_unit(rows[u])
                    if got is None:
                        continue
                    a, b = got
                    pa, pb = vert_part.get(a), vert_part.get(b)
                    other = pb if pa == i else pa if pb == i else None
                    if other is None or other == i:
                        continue
                    if coins[other] == 1:
                        merges.append((i, other))
                    break
            # per-phase message flows: light aggregation + channel traffic
            max_h = max([self._part_height(p) for p in light_parts] + [1])
            for p in light_parts:
                if p["verts"]:
                    self._charge_light_part(A, p, sk_w)
            A.path_send(channel, 6 * sk_w, advance=False)
            A.advance(2 * max_h + chan_len + 4)
            if not merges:
                continue
            target = {}
            for i, other in merges:
                target[i] = other
            # union tails into their head centers
            for i, other in sorted(target.items()):
                parts[other]["verts"] |= parts[i]["verts"]
                for f in ("is_s", "is_xh", "is_yh"):
                    parts[other][f] = parts[other][f] or parts[i][f]
                alive.remove(i)
            cache.clear()
            light_parts = [parts[i] for i in alive
                           if not (parts[i]["is_s"] or parts[i]["is_xh"]
                                   or parts[i]["is_yh"])]

        leftover = [i for i in alive if rows_of(i, ctx.cfg.epochs - 1).any()]
        if len(alive) > 1 and leftover:
            raise ExtractionExhausted(f"A^P stalled for pair ({x}, {y})")
        A.path_send(channel, 1)               # final part count comparison
        return len(alive) == 1

    def _tree_path_within(self, verts: set[int], anchor: int) -> list[int]:
        ctx = self.ctx
        x_anc = ctx.paths[anchor]
        for i in range(len(x_anc) - 1, -1, -1):
            if x_anc[i] not in verts:
                return list(x_anc[i:])
        return list(x_anc)

    def _part_height(self, p) -> int:
        ctx = self.ctx
        return max((ctx.t.depth[v] for v in p["verts"]), default=1) - \
            min((ctx.t.depth[v] for v in p["verts"]), default=0) + 1

    def _charge_light_part(self, A: AlgoScope, p, words: int):
        ctx = self.ctx
        for v in p["verts"]:
            par = ctx.t.parent[v]
            if par is not None and par in p["verts"]:
                A.charge(v, par, 2 * words)
            elif par is not None:
                A.charge(v, par, 2 * words)    # leader to its coordinator

    def _assert_ap_invariants(self, x, y, space, parts_alive, rows_of, alive, phase):
        """I1-4 content check at a phase boundary.

        The sketch each coordinator holds for a part must equal the sketch
        recomputed by an independent route: the XOR of the contributions of
        exactly the part's outgoing edges in G minus {x, y} (zero-sum makes
        internal edges vanish).  Structural rules: the part id is its
        leader's id, leaders sit inside their parts (or are the root for the
        s-part), and light parts stay inside the union of LDS sets.
        """
        ctx = self.ctx
        lds_all = set(self.lds(x, y)) | set(self.lds(y, x))
        for idx, p in zip(alive, parts_alive):
            held = rows_of(idx, phase)
            outgoing = [e for e in ctx.g.edges
                        if x not in e and y not in e
                        and (e[0] in p["verts"]) != (e[1] in p["verts"])]
            expect = space.xor_contributions(outgoing, phase)
            assert np.array_equal(held, expect), \
                f"I1-3 sketch mismatch for part {p['key']} of pair ({x},{y})"
            assert p["leader"] == ctx.s or p["leader"] in p["verts"]
            if not (p["is_s"] or p["is_xh"] or p["is_yh"]):
                assert p["verts"] <= lds_all

    # -- non-mutual decisions ----------------------------------------------------

    def _nm_cfg(self) -> SketchConfig:
        return SketchConfig(self.ctx.g.n, c=self.ctx.cfg.phase_factor)

    def nm_space(self) -> SketchSpace:
        if self._nm_space is None:
            self._nm_space = SketchSpace(self.ctx.g.n, self.ctx.g.edges,
                                         self.ctx.seeds.derive("nm"), self._nm_cfg(),
                                         graph_tag="G", tree_tag="T")
        return self._nm_space

    def nm_subtree_rows(self) -> np.ndarray:
        if 0 not in self._nm_subtree:
            t = self.ctx.t
            agg = self.nm_space().rows(0).copy()
            for v in reversed(t.order):
                p = t.parent[v]
                if p is not None:
                    agg[p] ^= agg[v]
            self._nm_subtree[0] = agg
        return self._nm_subtree[0]

    def smatrix_build(self):
        """Aggregate sketch_{G-minus-y}(V(T_v)) for the relevant (ancestor,
        path-vertex) cells of every vertex, bottom-up over T."""
        ctx = self.ctx
        t, wf = ctx.t, ctx.wf
        A = self.engine.algo(self.ALGO_NM)
        space = self.nm_space()
        D = t.height()
        nm_w = wf.sketch_words(self._nm_cfg().units_per_epoch, "eid")
        lg = max(1, int(np.ceil(np.log2(max(ctx.g.n, 2)))))
        A.convergecast(t, nm_w * lg * (D + 2))
        A.to_parent(t, nm_w * lg * (D + 2))

        cells_of: dict[int, list[tuple[int, int, int]]] = {}
        for v in range(ctx.g.n):
            cells = []
            for i, xa in enumerate(ctx.light_ancestors(v)):
                cid = self.comp_of_vertex[xa].get(v)
                ct = self.that.get(xa)
                if ct is None or cid not in ct.path:
                    continue
                for j, yv in enumerate(ct.path[cid][:-1]):
                    cells.append((i, j, yv))
            cells_of[v] = cells

        R = space.rows(0)
        agg: dict[int, dict[tuple[int, int], np.ndarray]] = {}
        for v in sorted(range(ctx.g.n), key=lambda u: -t.depth[u]):
            mine: dict[tuple[int, int], np.ndarray] = {}
            for (i, j, yv) in cells_of[v]:
                own = R[v] ^ space.xor_contributions(
                    [(v, w) for w in ctx.g.adj[v] if w == yv], 0)
                for c in t.children[v]:
                    own = own ^ agg[c][(i, j)]
                mine[(i, j)] = own
            agg[v] = mine
        self._smatrix_agg = agg

    def child_sketch_minus_y(self, x: int, child: int, y: int) -> np.ndarray | None:
        """sketch_{G minus y}(V(T_child)) from the child's aggregated matrix."""
        ctx = self.ctx
        la = ctx.light_ancestors(child)
        if x not in la:
            return None
        i = la.index(x)
        cid = self.comp_of_vertex[x].get(child)
        ct = self.that[x]
        pth = ct.path[cid]
        if y not in pth[:-1]:
            return None
        j = pth.index(y)
        return self._smatrix_agg[child].get((i, j))

    def heavy_mates(self, x: int) -> list[int]:
        ct = self.that.get(x)
        if ct is None or ct.heavy_comp is None:
            return []
        ctx = self.ctx
        out = []
        for y in ct.path[ct.heavy_comp][:-1]:
            if not ctx.independent(x, y):
                continue
            if y in self.light_mates.get(x, ()) or x in self.light_mates.get(y, ()):
                continue
            out.append(y)
        return out

    def decide_nonmutual(self, x: int, y: int) -> bool:
        """Connectivity of G minus {x, y} for a non-mutual heavy mate y on
        x's heavy escape path, by local computation at x."""
        ctx = self.ctx
        ct = self.that[x]
        hc = ct.heavy_comp
        pth = ct.path[hc]
        r = self.r_of.get(x)
        u_h = ct.uc[hc]
        ry_path = ctx.paths[u_h]
        # below r(x): the heavy component keeps an escape avoiding y
        if r is not None and r in ry_path and y in ry_path:
            if ry_path.index(y) > ry_path.index(r):
                return True
        nxt = pth[pth.index(y) + 1]
        if nxt != ctx.hl.heavy_child[y]:
            return True                       # H_x not fully sensitive to y
        space = self.nm_space()
        sub = self.nm_subtree_rows()
        # term 1: sensitive components of x below (y, y_h), except H_x
        total = None
        for cid in ct.comp_ids():
            if cid == hc:
                continue
            p2 = ct.path[cid]
            if y not in p2[:-1] or p2[p2.index(y) + 1] != ctx.hl.heavy_child[y]:
                continue
            for c in ct.children_of[cid]:
                got = self.child_sketch_minus_y(x, c, y)
                assert got is not None, "S-matrix must cover sensitive light children"
                got = got ^ space.xor_contributions(
                    [(x, w) for w in ctx.g.adj[x] if w in set(ctx.t.subtree(c))], 0)
                total = got.copy() if total is None else total ^ got
        # term 2: H_x with x's edges removed; y has no neighbor in H_x
        hxm = set(ct.members[hc])
        assert not any(w in hxm for w in ctx.g.adj[y]), \
            "mates above r(x) cannot touch the heavy component"
        t2 = None
        for c in ct.children_of[hc]:
            rowc = sub[c]
            t2 = rowc.copy() if t2 is None else t2 ^ rowc
        t2 = t2 ^ space.xor_contributions(
            [(x, w) for w in ctx.g.adj[x] if w in hxm], 0)
        total = t2 if total is None else total ^ t2
        # term 3: H_y with y's and x's edges removed (from I_y)
        ct_y = self.that[y]
        hyc = ct_y.heavy_comp
        hym = set(ct_y.members[hyc])
        t3 = None
        for c in ct_y.children_of[hyc]:
            rowc = sub[c]
            t3 = rowc.copy() if t3 is None else t3 ^ rowc
        t3 = t3 ^ space.xor_contributions(
            [(y, w) for w in ctx.g.adj[y] if w in hym], 0)
        t3 = t3 ^ space.xor_contributions(
            [(x, w) for w in ctx.g.adj[x] if w in hym], 0)
        total = total ^ t3
        # extraction versus the exact zero test; misses are logged, the
        # verdict follows the zero-sum signal
        extracted = any(space.decode_unit(total[i]) is not None
                        for i in range(total.shape[0]))
        nonzero = bool(total.any())
        if nonzero and not extracted:
            self.out.nonmutual_miss_log.append((x, y))
        return nonzero


def detect_independent_pairs(ctx: GraphContext, engine: CongestEngine,
                             pre: PreprocState,
                             assert_invariants_for: int = 0) -> IndependentOutcome:
    out, _ = run_independent_stage(ctx, engine, pre, assert_invariants_for)
    return out


def run_independent_stage(ctx: GraphContext, engine: CongestEngine,
                          pre: PreprocState, assert_invariants_for: int = 0):
    """Full Section-4 pipeline; requires a graph with no single cut vertex.

    Returns the outcome plus the stage object (connectivity trees, r-values,
    sensitivity accessors) for inspection.
    """
    stage = IndependentStage(ctx, engine, pre, assert_invariants_for)
    stage.component_ids_all_depths()
    stage.connectivity_trees()
    stage.distribute_component_paths()
    stage.sens_algos()
    chans = stage.light_pairs_and_channels()
    stage.mutual_info()
    stage.smatrix_build()

    out = stage.out
    out.lds_load = {v: 0 for v in range(ctx.g.n)}
    for x in range(ctx.g.n):
        ct = stage.that.get(x)
        if ct is None:
            continue
        for cid in ct.comp_ids():
            for y in ct.path[cid][:-1]:
                for v in stage.lds(x, y):
                    out.lds_load[v] += 1

    decided: set[tuple[int, int]] = set()
    budget = assert_invariants_for
    # light pairs (one run per unordered pair, smaller qualifying end first)
    for (x, y) in sorted(chans):
        key = (min(x, y), max(x, y))
        if key in decided:
            continue
        decided.add(key)
        check = budget > 0
        budget -= 1 if check else 0
        connected = stage.pair_connectivity(x, y, chans[(x, y)],
                                            assert_invariants=check)
        if not connected:
            out.pairs[key] = "light"
    # mutual pairs
    mpairs = stage.mutual_pairs()
    mchans = stage.mutual_channels(mpairs)
    for (x, y) in mpairs:
        key = (min(x, y), max(x, y))
        if key in decided:
            continue
        decided.add(key)
        check = budget > 0
        budget -= 1 if check else 0
        connected = stage.pair_connectivity(x, y, mchans[(x, y)],
                                            assert_invariants=check)
        if not connected:
            out.pairs[key] = "mutual"
    # non-mutual heavy mates, decided locally at each endpoint
    for x in range(ctx.g.n):
        for y in stage.heavy_mates(x):
            key = (min(x, y), max(x, y))
            if key in decided or key in out.pairs:
                continue
            if stage.r_of.get(x) == y and stage.r_of.get(y) == x:
                continue
            if stage.r_of.get(x) == y:
                continue                      # the mate decides from its side
            if not stage.decide_nonmutual(x, y):
                out.pairs[key] = "nonmutual"
    A = engine.algo(IndependentStage.ALGO_REPORT)
    A.convergecast(ctx.t, 1 + len(out.pairs))
    return out, stage
