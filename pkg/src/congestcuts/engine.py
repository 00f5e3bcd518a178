"""Round-synchronous CONGEST simulator with round and congestion accounting.

Two execution styles share one ledger:

* `run` executes vertex programs literally, round by round, with per-edge
  per-round word budgets (strict mode raises BudgetExceeded on violation).
* Algo scopes provide tree communication primitives (broadcast, convergecast,
  pipelined aggregation, path sends) whose traffic is charged exactly, in
  words, to the edges they use, and whose round cost is the hop count of the
  primitive.  A round moves one protocol message per edge direction; message
  sizes are tracked separately as congestion words.  (The acceptance suite
  compares round counts across graph families, so rounds deliberately count
  protocol steps, not payload words; every payload word still lands in the
  congestion columns.)

Footprints: a scope may declare the set of edges its algorithm is allowed to
touch; any charge outside it raises FootprintViolation.
"""

from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .errors import BudgetExceeded, FootprintViolation, NonTermination
from .graphs import Graph
from .tree import BfsTree

DEFAULT_ROUND_CAP = 10 ** 6


def canon(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass
class Message:
    payload: object
    size_units: int
    algo_id: str
    sender: int


@dataclass
class AlgoStats:
    dilation: int = 0
    edge_words: dict = field(default_factory=lambda: defaultdict(int))

    @property
    def congestion(self) -> int:
        return max(self.edge_words.values(), default=0)


@dataclass
class RoundReport:
    rounds: int
    max_congestion: int
    per_algo: dict[str, AlgoStats]
    composite_bound: int | None = None   # c + d, sequential-verified schedules

    def to_json(self) -> str:
        return json.dumps({
            "rounds": self.rounds,
            "max_congestion": self.max_congestion,
            "composite_bound": self.composite_bound,
            "per_algo": {
                a: {"dilation": st.dilation, "congestion": st.congestion}
                for a, st in sorted(self.per_algo.items())
            },
        })


class CongestEngine:
    """Shared accounting plus literal execution over one graph."""

    def __init__(self, g: Graph, mode: str = "seq", words_per_round: int = 1,
                 round_cap: int = DEFAULT_ROUND_CAP, trace: bool = False):
        if mode not in ("seq", "strict"):
            raise ValueError(f"unknown scheduler mode {mode!r}")
        self.g = g
        self.mode = mode
        self.words_per_round = words_per_round
        self.round_cap = round_cap
        self.edge_words: dict[tuple[int, int], int] = defaultdict(int)
        self.algos: dict[str, AlgoStats] = {}
        self.trace_rows: list[tuple] = [] if trace else None  # type: ignore[assignment]

    # -- ledger -------------------------------------------------------------

    def stats(self, algo_id: str) -> AlgoStats:
        if algo_id not in self.algos:
            self.algos[algo_id] = AlgoStats()
        return self.algos[algo_id]

    def charge(self, algo_id: str, u: int, v: int, words: int,
               footprint=None, round_hint: int = -1):
        if words <= 0:
            return
        e = canon(u, v)
        if footprint is not None and e not in footprint:
            raise FootprintViolation(e, algo_id)
        self.edge_words[e] += words
        self.stats(algo_id).edge_words[e] += words
        if self.trace_rows is not None:
            self.trace_rows.append((algo_id, round_hint, e[0], e[1], words))

    def algo(self, algo_id: str, footprint=None) -> "AlgoScope":
        return AlgoScope(self, algo_id, footprint)

    def report(self, rounds: int | None = None, composite: int | None = None) -> RoundReport:
        max_c = max(self.edge_words.values(), default=0)
        if rounds is None:
            rounds = max((st.dilation for st in self.algos.values()), default=0)
        return RoundReport(rounds, max_c, dict(self.algos), composite)

    def max_congestion(self) -> int:
        return max(self.edge_words.values(), default=0)

    # -- literal execution ---------------------------------------------------

    def run(self, program_factory: Callable[[int], "VertexProgram"],
            algo_id: str = "main", budget: int | None = None,
            init_data: Optional[dict] = None, delays: Optional[dict] = None,
            footprint=None):
        """Lock-step execution of one vertex program on every vertex."""
        runner = _Runner(self, [(algo_id, program_factory, init_data or {},
                                 (delays or {}))],
                         budget if budget is not None else self.words_per_round,
                         footprint_map={algo_id: footprint})
        rounds = runner.execute()
        self.stats(algo_id).dilation += rounds
        return runner.states[algo_id], self.report(rounds=rounds)

    def schedule(self, algos, mode: str | None = None, delay_range: int = 0,
                 seed: int = 0, budget: int | None = None):
        """Compose several vertex programs.

        Sequential-verified mode runs them one after another and reports the
        composite bound c + d next to the measured values; strict mode starts
        them with random delays in one interleaved execution, asserting the
        per-edge budget every round.
        """
        mode = mode or self.mode
        budget = budget if budget is not None else self.words_per_round
        if mode == "seq":
            rounds_each = []
            for algo_id, factory, init_data in algos:
                runner = _Runner(self, [(algo_id, factory, init_data or {}, {})],
                                 budget, footprint_map={})
                r = runner.execute()
                self.stats(algo_id).dilation += r
                rounds_each.append(r)
            d = max(rounds_each, default=0)
            c = self.max_congestion()
            return self.report(rounds=sum(rounds_each), composite=c + d)
        # strict: random start delays, one interleaved run
        import random as _random
        rng = _random.Random(seed)
        jobs = []
        for algo_id, factory, init_data in algos:
            delay = rng.randrange(delay_range + 1) if delay_range else 0
            jobs.append((algo_id, factory, init_data or {},
                         {v: delay for v in range(self.g.n)}))
        runner = _Runner(self, jobs, budget, footprint_map={}, strict=True)
        rounds = runner.execute()
        for algo_id, *_ in algos:
            self.stats(algo_id).dilation = max(self.stats(algo_id).dilation, rounds)
        return self.report(rounds=rounds)


class VertexAPI:
    """The only window a vertex program has on the world: itself, its
    neighbor ids, its init data, and a send queue."""

    __slots__ = ("v", "neighbors", "data", "_out", "_halted", "round_no")

    def __init__(self, v: int, neighbors: list[int], data):
        self.v = v
        self.neighbors = neighbors
        self.data = data
        self._out: list[tuple[int, object, int]] = []
        self._halted = False
        self.round_no = 0

    def send(self, to: int, payload, size_units: int = 1):
        if to not in self.neighbors:
            raise ValueError(f"vertex {self.v} has no edge to {to}")
        if size_units < 1:
            raise ValueError("messages cost at least one word")
        self._out.append((to, payload, size_units))

    def halt(self):
        self._halted = True


class VertexProgram:
    """Base class; subclasses override init and on_round."""

    def init(self, api: VertexAPI):
        pass

    def on_round(self, api: VertexAPI, messages: list[Message]):
        raise NotImplementedError


class _Runner:
    def __init__(self, engine: CongestEngine, jobs, budget: int,
                 footprint_map, strict: bool = False):
        self.engine = engine
        self.budget = budget
        self.strict = strict or engine.mode == "strict"
        self.footprint_map = footprint_map or {}
        g = engine.g
        self.apis: dict[str, list[VertexAPI]] = {}
        self.progs: dict[str, list[VertexProgram]] = {}
        self.start: dict[str, dict[int, int]] = {}
        self.states = {}
        for algo_id, factory, init_data, delays in jobs:
            apis = [VertexAPI(v, g.adj[v], init_data.get(v)) for v in range(g.n)]
            progs = [factory(v) for v in range(g.n)]
            for v in range(g.n):
                progs[v].init(apis[v])
                if apis[v]._out:
                    raise RuntimeError("init() must not send messages")
            self.apis[algo_id] = apis
            self.progs[algo_id] = progs
            self.start[algo_id] = delays
            self.states[algo_id] = progs

    def execute(self) -> int:
        engine = self.engine
        inboxes: dict[str, list[list[Message]]] = {
            a: [[] for _ in range(engine.g.n)] for a in self.progs}
        # per edge-direction FIFO of partially transmitted messages
        links: dict[tuple[int, int], deque] = defaultdict(deque)
        rounds_used = 0
        r = 0
        while True:
            r += 1
            if r > engine.round_cap:
                raise NonTermination(f"round cap {engine.round_cap} hit")
            sent_this_round: dict[tuple[int, int], int] = defaultdict(int)
            active = False
            for algo_id in self.progs:
                apis, progs = self.apis[algo_id], self.progs[algo_id]
                delays = self.start[algo_id]
                for v in range(engine.g.n):
                    api = apis[v]
                    delay = delays.get(v, 0)
                    if api._halted or r <= delay:
                        continue
                    api.round_no = r - delay   # local clock of this algorithm
                    inbox = inboxes[algo_id][v]
                    inboxes[algo_id][v] = []
                    inbox.sort(key=lambda m: (m.algo_id, m.sender))
                    progs[v].on_round(api, inbox)
                    for (to, payload, size_units) in api._out:
                        active = True
                        sent_this_round[(v, to)] += size_units
                        if self.strict and sent_this_round[(v, to)] > self.budget:
                            raise BudgetExceeded(canon(v, to), r, algo_id)
                        engine.charge(algo_id, v, to, size_units,
                                      footprint=self.footprint_map.get(algo_id),
                                      round_hint=r)
                        links[(v, to)].append(
                            [Message(payload, size_units, algo_id, v), to, size_units])
                    api._out = []
            # links drain budget words per direction per round
            for key, q in links.items():
                capacity = self.budget
                while q and capacity > 0:
                    entry = q[0]
                    take = min(capacity, entry[2])
                    entry[2] -= take
                    capacity -= take
                    if entry[2] == 0:
                        q.popleft()
                        msg, to, _ = entry
                        if not self.apis[msg.algo_id][to]._halted:
                            inboxes[msg.algo_id][to].append(msg)
                        active = True
            if active:
                rounds_used = r
            if not active:
                in_flight = any(q for q in links.values())
                waiting = any(m for a in inboxes.values() for m in a)
                started = all(
                    r > max(self.start[alg].values() or [0]) for alg in self.progs)
                all_halted = all(api._halted
                                 for apis in self.apis.values() for api in apis)
                if not in_flight and not waiting and (all_halted or
                                                      (started and not waiting)):
                    break
        return rounds_used


# ---------------------------------------------------------------------------
# Macro primitives: tree communication with exact charging.

class AlgoScope:
    """Accounting scope for one sub-algorithm.

    Primitives auto-advance the scope's round counter; pass advance=False to
    compose a parallel group and advance by the max branch cost yourself.
    """

    def __init__(self, engine: CongestEngine, algo_id: str, footprint=None):
        self.engine = engine
        self.algo_id = algo_id
        self.footprint = frozenset(canon(*e) for e in footprint) if footprint is not None else None
        self.engine.stats(algo_id)

    # -- bookkeeping ---------------------------------------------------------

    @property
    def rounds(self) -> int:
        return self.engine.stats(self.algo_id).dilation

    def advance(self, r: int):
        if r > 0:
            self.engine.stats(self.algo_id).dilation += r

    def charge(self, u: int, v: int, words: int):
        self.engine.charge(self.algo_id, u, v, words, footprint=self.footprint,
                           round_hint=self.rounds)

    def _done(self, rounds: int, advance: bool) -> int:
        if advance:
            self.advance(rounds)
        return rounds

    # -- primitives -----------------------------------------------------------

    def edge_send(self, u: int, v: int, words: int, advance: bool = True) -> int:
        self.charge(u, v, words)
        return self._done(1, advance)

    def path_send(self, path: list[int], words: int, advance: bool = True) -> int:
        for a, b in zip(path, path[1:]):
            self.charge(a, b, words)
        return self._done(max(len(path) - 1, 0), advance)

    def neighbor_exchange(self, words: int, edges=None, advance: bool = True) -> int:
        edges = self.engine.g.edges if edges is None else edges
        for (u, v) in edges:
            self.charge(u, v, 2 * words)      # both directions
        return self._done(1, advance)

    def broadcast(self, t: BfsTree, words: int, root: int | None = None,
                  advance: bool = True) -> int:
        """Send one message from `root` down its subtree along tree edges."""
        if words == 0:
            return self._done(0, advance)
        root = t.root if root is None else root
        depth = 0
        frontier = [root]
        while frontier:
            nxt = []
            for u in frontier:
                for c in t.children[u]:
                    self.charge(u, c, words)
                    nxt.append(c)
            if nxt:
                depth += 1
            frontier = nxt
        return self._done(depth, advance)

    def convergecast(self, t: BfsTree, words: int, root: int | None = None,
                     advance: bool = True) -> int:
        """Aggregate one value per vertex upward to `root`; same edge set as
        broadcast, traffic flowing up."""
        r = self.broadcast(t, words, root=root, advance=False)
        return self._done(r, advance)

    def to_parent(self, t: BfsTree, words: int, vertices=None,
                  advance: bool = True) -> int:
        vs = range(t.n) if vertices is None else vertices
        for v in vs:
            p = t.parent[v]
            if p is not None:
                self.charge(v, p, words)
        return self._done(1, advance)

    def pipelined_multi_aggregate_cost(self, t: BfsTree, instances: int,
                                       words: int, root: int | None = None,
                                       advance: bool = True) -> int:
        """Charge `instances` aggregation trains over the tree; pipelined, so
        rounds grow additively in the instance count, not multiplicatively."""
        if instances <= 0:
            return self._done(0, advance)
        root = t.root if root is None else root
        height = self.broadcast(t, 0, root=root, advance=False)
        depth = 0
        frontier = [root]
        while frontier:
            nxt = []
            for u in frontier:
                for c in t.children[u]:
                    self.charge(u, c, instances * words)
                    nxt.append(c)
            if nxt:
                depth += 1
            frontier = nxt
        return self._done(depth + instances - 1, advance)

    def flood(self, edges: Iterable[tuple[int, int]], source: int, words: int,
              advance: bool = True) -> int:
        """BFS flood of one message over an explicit edge set."""
        adj = defaultdict(list)
        for (u, v) in edges:
            adj[u].append(v)
            adj[v].append(u)
        seen = {source}
        frontier = [source]
        depth = 0
        while frontier:
            nxt = []
            for u in frontier:
                for w in sorted(adj[u]):
                    if w not in seen:
                        seen.add(w)
                        self.charge(u, w, words)
                        nxt.append(w)
            if nxt:
                depth += 1
            frontier = nxt
        return self._done(depth, advance)


# ---------------------------------------------------------------------------
# Functional wrappers that compute and charge together.

def broadcast_value(scope: AlgoScope, t: BfsTree, value, words: int,
                    root: int | None = None) -> int:
    """All vertices in the subtree learn `value`; returns rounds used."""
    return scope.broadcast(t, words, root=root)


def convergecast_value(scope: AlgoScope, t: BfsTree, values: list, combine,
                       words: int, root: int | None = None):
    """Fold per-vertex values up the tree; returns (root value, rounds)."""
    root = t.root if root is None else root
    acc = {v: values[v] for v in t.subtree(root)}
    order = sorted(t.subtree(root), key=lambda v: (-t.depth[v], v))
    for v in order:
        if v != root:
            p = t.parent[v]
            acc[p] = combine(acc[p], acc[v])
    rounds = scope.convergecast(t, words, root=root)
    return acc[root], rounds


def pipelined_multi_aggregate(scope: AlgoScope, t: BfsTree, instance_values,
                              combine, words: int):
    """Run one aggregation instance per depth d, pipelined bottom-up.

    instance_values(v, d) gives vertex v's input to instance d; the result
    maps each vertex x to {child: aggregate of instance depth(x) over the
    child's subtree}.  Rounds grow as height + instances, not their product.
    """
    D = t.height()
    result: dict[int, dict[int, object]] = {}
    # aggregate instance d over every subtree, reusing one bottom-up sweep per d
    order = sorted(range(t.n), key=lambda v: -t.depth[v])
    for d in range(D + 1):
        agg = {}
        for v in order:
            if t.depth[v] < d:
                continue
            a = instance_values(v, d)
            for c in t.children[v]:
                a = combine(a, agg[c])
            agg[v] = a
        for x in range(t.n):
            if t.depth[x] == d:
                result[x] = {c: agg[c] for c in t.children[x]}
    rounds = scope.pipelined_multi_aggregate_cost(t, D + 1, words)
    return result, rounds
