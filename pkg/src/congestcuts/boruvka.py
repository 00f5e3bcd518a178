"""Local Boruvka simulation over sketch material.

One vertex (or one vertex pair) holds sketches of connected blocks of some
punctured universe and repeatedly extracts outgoing edges to merge them.
Phase k consumes the units of epoch k, so every phase sees fresh randomness.
A part whose sketch is all-zero has no outgoing edge (zero-sum, bit-exact)
and is final; a part with a nonzero sketch is growable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ExtractionExhausted


@dataclass
class BoruvkaResult:
    parts: list[list[int]]            # final parts, as lists of block ids
    merge_edges: list[tuple[int, int]]  # accepted spanning edges
    phases_used: int
    growable_history: list[int]       # growable part count entering each phase
    decode_attempts: int = 0

    @property
    def num_parts(self) -> int:
        return len(self.parts)


class _DSU:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, a):
        while self.p[a] != a:
            self.p[a] = self.p[self.p[a]]
            a = self.p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.p[max(ra, rb)] = min(ra, rb)
        return True


def local_boruvka(num_blocks: int, block_rows, classify, decode, epochs: int,
                  what: str = "") -> BoruvkaResult:
    """Merge initial blocks into the connected components of the universe.

    block_rows(b, epoch) -> (L, levels, 2) sketch rows of initial block b;
    classify(vertex) -> initial block id of a decoded endpoint;
    decode(unit_rows) -> (u, v) or None.

    Raises ExtractionExhausted if a growable part outlives every phase.
    """
    dsu = _DSU(num_blocks)
    merge_edges: list[tuple[int, int]] = []
    history: list[int] = []
    attempts = 0
    phases = 0
    for epoch in range(epochs):
        roots = sorted({dsu.find(b) for b in range(num_blocks)})
        if len(roots) <= 1:
            break
        part_rows = {}
        for r in roots:
            rows = None
            for b in range(num_blocks):
                if dsu.find(b) == r:
                    br = block_rows(b, epoch)
                    rows = br.copy() if rows is None else rows ^ br
            part_rows[r] = rows
        growable = [r for r in roots if part_rows[r].any()]
        if not growable:
            break
        history.append(len(growable))
        phases += 1
        pending: list[tuple[int, tuple[int, int]]] = []
        for r in growable:
            rows = part_rows[r]
            found = None
            for i in range(rows.shape[0]):
                attempts += 1
                got = decode(rows[i])
                if got is None:
                    continue
                u, v = got
                bu, bv = classify(u), classify(v)
                if bu is None or bv is None:
                    continue          # endpoint outside the universe: false decode
                ru, rv = dsu.find(bu), dsu.find(bv)
                if ru == rv or r not in (ru, rv):
                    continue          # stale or false decode; keep scanning
                found = (u, v)
                break
            if found is not None:
                pending.append((r, found))
        for r, (u, v) in pending:
            bu, bv = classify(u), classify(v)
            if bu is not None and bv is not None and dsu.union(bu, bv):
                merge_edges.append((u, v) if u < v else (v, u))
    else:
        # epochs exhausted: growable part left?
        roots = sorted({dsu.find(b) for b in range(num_blocks)})
        if len(roots) > 1:
            for r in roots:
                rows = None
                for b in range(num_blocks):
                    if dsu.find(b) == r:
                        br = block_rows(b, epochs - 1)
                        rows = br.copy() if rows is None else rows ^ br
                if rows is not None and rows.any():
                    raise ExtractionExhausted(
                        f"growable part survived {epochs} phases {what}")

    groups: dict[int, list[int]] = {}
    for b in range(num_blocks):
        groups.setdefault(dsu.find(b), []).append(b)
    parts = [sorted(v) for _, v in sorted(groups.items())]
    return BoruvkaResult(parts, merge_edges, phases, history, attempts)
