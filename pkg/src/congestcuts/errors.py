"""Exception types shared across the package."""


class GraphFormatError(ValueError):
    """Malformed graph input (bad ids, bad syntax)."""


class SelfLoop(GraphFormatError):
    pass


class DuplicateEdge(GraphFormatError):
    pass


class Disconnected(ValueError):
    """Graph is disconnected but the caller required connectivity."""


class TagMismatch(ValueError):
    """Attempt to combine sketches from different seed/tree/graph contexts."""


class BudgetExceeded(RuntimeError):
    """An edge carried more words in one round than the strict-mode budget."""

    def __init__(self, edge, round_no, algo_id):
        self.edge = edge
        self.round_no = round_no
        self.algo_id = algo_id
        super().__init__(f"budget exceeded on edge {edge} in round {round_no} by {algo_id!r}")


class NonTermination(RuntimeError):
    """A vertex program failed to halt within the round cap."""


class FootprintViolation(RuntimeError):
    """An algorithm sent a message on an edge outside its declared footprint."""

    def __init__(self, edge, algo_id):
        self.edge = edge
        self.algo_id = algo_id
        super().__init__(f"algorithm {algo_id!r} touched foreign edge {edge}")


class ExtractionExhausted(RuntimeError):
    """A growable part yielded no outgoing edge within the phase budget."""


class NotSpanning(ValueError):
    """The recovered non-tree edge set does not span the punctured graph."""


class InvalidParams(ValueError):
    """Bad generator parameters."""
