"""Exception types shared across the package."""

from __future__ import annotations


class ByzcastError(Exception):
    pass


class BadParams(ByzcastError, ValueError):
    """A graph generator or parser received unusable parameters."""


class NoPath(ByzcastError):
    """No path avoiding the excluded set exists between the two nodes."""

    def __init__(self, u: int, v: int, excluded) -> None:
        super().__init__(f"no {u}->{v} path excluding {sorted(excluded)}")
        self.u = u
        self.v = v
        self.excluded = frozenset(excluded)


class InsufficientPaths(ByzcastError):
    """Fewer node-disjoint paths exist than were requested."""

    def __init__(self, found: int, wanted: int) -> None:
        super().__init__(f"only {found} of {wanted} disjoint paths exist")
        self.found = found
        self.wanted = wanted


class PathConstructionFailed(ByzcastError):
    """Step (c) could not build f+1 disjoint paths; the graph condition is broken."""


class ScenarioError(ByzcastError, ValueError):
    """A scenario, matrix or trace document failed validation."""


class GuardrailExceeded(ByzcastError):
    """Scenario is too large for exhaustive simulation without an override."""
