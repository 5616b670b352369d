"""Undirected graphs, connectivity, excluded-set paths and disjoint-path extraction.

Nodes are dense integers ``0..n-1``.  Paths are tuples of node ids; a
single-node tuple is a valid path whose source and terminal coincide.
A path *excludes* a set X when none of its internal nodes lie in X.
"""

from __future__ import annotations

import functools
import itertools
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Iterable, Iterator, Sequence

from .errors import BadParams, InsufficientPaths, NoPath

Path = tuple  # tuple[int, ...]

__all__ = [
    "Graph",
    "CandidateSet",
    "min_degree",
    "vertex_connectivity",
    "local_connectivity",
    "is_connected",
    "check_theorem_condition",
    "path_excluding",
    "disjoint_paths_excluding",
    "max_disjoint_paths",
    "enumerate_candidate_sets",
    "enumerate_simple_paths",
    "generate",
    "parse_edge_list",
    "format_edge_list",
]


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset
    adj: tuple = field(init=False, compare=False, repr=False)
    adj_sets: tuple = field(init=False, compare=False, repr=False)

    def __init__(self, n: int, edges: Iterable[Sequence[int]]) -> None:
        if n < 2:
            raise BadParams(f"graph needs at least 2 nodes, got {n}")
        canon = set()
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise BadParams(f"self-loop at {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise BadParams(f"edge ({u}, {v}) has endpoint outside 0..{n - 1}")
            canon.add((min(u, v), max(u, v)))
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in canon:
            nbrs[u].add(v)
            nbrs[v].add(u)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", frozenset(canon))
        object.__setattr__(self, "adj", tuple(tuple(sorted(s)) for s in nbrs))
        object.__setattr__(self, "adj_sets", tuple(frozenset(s) for s in nbrs))
        object.__setattr__(self, "_hash", hash((n, self.edges)))

    def __hash__(self) -> int:
        return self._hash

    @property
    def nodes(self) -> range:
        return range(self.n)

    def neighbors(self, v: int) -> tuple:
        return self.adj[v]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj_sets[u]

    def is_complete(self) -> bool:
        return len(self.edges) == self.n * (self.n - 1) // 2

    def is_path(self, path: Sequence[int]) -> bool:
        """True iff ``path`` is a simple path of this graph (length >= 1)."""
        if not path:
            return False
        for x in path:
            if type(x) is not int or not 0 <= x < self.n:
                return False
        if len(set(path)) != len(path):
            return False
        adj = self.adj_sets
        for a, b in zip(path, path[1:]):
            if b not in adj[a]:
                return False
        return True

    def sorted_edges(self) -> list:
        return sorted(self.edges)


@dataclass(frozen=True)
class CandidateSet:
    label: int
    members: frozenset

    def __contains__(self, v: int) -> bool:
        return v in self.members


def min_degree(g: Graph) -> int:
    return min(len(a) for a in g.adj)


def is_connected(g: Graph, removed: Iterable[int] = ()) -> bool:
    gone = set(removed)
    alive = [v for v in g.nodes if v not in gone]
    if len(alive) <= 1:
        return True
    seen = {alive[0]}
    todo = [alive[0]]
    while todo:
        x = todo.pop()
        for y in g.adj[x]:
            if y not in gone and y not in seen:
                seen.add(y)
                todo.append(y)
    return len(seen) == len(alive)


# -- unit vertex-capacity max flow -------------------------------------------
#
# Split graph: node y becomes y_in = 2y and y_out = 2y + 1 joined by a unit arc;
# each undirected edge yz becomes y_out -> z_in and z_out -> y_in.  The
# super-source is 2n and feeds s_in for every source s.


def _flow_paths(g: Graph, sources: Iterable[int], target: int,
                forbidden: Iterable[int], limit: int | None) -> list[list[int]]:
    n = g.n
    blocked = set(forbidden)
    srcs = sorted(set(sources))
    sup = 2 * n
    tgt = 2 * target
    cap: dict[int, dict[int, int]] = {x: {} for x in range(2 * n + 1)}

    def arc(a: int, b: int) -> None:
        cap[a].setdefault(b, 0)
        cap[a][b] += 1
        cap[b].setdefault(a, 0)

    for s in srcs:
        arc(sup, 2 * s)
    for y in g.nodes:
        if y in blocked or y == target:
            continue
        arc(2 * y, 2 * y + 1)
        for z in g.adj[y]:
            if z not in blocked:
                arc(2 * y + 1, 2 * z)
    order = {x: sorted(cap[x]) for x in cap}
    flow_in = {x: dict.fromkeys(cap[x], 0) for x in cap}

    value = 0
    while limit is None or value < limit:
        parent = {sup: None}
        queue = deque([sup])
        while queue and tgt not in parent:
            x = queue.popleft()
            for y in order[x]:
                if y not in parent and cap[x][y] - flow_in[x][y] > 0:
                    parent[y] = x
                    queue.append(y)
        if tgt not in parent:
            break
        y = tgt
        while parent[y] is not None:
            x = parent[y]
            flow_in[x][y] += 1
            flow_in[y][x] -= 1
            y = x
        value += 1

    paths = []
    for s in srcs:
        if flow_in[sup].get(2 * s, 0) <= 0:
            continue
        walk = [s]
        x = 2 * s
        while x != tgt:
            nxt = next(y for y in order[x] if flow_in[x][y] > 0)
            flow_in[x][nxt] -= 1
            x = nxt
            if x % 2 == 0:
                walk.append(x // 2)
        paths.append(walk)
    return paths


def local_connectivity(g: Graph, u: int, v: int) -> int:
    """Maximum number of internally node-disjoint u-v paths, for non-adjacent u, v."""
    if u == v or g.has_edge(u, v):
        raise BadParams("local connectivity is defined here for distinct non-adjacent nodes")
    return len(_flow_paths(g, g.adj[u], v, {u}, None))


def vertex_connectivity(g: Graph) -> int:
    if g.is_complete():
        return g.n - 1
    if not is_connected(g):
        return 0
    best = g.n - 1
    for u, v in itertools.combinations(g.nodes, 2):
        if not g.has_edge(u, v):
            best = min(best, local_connectivity(g, u, v))
    return best


@functools.lru_cache(maxsize=256)
def check_theorem_condition(g: Graph, f: int) -> bool:
    """Whether ``g`` is (floor(3f/2)+1)-connected with minimum degree >= 2f."""
    if f < 0:
        raise BadParams("f must be non-negative")
    if f == 0:
        return is_connected(g)
    k = 3 * f // 2 + 1
    return g.n > k and min_degree(g) >= 2 * f and vertex_connectivity(g) >= k


@functools.lru_cache(maxsize=1 << 16)
def _path_excluding(g: Graph, u: int, v: int, x: frozenset) -> tuple:
    if u == v:
        return (u,)
    # distances to v, expanding only through nodes that may be internal
    dist = {v: 0}
    queue = deque([v])
    while queue:
        y = queue.popleft()
        if y != v and y in x:
            continue
        for z in g.adj[y]:
            if z not in dist:
                dist[z] = dist[y] + 1
                queue.append(z)
    if u not in dist:
        raise NoPath(u, v, x)
    path = [u]
    cur = u
    while cur != v:
        cur = next(z for z in g.adj[cur]
                   if dist.get(z) == dist[cur] - 1 and (z == v or z not in x))
        path.append(cur)
    return tuple(path)


def path_excluding(g: Graph, u: int, v: int, x: Iterable[int]) -> tuple:
    """Shortest u->v path with no internal node in ``x``; ties go to the
    lexicographically smallest node sequence.

    Raises NoPath when every u->v path has an internal node in ``x``.
    """
    return _path_excluding(g, u, v, frozenset(x))


@functools.lru_cache(maxsize=1 << 16)
def _disjoint_paths(g: Graph, sources: frozenset, v: int, forbidden: frozenset,
                    k: int) -> tuple:
    if v in sources or v in forbidden or sources & forbidden:
        raise BadParams("sources, target and forbidden set must be pairwise disjoint")
    raw = _flow_paths(g, sources, v, forbidden, k)
    if len(raw) < k:
        raise InsufficientPaths(len(raw), k)
    out = []
    for walk in raw:
        # cut at the last source visited so that no source is internal
        last = max(i for i, y in enumerate(walk[:-1]) if y in sources)
        out.append(tuple(walk[last:]))
    return tuple(sorted(out))


def disjoint_paths_excluding(g: Graph, sources: Iterable[int], v: int,
                             forbidden: Iterable[int], k: int) -> tuple:
    """``k`` paths from distinct members of ``sources`` to ``v`` sharing no
    source or internal node, none of whose internal nodes lie in
    ``forbidden`` or ``sources``.  Returned sorted by node sequence.
    """
    return _disjoint_paths(g, frozenset(sources), v, frozenset(forbidden), k)


def max_disjoint_paths(g: Graph, sources: Iterable[int], v: int,
                       forbidden: Iterable[int] = ()) -> int:
    return len(_flow_paths(g, set(sources), v, set(forbidden), None))


def enumerate_candidate_sets(n: int, f: int) -> list[CandidateSet]:
    """All subsets of size <= f, by cardinality then lexicographically."""
    if not 0 <= f < n:
        raise BadParams(f"need 0 <= f < n, got f={f}, n={n}")
    out = []
    for size in range(f + 1):
        for combo in itertools.combinations(range(n), size):
            out.append(CandidateSet(len(out), frozenset(combo)))
    return out


def enumerate_simple_paths(g: Graph, max_nodes: int) -> list[tuple]:
    """All simple paths with 1..max_nodes nodes, ordered by length then lexicographically."""
    levels = [[(v,) for v in g.nodes]]
    while len(levels) < max_nodes:
        nxt = []
        for p in levels[-1]:
            for z in g.adj[p[-1]]:
                if z not in p:
                    nxt.append(p + (z,))
        if not nxt:
            break
        nxt.sort()
        levels.append(nxt)
    return [p for lvl in levels for p in lvl]


def iter_simple_paths(g: Graph, u: int, v: int, avoid_internal: frozenset = frozenset(),
                      avoid: frozenset = frozenset()) -> Iterator[tuple]:
    """Every simple u->v path; ``avoid_internal`` may not be internal, ``avoid`` not anywhere."""
    if u in avoid or v in avoid:
        return
    if u == v:
        yield (u,)
        return
    stack = [(u,)]
    while stack:
        p = stack.pop()
        for z in reversed(g.adj[p[-1]]):
            if z in p or z in avoid:
                continue
            if z == v:
                yield p + (z,)
            elif z not in avoid_internal:
                stack.append(p + (z,))


# -- generators ----------------------------------------------------------------


def complete(n: int) -> Graph:
    return Graph(n, itertools.combinations(range(n), 2))


def cycle(n: int) -> Graph:
    if n < 3:
        raise BadParams("cycle needs n >= 3")
    return Graph(n, ((i, (i + 1) % n) for i in range(n)))


def circulant(n: int, offsets: Iterable[int]) -> Graph:
    offs = sorted(set(int(o) for o in offsets))
    if not offs or any(not 1 <= o <= n // 2 for o in offs):
        raise BadParams(f"circulant offsets must lie in 1..{n // 2}")
    return Graph(n, ((i, (i + o) % n) for i in range(n) for o in offs))


def harary(k: int, n: int) -> Graph:
    """Harary graph H_{k,n}: k-connected on n nodes with the fewest edges."""
    if not 1 <= k < n:
        raise BadParams(f"harary needs 1 <= k < n, got k={k}, n={n}")
    if k == 1:
        return Graph(n, ((i, i + 1) for i in range(n - 1)))
    half = k // 2
    edges = [(i, (i + o) % n) for i in range(n) for o in range(1, half + 1)]
    if k % 2:
        if n % 2 == 0:
            edges += [(i, i + n // 2) for i in range(n // 2)]
        else:
            edges += [(i, (i + (n + 1) // 2) % n) for i in range((n + 1) // 2)]
    return Graph(n, edges)


def parse_edge_list(text: str) -> Graph:
    tokens = text.split()
    try:
        nums = [int(t) for t in tokens]
    except ValueError as e:
        raise BadParams(f"edge list must be integers: {e}") from None
    if len(nums) < 2:
        raise BadParams("edge list needs a header 'n m'")
    n, m = nums[0], nums[1]
    body = nums[2:]
    if len(body) != 2 * m:
        raise BadParams(f"header promises {m} edges, found {len(body) / 2:g}")
    edges = list(zip(body[0::2], body[1::2]))
    for u, v in edges:
        if not 0 <= u < v < n:
            raise BadParams(f"edge line '{u} {v}' must satisfy 0 <= u < v < n")
    if len(set(edges)) != m:
        raise BadParams("duplicate edge in edge list")
    return Graph(n, edges)


def format_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {len(g.edges)}"]
    lines += [f"{u} {v}" for u, v in g.sorted_edges()]
    return "\n".join(lines) + "\n"


def generate(family: str, *params) -> Graph:
    """Build a graph by family name.

    complete(n), cycle(n), harary(k, n), circulant(n, offsets),
    edge_list_file(path).
    """
    try:
        if family == "complete":
            (n,) = params
            return complete(int(n))
        if family == "cycle":
            (n,) = params
            return cycle(int(n))
        if family == "harary":
            k, n = params
            return harary(int(k), int(n))
        if family == "circulant":
            n, offsets = params
            return circulant(int(n), offsets)
        if family == "edge_list_file":
            (path,) = params
            return parse_edge_list(FsPath(path).read_text())
    except (TypeError, ValueError) as e:
        if isinstance(e, BadParams):
            raise
        raise BadParams(f"bad parameters for {family}: {params!r}") from e
    except OSError as e:
        raise BadParams(f"cannot read edge list: {e}") from e
    raise BadParams(f"unknown graph family {family!r}")
