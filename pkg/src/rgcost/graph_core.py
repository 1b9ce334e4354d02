"""Finite bounded-degree multigraphs, rooted balls, and canonical isomorphism codes.

Graphs are immutable: vertices are 0..n-1, edges a sorted multiset of
unordered pairs (loops allowed, stored as (v, v)).  Distances ignore edge
multiplicity and loops never shorten paths.  All operations are pure.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Optional, Sequence


class GraphFormatError(ValueError):
    """Raised on malformed graph text input; carries the 1-based line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Finite multigraph with a degree bound.

    ``edges`` is normalized to a sorted tuple of (min, max) pairs so that
    iteration order is deterministic.  A loop contributes 2 to the degree.
    """

    vertex_count: int
    edges: tuple[tuple[int, int], ...]
    degree_bound: int = 0

    def __post_init__(self):
        n = self.vertex_count
        if n < 0:
            raise ValueError("vertex_count must be nonnegative")
        norm = tuple(sorted(_norm_edge(u, v) for (u, v) in self.edges))
        object.__setattr__(self, "edges", norm)
        for (u, v) in norm:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
        degs = [0] * n
        for (u, v) in norm:
            degs[u] += 1
            degs[v] += 1  # loops: u == v counted twice
        maxdeg = max(degs, default=0)
        bound = self.degree_bound if self.degree_bound > 0 else maxdeg
        if maxdeg > bound:
            raise ValueError(f"degree {maxdeg} exceeds bound {bound}")
        object.__setattr__(self, "degree_bound", bound)

    # -- basic queries ------------------------------------------------

    @property
    def n(self) -> int:
        return self.vertex_count

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Deduplicated neighbor lists (no self entries); the metric structure."""
        nbrs: list[set[int]] = [set() for _ in range(self.n)]
        for (u, v) in self.edges:
            if u != v:
                nbrs[u].add(v)
                nbrs[v].add(u)
        return tuple(tuple(sorted(s)) for s in nbrs)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        degs = [0] * self.n
        for (u, v) in self.edges:
            degs[u] += 1
            degs[v] += 1
        return tuple(degs)

    @cached_property
    def edge_multiplicity(self) -> dict[tuple[int, int], int]:
        return dict(Counter(self.edges))

    def degree(self, v: int) -> int:
        return self.degrees[v]

    def has_edge(self, u: int, v: int) -> bool:
        return _norm_edge(u, v) in self.edge_multiplicity

    def ball_distances(self, v: int, r: Optional[int] = None) -> dict[int, int]:
        """BFS distances from v, truncated at radius r (all reachable if None)."""
        if not (0 <= v < self.n):
            raise ValueError(f"vertex {v} out of range")
        dist = {v: 0}
        frontier = deque([v])
        adj = self.adjacency
        while frontier:
            u = frontier.popleft()
            if r is not None and dist[u] >= r:
                continue
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    frontier.append(w)
        return dist

    def distance(self, u: int, v: int, cap: Optional[int] = None) -> float:
        """Graph distance; math.inf when disconnected or beyond cap."""
        if u == v:
            return 0
        dist = {u: 0}
        frontier = deque([u])
        adj = self.adjacency
        while frontier:
            x = frontier.popleft()
            if cap is not None and dist[x] >= cap:
                continue
            for w in adj[x]:
                if w == v:
                    return dist[x] + 1
                if w not in dist:
                    dist[w] = dist[x] + 1
                    frontier.append(w)
        return math.inf


@dataclass(frozen=True)
class Coloring:
    """Vertex coloring with values in 1..color_count."""

    assignment: tuple[int, ...]
    color_count: int

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(self.assignment))
        if self.color_count < 1:
            raise ValueError("color_count must be >= 1")
        for c in self.assignment:
            if not (1 <= c <= self.color_count):
                raise ValueError(f"color {c} outside 1..{self.color_count}")

    def __len__(self) -> int:
        return len(self.assignment)

    def __getitem__(self, v: int) -> int:
        return self.assignment[v]


# raw bytes; equal codes iff the decorated rooted balls are isomorphic
CanonicalCode = bytes


@dataclass(frozen=True)
class RootedBall:
    """Connected rooted decorated graph of bounded radius, canonically labeled.

    The root is vertex 0 and the labeling is the one produced by
    canonical_code, so two balls are isomorphic (respecting root, colors,
    labels and distinguished edges) iff they are equal as dataclasses.
    ``distinguished`` pairs need not be edges of the ball.
    """

    radius: int
    vertex_count: int
    edges: tuple[tuple[int, int], ...]
    vertex_colors: Optional[tuple[int, ...]] = None
    edge_labels: Optional[tuple[tuple[int, int, str], ...]] = None
    distinguished: Optional[tuple[tuple[int, int], ...]] = None

    @cached_property
    def structural_adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[set[int]] = [set() for _ in range(self.vertex_count)]
        for (u, v) in self.edges:
            if u != v:
                nbrs[u].add(v)
                nbrs[v].add(u)
        for (u, v, _lab) in self.edge_labels or ():
            if u != v:
                nbrs[u].add(v)
                nbrs[v].add(u)
        return tuple(tuple(sorted(s)) for s in nbrs)

    def root_distances(self) -> dict[int, int]:
        dist = {0: 0}
        frontier = deque([0])
        adj = self.structural_adjacency
        while frontier:
            u = frontier.popleft()
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    frontier.append(w)
        return dist

    def without_distinguished(self) -> "RootedBall":
        return _canonical_ball(
            self.radius,
            self.vertex_count,
            0,
            self.edges,
            self.edge_labels or (),
            self.vertex_colors,
            (),
        )[0]

    def restricted(self, radius: int) -> "RootedBall":
        """Forget everything outside the given radius from the root."""
        return self.rerooted(0, radius)

    def rerooted(self, new_root: int, radius: int) -> "RootedBall":
        """Re-root at a ball vertex and restrict to the given radius."""
        if not (0 <= new_root < self.vertex_count):
            raise ValueError("new root outside ball")
        dist = {new_root: 0}
        frontier = deque([new_root])
        adj = self.structural_adjacency
        while frontier:
            u = frontier.popleft()
            if dist[u] >= radius:
                continue
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    frontier.append(w)
        keep = sorted(dist)
        local = {v: i for i, v in enumerate(keep)}
        edges = tuple((local[u], local[v]) for (u, v) in self.edges
                      if u in dist and v in dist)
        labeled = tuple((local[u], local[v], lab)
                        for (u, v, lab) in (self.edge_labels or ())
                        if u in dist and v in dist)
        colors = None
        if self.vertex_colors is not None:
            colors = tuple(self.vertex_colors[v] for v in keep)
        disting = tuple(_norm_edge(local[u], local[v])
                        for (u, v) in (self.distinguished or ())
                        if u in dist and v in dist)
        return _canonical_ball(radius, len(keep), local[new_root], edges,
                               labeled, colors, disting)[0]


# ---------------------------------------------------------------------------
# canonical labeling: color refinement seeded by root distance, with
# backtracking over refinement ties (individualize, take minimal code)
# ---------------------------------------------------------------------------


def _refine(colors: list[int], signals: list[list[tuple]], m: int) -> list[int]:
    while True:
        keys = []
        for v in range(m):
            sig = sorted((kind, lab, d, colors[w]) for (kind, lab, d, w) in signals[v])
            keys.append((colors[v], tuple(sig)))
        order = sorted(set(keys))
        remap = {k: i for i, k in enumerate(order)}
        new = [remap[keys[v]] for v in range(m)]
        if len(order) == len(set(colors)):
            return new
        colors = new


def _search_canonical(
    colors: list[int],
    signals: list[list[tuple]],
    m: int,
    serialize,
) -> tuple[tuple[int, ...], bytes]:
    colors = _refine(colors, signals, m)
    classes: dict[int, list[int]] = {}
    for v, c in enumerate(colors):
        classes.setdefault(c, []).append(v)
    target = None
    for c in sorted(classes):
        if len(classes[c]) > 1:
            target = classes[c]
            break
    if target is None:
        perm = tuple(sorted(range(m), key=lambda v: colors[v]))
        inverse = [0] * m
        for new, old in enumerate(perm):
            inverse[old] = new
        return tuple(inverse), serialize(tuple(inverse))
    best: Optional[tuple[bytes, tuple[int, ...]]] = None
    for v in target:
        branch = [2 * c for c in colors]
        branch[v] -= 1
        perm, code = _search_canonical(branch, signals, m, serialize)
        if best is None or code < best[0]:
            best = (code, perm)
    return best[1], best[0]


def _canonical_ball(
    radius: int,
    m: int,
    root: int,
    plain: Sequence[tuple[int, int]],
    labeled: Sequence[tuple[int, int, str]],
    colors: Optional[Sequence[int]],
    distinguished: Sequence[tuple[int, int]],
) -> tuple[RootedBall, CanonicalCode]:
    # root distances over the structural (plain + labeled) adjacency
    adj: list[set[int]] = [set() for _ in range(m)]
    for (u, v) in plain:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    for (u, v, _lab) in labeled:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    dist = {root: 0}
    frontier = deque([root])
    while frontier:
        u = frontier.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                frontier.append(w)
    if len(dist) != m:
        raise ValueError("ball must be connected")

    signals: list[list[tuple]] = [[] for _ in range(m)]
    for (u, v) in plain:
        if u == v:
            signals[u].append((0, "", 0, u))
        else:
            signals[u].append((0, "", 0, v))
            signals[v].append((0, "", 0, u))
    for (u, v, lab) in labeled:
        if u == v:
            signals[u].append((1, lab, 0, u))
        else:
            signals[u].append((1, lab, 1, v))
            signals[v].append((1, lab, -1, u))
    for (u, v) in distinguished:
        if u == v:
            signals[u].append((2, "", 0, u))
        else:
            signals[u].append((2, "", 0, v))
            signals[v].append((2, "", 0, u))

    init_keys = [(dist[v], colors[v] if colors is not None else 0) for v in range(m)]
    order = sorted(set(init_keys))
    remap = {k: i for i, k in enumerate(order)}
    init = [remap[init_keys[v]] for v in range(m)]

    color_values = tuple(colors) if colors is not None else None

    def serialize(inv: tuple[int, ...]) -> bytes:
        e = tuple(sorted(_norm_edge(inv[u], inv[v]) for (u, v) in plain))
        le = tuple(sorted((inv[u], inv[v], lab) for (u, v, lab) in labeled))
        de = tuple(sorted(_norm_edge(inv[u], inv[v]) for (u, v) in distinguished))
        cv = tuple(color_values[v] for v in sorted(range(m), key=lambda x: inv[x])) \
            if color_values is not None else None
        return repr(("rb", radius, m, cv, e, le, de)).encode("utf-8")

    inv, code = _search_canonical(init, signals, m, serialize)
    edges = tuple(sorted(_norm_edge(inv[u], inv[v]) for (u, v) in plain))
    lab_edges = tuple(sorted((inv[u], inv[v], lab) for (u, v, lab) in labeled)) \
        if labeled else None
    dis_edges = tuple(sorted(_norm_edge(inv[u], inv[v]) for (u, v) in distinguished)) \
        if distinguished else None
    col = None
    if color_values is not None:
        col = tuple(color_values[v] for v in sorted(range(m), key=lambda x: inv[x]))
    ball_obj = RootedBall(radius, m, edges, col, lab_edges, dis_edges)
    return ball_obj, code


def ball(
    g: Graph,
    v: int,
    r: int,
    colors: Optional[Coloring | Sequence[int]] = None,
    labels: Optional[Sequence[tuple[str, int]]] = None,
    distinguished: Optional[Iterable[tuple[int, int]]] = None,
) -> RootedBall:
    """Rooted r-ball around v: the induced subgraph on vertices within distance r.

    ``colors`` is a per-vertex color sequence (or Coloring) on g; ``labels``
    aligns with g.edges, each entry (label, direction) with direction +1 for
    the stored (u, v) orientation, -1 for the reverse, 0 for loops;
    ``distinguished`` is an extra set of vertex pairs (not necessarily edges)
    restricted to pairs inside the ball.
    """
    if not (0 <= v < g.n):
        raise ValueError(f"vertex {v} out of range for n={g.n}")
    if r < 0:
        raise ValueError("radius must be nonnegative")
    col_seq: Optional[Sequence[int]] = None
    if colors is not None:
        col_seq = colors.assignment if isinstance(colors, Coloring) else colors
        if len(col_seq) != g.n:
            raise ValueError("coloring must cover all vertices")
    dist = g.ball_distances(v, r)
    keep = sorted(dist)
    local = {u: i for i, u in enumerate(keep)}
    plain: list[tuple[int, int]] = []
    labeled: list[tuple[int, int, str]] = []
    for idx, (a, b) in enumerate(g.edges):
        if a in dist and b in dist:
            if labels is not None:
                lab, direction = labels[idx]
                if direction >= 0:
                    labeled.append((local[a], local[b], lab))
                else:
                    labeled.append((local[b], local[a], lab))
            else:
                plain.append((local[a], local[b]))
    disting: list[tuple[int, int]] = []
    if distinguished is not None:
        seen = set()
        for (a, b) in distinguished:
            if a in dist and b in dist:
                p = _norm_edge(local[a], local[b])
                if p not in seen:
                    seen.add(p)
                    disting.append(p)
    loc_colors = tuple(col_seq[u] for u in keep) if col_seq is not None else None
    return _canonical_ball(r, len(keep), local[v], plain, labeled,
                           loc_colors, disting)[0]


@lru_cache(maxsize=1 << 16)
def canonical_code(b: RootedBall) -> CanonicalCode:
    """Deterministic byte code; equal codes iff decorated rooted isomorphism."""
    return _canonical_ball(
        b.radius, b.vertex_count, 0, b.edges, b.edge_labels or (),
        b.vertex_colors, b.distinguished or (),
    )[1]


# ---------------------------------------------------------------------------
# structural queries
# ---------------------------------------------------------------------------


def girth(g: Graph) -> float:
    """Length of the shortest cycle; math.inf for forests.

    A loop gives girth 1, a parallel edge pair girth 2.
    """
    if any(u == v for (u, v) in g.edges):
        return 1
    if any(c >= 2 for c in g.edge_multiplicity.values()):
        return 2
    best = math.inf
    adj = g.adjacency
    for s in range(g.n):
        dist = {s: 0}
        parent = {s: -1}
        frontier = deque([s])
        while frontier:
            u = frontier.popleft()
            if 2 * dist[u] >= best - 1:
                continue
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    frontier.append(w)
                elif parent[u] != w:
                    best = min(best, dist[u] + dist[w] + 1)
    return best


def connected_components(g: Graph) -> tuple[tuple[int, ...], ...]:
    """Vertex partition into components, each sorted, ordered by least vertex."""
    seen = [False] * g.n
    out: list[tuple[int, ...]] = []
    adj = g.adjacency
    for s in range(g.n):
        if seen[s]:
            continue
        comp = [s]
        seen[s] = True
        frontier = deque([s])
        while frontier:
            u = frontier.popleft()
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    frontier.append(w)
        out.append(tuple(sorted(comp)))
    return tuple(out)


def greedy_distance_color_bound(degree_bound: int, d: int) -> int:
    """Loose bound on the colors a greedy distance-d coloring may use."""
    if degree_bound <= 0 or d <= 0:
        return 1
    size = 1
    shell = degree_bound
    for _ in range(d):
        size += shell
        shell *= max(degree_bound - 1, 1)
    return size


def power_distance_coloring(g: Graph, d: int) -> Coloring:
    """Greedy proper coloring of the distance-<=d relation.

    Any two distinct vertices at distance at most d receive distinct colors;
    ties are broken lowest-id-first, so the result is deterministic.
    """
    if d < 1:
        raise ValueError("d must be positive")
    assignment = [0] * g.n
    for v in range(g.n):
        near = g.ball_distances(v, d)
        used = {assignment[u] for u in near if u != v and assignment[u] > 0}
        c = 1
        while c in used:
            c += 1
        assignment[v] = c
    k = max(assignment, default=0) or 1
    return Coloring(tuple(assignment), k)


# ---------------------------------------------------------------------------
# text format: "graph <n> <m> <D>" header then "<u> <v>" lines, '#' comments
# ---------------------------------------------------------------------------


def format_graph(g: Graph) -> str:
    lines = [f"graph {g.n} {g.edge_count} {g.degree_bound}"]
    lines.extend(f"{u} {v}" for (u, v) in g.edges)
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Graph:
    header = None
    edges: list[tuple[int, int]] = []
    expected = None
    n = d = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            parts = line.split()
            if len(parts) != 4 or parts[0] != "graph":
                raise GraphFormatError("expected header 'graph <n> <m> <D>'", lineno)
            try:
                n, expected, d = int(parts[1]), int(parts[2]), int(parts[3])
            except ValueError:
                raise GraphFormatError("non-integer header field", lineno) from None
            header = lineno
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError("expected edge line '<u> <v>'", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError("non-integer vertex id", lineno) from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"vertex id out of range 0..{n - 1}", lineno)
        edges.append((u, v))
    if header is None:
        raise GraphFormatError("missing header", 1)
    if expected != len(edges):
        raise GraphFormatError(
            f"header declares {expected} edges, found {len(edges)}", header)
    try:
        return Graph(n, tuple(edges), d)
    except ValueError as exc:
        raise GraphFormatError(str(exc), header) from None


def load_graph(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())


def save_graph(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_graph(g))


# ---------------------------------------------------------------------------
# small constructors used across the test corpus and the CLI families
# ---------------------------------------------------------------------------


def cycle_graph(n: int) -> Graph:
    if n < 1:
        raise ValueError("n >= 1")
    if n == 1:
        return Graph(1, ((0, 0),))
    if n == 2:
        return Graph(2, ((0, 1), (0, 1)))
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def star_graph(leaves: int) -> Graph:
    return Graph(leaves + 1, tuple((0, i) for i in range(1, leaves + 1)))


def torus_graph(mx: int, my: int) -> Graph:
    """mx-by-my discrete torus; note m=1 or 2 sides produce loops/multi-edges."""

    def vid(x: int, y: int) -> int:
        return (x % mx) * my + (y % my)

    edges = []
    for x in range(mx):
        for y in range(my):
            edges.append(_norm_edge(vid(x, y), vid(x + 1, y)))
            edges.append(_norm_edge(vid(x, y), vid(x, y + 1)))
    return Graph(mx * my, tuple(edges))


def petersen_graph() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph(10, tuple(outer + spokes + inner))


def disjoint_union(a: Graph, b: Graph) -> Graph:
    shift = a.n
    edges = a.edges + tuple((u + shift, v + shift) for (u, v) in b.edges)
    return Graph(a.n + b.n, edges, max(a.degree_bound, b.degree_bound))
