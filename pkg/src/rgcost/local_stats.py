"""Neighborhood statistics, total-variation distance, and coloring transfer.

Distributions are empirical: the canonical code of the (optionally colored)
r-ball of a uniform random vertex.  Weights are exact fractions internally;
JSON serialization uses float decimals.
"""

from __future__ import annotations

import base64
import json
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .graph_core import (
    CanonicalCode,
    Coloring,
    Graph,
    _canonical_ball,
    power_distance_coloring,
)

MASS_TOLERANCE = Fraction(1, 10**12)


@dataclass(frozen=True)
class NeighborhoodDistribution:
    """Probability weights over canonical r-ball codes; color_count 0 = uncolored."""

    radius: int
    color_count: int
    weights: dict[CanonicalCode, Fraction]

    def __post_init__(self):
        total = Fraction(0)
        for code, p in self.weights.items():
            if p < 0:
                raise ValueError(f"negative weight for {code!r}")
            total += p
        if abs(total - 1) > MASS_TOLERANCE:
            raise ValueError(f"total mass {float(total)} not within 1e-12 of 1")

    def support(self) -> tuple[CanonicalCode, ...]:
        return tuple(sorted(self.weights))

    def to_json(self) -> str:
        entries = [
            {"code": base64.b64encode(code).decode("ascii"), "p": float(p)}
            for code, p in sorted(self.weights.items())
        ]
        return json.dumps(
            {"r": self.radius, "k": self.color_count, "entries": entries},
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "NeighborhoodDistribution":
        data = json.loads(text)
        weights = {
            base64.b64decode(e["code"]): Fraction(repr(float(e["p"])))
            for e in data["entries"]
        }
        return NeighborhoodDistribution(data["r"], data["k"], weights)


class _BallCoder:
    """Precomputed ball structures of one graph at one radius.

    Ensures model_coloring and the distribution functions produce codes
    through the identical canonicalization path.
    """

    def __init__(self, g: Graph, r: int):
        self.g = g
        self.r = r
        self.members: list[tuple[int, ...]] = []
        self.local: list[dict[int, int]] = []
        self.plain: list[tuple[tuple[int, int], ...]] = []
        self.root_local: list[int] = []
        for v in range(g.n):
            dist = g.ball_distances(v, r)
            keep = tuple(sorted(dist))
            loc = {u: i for i, u in enumerate(keep)}
            edges = tuple(
                (loc[a], loc[b]) for (a, b) in g.edges if a in dist and b in dist
            )
            self.members.append(keep)
            self.local.append(loc)
            self.plain.append(edges)
            self.root_local.append(loc[v])
        self._memo: dict[tuple, CanonicalCode] = {}

    def code(self, v: int, colors: Optional[Sequence[int]] = None) -> CanonicalCode:
        keep = self.members[v]
        key_colors = None if colors is None else tuple(colors[u] for u in keep)
        key = (v, key_colors)
        got = self._memo.get(key)
        if got is not None:
            return got
        code = _canonical_ball(
            self.r, len(keep), self.root_local[v], self.plain[v], (),
            key_colors, (),
        )[1]
        self._memo[key] = code
        return code


def neighborhood_distribution(g: Graph, r: int) -> NeighborhoodDistribution:
    """Empirical distribution of uncolored r-ball codes over a uniform vertex."""
    if g.n == 0:
        raise ValueError("empty graph has no neighborhood statistics")
    coder = _BallCoder(g, r)
    counts = Counter(coder.code(v) for v in range(g.n))
    weights = {code: Fraction(c, g.n) for code, c in counts.items()}
    return NeighborhoodDistribution(r, 0, weights)


def colored_neighborhood_distribution(
    g: Graph, r: int, coloring: Coloring
) -> NeighborhoodDistribution:
    if g.n == 0:
        raise ValueError("empty graph has no neighborhood statistics")
    if len(coloring) != g.n:
        raise ValueError("coloring must cover all vertices")
    coder = _BallCoder(g, r)
    counts = Counter(coder.code(v, coloring.assignment) for v in range(g.n))
    weights = {code: Fraction(c, g.n) for code, c in counts.items()}
    return NeighborhoodDistribution(r, coloring.color_count, weights)


def tv_distance(
    a: NeighborhoodDistribution, b: NeighborhoodDistribution
) -> Fraction:
    """Total variation distance as half the L1 difference (exact)."""
    if (a.radius, a.color_count) != (b.radius, b.color_count):
        raise ValueError(
            f"distribution parameters differ: {(a.radius, a.color_count)} "
            f"vs {(b.radius, b.color_count)}"
        )
    keys = set(a.weights) | set(b.weights)
    total = Fraction(0)
    for k in keys:
        total += abs(a.weights.get(k, Fraction(0)) - b.weights.get(k, Fraction(0)))
    return total / 2


def bs_distance(g1: Graph, g2: Graph, r_max: int) -> Fraction:
    """Max over r <= r_max of the uncolored statistic distance."""
    best = Fraction(0)
    for r in range(r_max + 1):
        d = tv_distance(neighborhood_distribution(g1, r),
                        neighborhood_distribution(g2, r))
        if d > best:
            best = d
    return best


# ---------------------------------------------------------------------------
# modeling: find a coloring of the target whose statistics approach a goal
# ---------------------------------------------------------------------------


def _tv_counter(counts: Counter, n: int, goal: NeighborhoodDistribution) -> Fraction:
    keys = set(counts) | set(goal.weights)
    total = Fraction(0)
    for k in keys:
        total += abs(Fraction(counts.get(k, 0), n) - goal.weights.get(k, Fraction(0)))
    return total / 2


def model_coloring(
    target: Graph,
    goal: NeighborhoodDistribution,
    budget: int = 20000,
    seed: int = 0,
    initial: Optional[Sequence[Coloring]] = None,
) -> tuple[Coloring, Fraction]:
    """Greedy single-vertex recolor descent with restarts.

    Starts from supplied colorings, then the constant colorings, then random
    restarts, spending ``budget`` move evaluations in total.  The returned
    distance is recomputed exactly for the returned coloring; it is an upper
    bound on the best achievable model error, not a certified optimum.
    """
    if goal.color_count < 1:
        raise ValueError("goal must be colored (k >= 1)")
    if target.n == 0:
        raise ValueError("cannot model on the empty graph")
    k = goal.color_count
    n = target.n
    rng = random.Random(seed)
    coder = _BallCoder(target, goal.radius)
    touches: list[list[int]] = [[] for _ in range(n)]
    for c in range(n):
        for u in coder.members[c]:
            touches[u].append(c)

    starts: list[list[int]] = []
    for col in initial or ():
        if len(col) == n and col.color_count <= k:
            starts.append(list(col.assignment))
    for c in range(1, k + 1):
        starts.append([c] * n)

    best_assign: Optional[list[int]] = None
    best_tv: Optional[Fraction] = None
    spent = 0

    def evaluate(assign: list[int]) -> tuple[Counter, Fraction]:
        codes = [coder.code(v, assign) for v in range(n)]
        counts = Counter(codes)
        return counts, _tv_counter(counts, n, goal)

    start_idx = 0
    while spent < budget:
        if start_idx < len(starts):
            assign = list(starts[start_idx])
        else:
            assign = [rng.randint(1, k) for _ in range(n)]
        start_idx += 1
        counts, tv = evaluate(assign)
        codes = [coder.code(v, assign) for v in range(n)]
        improved = True
        while improved and spent < budget and tv > 0:
            improved = False
            proposals = [(v, c) for v in range(n) for c in range(1, k + 1)
                         if c != assign[v]]
            rng.shuffle(proposals)
            for (v, c) in proposals:
                if spent >= budget or tv == 0:
                    break
                spent += 1
                old = assign[v]
                assign[v] = c
                delta = Fraction(0)
                changed: list[tuple[int, CanonicalCode, CanonicalCode]] = []
                for center in touches[v]:
                    new_code = coder.code(center, assign)
                    old_code = codes[center]
                    if new_code == old_code:
                        continue
                    changed.append((center, old_code, new_code))
                    for code_key, step in ((old_code, -1), (new_code, +1)):
                        cur = counts.get(code_key, 0)
                        gw = goal.weights.get(code_key, Fraction(0))
                        before = abs(Fraction(cur, n) - gw)
                        after = abs(Fraction(cur + step, n) - gw)
                        counts[code_key] = cur + step
                        delta += after - before
                if delta < 0:
                    tv += delta / 2
                    for center, _oc, nc in changed:
                        codes[center] = nc
                    improved = True
                else:
                    for center, oc, nc in changed:
                        counts[nc] -= 1
                        counts[oc] += 1
                    assign[v] = old
        if best_tv is None or tv < best_tv:
            best_tv = tv
            best_assign = list(assign)
        if best_tv == 0:
            break
        if start_idx >= len(starts) and spent >= budget:
            break

    assert best_assign is not None
    result = Coloring(tuple(best_assign), k)
    achieved = tv_distance(
        colored_neighborhood_distribution(target, goal.radius, result), goal
    )
    return result, achieved


@dataclass(frozen=True)
class ColoringFamilies:
    """Coloring probes for the local-global distance estimate."""

    random_count: int = 6
    use_distance_coloring: bool = True
    use_partition_indicators: bool = True
    user: tuple[Coloring, ...] = ()


def _tile_coloring(col: Coloring, n: int) -> Coloring:
    src = col.assignment
    return Coloring(tuple(src[i % len(src)] for i in range(n)), col.color_count)


def _probe_colorings(
    g: Graph, k: int, families: ColoringFamilies, rng: random.Random
) -> list[Coloring]:
    probes: list[Coloring] = []
    for _ in range(families.random_count):
        probes.append(Coloring(tuple(rng.randint(1, k) for _ in range(g.n)), k))
    if families.use_distance_coloring and g.n > 0:
        dc = power_distance_coloring(g, 1)
        probes.append(
            Coloring(tuple((c - 1) % k + 1 for c in dc.assignment), k)
        )
    if families.use_partition_indicators and g.n >= k:
        from .trichotomy import balanced_partition  # deferred: higher layer

        part = balanced_partition(g, k, epsilon=0.5, budget=2000, seed=rng.randint(0, 10**6))
        probes.append(Coloring(tuple(b + 1 for b in part.assignment), k))
    for col in families.user:
        if len(col) == g.n and col.color_count == k:
            probes.append(col)
    return probes


def lg_distance_estimate(
    g1: Graph,
    g2: Graph,
    r: int,
    k: int,
    families: Optional[ColoringFamilies] = None,
    budget: int = 8000,
    seed: int = 0,
) -> tuple[Fraction, Fraction]:
    """Heuristic lower / crude upper bound on the local-global Hausdorff distance.

    The lower value is the largest residual of modeling a probed coloring of
    one graph on the other (a true lower bound only if modeling were exact,
    hence "heuristic lower").  The upper value is the trivial certified bound:
    0 for identical graphs, else 1.
    """
    families = families or ColoringFamilies()
    rng = random.Random(seed)
    lower = Fraction(0)
    for a, b in ((g1, g2), (g2, g1)):
        for col in _probe_colorings(a, k, families, rng):
            goal = colored_neighborhood_distribution(a, r, col)
            initial = [_tile_coloring(col, b.n)]
            _psi, achieved = model_coloring(
                b, goal, budget=budget, seed=rng.randint(0, 10**9), initial=initial
            )
            if achieved > lower:
                lower = achieved
    same = g1.vertex_count == g2.vertex_count and g1.edges == g2.edges
    upper = Fraction(0) if same else Fraction(1)
    return lower, upper
