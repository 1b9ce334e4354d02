import math
import random
from collections import deque

import pytest
from hypothesis import given, settings, strategies as st

from rgcost import (
    Coloring,
    Graph,
    GraphFormatError,
    ball,
    canonical_code,
    connected_components,
    cycle_graph,
    complete_graph,
    disjoint_union,
    format_graph,
    girth,
    parse_graph,
    path_graph,
    petersen_graph,
    power_distance_coloring,
    star_graph,
    torus_graph,
)
from _corpus import random_bounded_graph


def bfs_ball_size(g: Graph, v: int, r: int) -> int:
    """Independent BFS oracle over deduplicated adjacency."""
    dist = {v: 0}
    q = deque([v])
    while q:
        u = q.popleft()
        if dist[u] >= r:
            continue
        for (a, b) in g.edges:
            for x, y in ((a, b), (b, a)):
                if x == u and y not in dist:
                    dist[y] = dist[u] + 1
                    q.append(y)
    return len(dist)


def brute_girth(g: Graph) -> float:
    """Exhaustive shortest-cycle search by DFS over walks."""
    if any(u == v for (u, v) in g.edges):
        return 1
    from collections import Counter

    if any(c >= 2 for c in Counter(g.edges).values()):
        return 2
    best = math.inf
    edges = list(enumerate(g.edges))

    def extend(path, used):
        nonlocal best
        if len(path) - 1 >= best:
            return
        head = path[-1]
        for idx, (a, b) in edges:
            if idx in used:
                continue
            if head == a:
                nxt = b
            elif head == b:
                nxt = a
            else:
                continue
            if nxt == path[0] and len(path) >= 3:
                best = min(best, len(path))
            elif nxt not in path:
                extend(path + [nxt], used | {idx})

    for s in range(g.n):
        extend([s], frozenset())
    return best


class TestGraph:
    def test_edges_normalized_and_sorted(self):
        g = Graph(4, ((3, 1), (0, 2), (1, 3)))
        assert g.edges == ((0, 2), (1, 3), (1, 3))

    def test_degree_counts_loops_twice(self):
        g = Graph(2, ((0, 0), (0, 1)))
        assert g.degree(0) == 3
        assert g.degree(1) == 1

    def test_degree_bound_enforced(self):
        with pytest.raises(ValueError):
            Graph(3, ((0, 1), (0, 2), (1, 2)), degree_bound=1)

    def test_vertex_range_checked(self):
        with pytest.raises(ValueError):
            Graph(2, ((0, 5),))

    def test_loops_do_not_shorten_distances(self):
        g = Graph(3, ((0, 0), (0, 1), (1, 2)))
        assert g.distance(0, 2) == 2


class TestBall:
    def test_cycle_r1_is_rooted_path(self):
        g = cycle_graph(6)
        for v in range(6):
            b = ball(g, v, 1)
            assert b.vertex_count == 3
            assert b.edges == ((0, 1), (0, 2))

    def test_star_center_r1(self):
        b = ball(star_graph(3), 0, 1)
        assert b.vertex_count == 4
        assert all(0 in e for e in b.edges)

    def test_petersen_r2_ball_has_ten_vertices(self):
        g = petersen_graph()
        for v in range(10):
            assert bfs_ball_size(g, v, 2) == 10  # oracle: 1 + 3 + 6
            assert ball(g, v, 2).vertex_count == 10

    def test_invalid_vertex(self):
        with pytest.raises(ValueError):
            ball(cycle_graph(3), 7, 1)

    def test_nesting(self):
        rng = random.Random(5)
        for _ in range(20):
            g = random_bounded_graph(rng, rng.randint(4, 9), 3)
            v = rng.randrange(g.n)
            r = rng.randint(0, 3)
            inner = ball(g, v, r)
            outer = ball(g, v, r + 1)
            assert outer.restricted(r) == inner

    def test_distinguished_pairs_survive(self):
        g = cycle_graph(5)
        b = ball(g, 0, 2, distinguished=[(0, 2)])
        assert b.distinguished and len(b.distinguished) == 1


class TestCanonicalCode:
    def test_isomorphic_rooted_paths_share_code(self):
        a = ball(path_graph(3), 1, 1)
        b = ball(path_graph(5), 2, 1)
        assert canonical_code(a) == canonical_code(b)

    def test_cycle_ball_equals_path_midpoint_ball(self):
        # both are rooted 3-paths; explicit isomorphism: center to center
        a = ball(cycle_graph(6), 0, 1)
        b = ball(path_graph(3), 1, 1)
        assert canonical_code(a) == canonical_code(b)

    def test_colorings_distinguish(self):
        g = path_graph(3)
        b1 = ball(g, 1, 1, colors=[1, 1, 2])
        b2 = ball(g, 1, 1, colors=[1, 1, 1])
        assert canonical_code(b1) != canonical_code(b2)

    def test_round_trip_stability(self):
        rng = random.Random(9)
        for _ in range(20):
            g = random_bounded_graph(rng, rng.randint(4, 9), 3)
            b = ball(g, rng.randrange(g.n), 2)
            again = ball(
                Graph(b.vertex_count, b.edges), 0, b.radius
            )
            assert canonical_code(again) == canonical_code(b)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=4, max_value=9))
    def test_relabeling_invariance(self, seed, n):
        rng = random.Random(seed)
        g = random_bounded_graph(rng, n, 3)
        perm = list(range(n))
        rng.shuffle(perm)
        relabeled = Graph(
            n, tuple((perm[u], perm[v]) for (u, v) in g.edges), g.degree_bound
        )
        colors = [rng.randint(1, 2) for _ in range(n)]
        relabeled_colors = [0] * n
        for v in range(n):
            relabeled_colors[perm[v]] = colors[v]
        for v in range(n):
            c1 = canonical_code(ball(g, v, 2, colors=colors))
            c2 = canonical_code(ball(relabeled, perm[v], 2, colors=relabeled_colors))
            assert c1 == c2

    def test_labeled_direction_matters(self):
        g = path_graph(2)
        b1 = ball(g, 0, 1, labels=[("a", 1)])
        b2 = ball(g, 0, 1, labels=[("a", -1)])
        assert canonical_code(b1) != canonical_code(b2)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=10**6))
    def test_full_decoration_relabeling_invariance(self, seed):
        rng = random.Random(seed)
        n = rng.randint(4, 8)
        g = random_bounded_graph(rng, n, 3)
        labels = [(rng.choice("ab"), rng.choice((1, -1)) if u != v else 0)
                  for (u, v) in g.edges]
        colors = [rng.randint(1, 3) for _ in range(n)]
        pairs = []
        for _ in range(rng.randint(0, 3)):
            u, v = rng.randrange(n), rng.randrange(n)
            if u != v:
                pairs.append((u, v))
        perm = list(range(n))
        rng.shuffle(perm)
        g2 = Graph(n, tuple((perm[u], perm[v]) for (u, v) in g.edges),
                   g.degree_bound)
        # align label records with g2's sorted edge order
        records = sorted(
            zip(((min(perm[u], perm[v]), max(perm[u], perm[v]))
                 for (u, v) in g.edges),
                ((lab, (d if (perm[u] <= perm[v]) == (u <= v) else -d))
                 for (lab, d), (u, v) in zip(labels, g.edges))),
            key=lambda rec: rec[0],
        )
        labels2 = [rec[1] for rec in records]
        colors2 = [0] * n
        for v in range(n):
            colors2[perm[v]] = colors[v]
        pairs2 = [(perm[u], perm[v]) for (u, v) in pairs]
        for v in range(n):
            c1 = canonical_code(ball(g, v, 2, colors=colors,
                                     labels=labels, distinguished=pairs))
            c2 = canonical_code(ball(g2, perm[v], 2, colors=colors2,
                                     labels=labels2, distinguished=pairs2))
            assert c1 == c2


def brute_isomorphic(b1, b2) -> bool:
    """All-permutations decorated rooted isomorphism oracle."""
    from itertools import permutations
    from collections import Counter

    if (b1.vertex_count != b2.vertex_count or b1.radius != b2.radius
            or (b1.vertex_colors is None) != (b2.vertex_colors is None)):
        return False
    m = b1.vertex_count
    e2 = Counter(b2.edges)
    d2 = set(b2.distinguished or ())
    l2 = Counter(b2.edge_labels or ())
    for perm in permutations(range(1, m)):
        full = (0,) + perm  # root must map to root
        if b1.vertex_colors is not None:
            if any(b1.vertex_colors[v] != b2.vertex_colors[full[v]]
                   for v in range(m)):
                continue
        mapped = Counter(tuple(sorted((full[u], full[v]))) for (u, v) in b1.edges)
        if mapped != e2:
            continue
        mapped_d = {tuple(sorted((full[u], full[v])))
                    for (u, v) in (b1.distinguished or ())}
        if mapped_d != d2:
            continue
        mapped_l = Counter((full[u], full[v], lab)
                           for (u, v, lab) in (b1.edge_labels or ()))
        if mapped_l != l2:
            continue
        return True
    return False


class TestCodeAgainstBruteIsomorphism:
    def test_code_equality_matches_brute_force(self):
        rng = random.Random(71)
        balls = []
        for _ in range(28):
            g = random_bounded_graph(rng, rng.randint(3, 6), 3)
            v = rng.randrange(g.n)
            colors = None
            if rng.random() < 0.5:
                colors = [rng.randint(1, 2) for _ in range(g.n)]
            pairs = []
            if rng.random() < 0.5:
                a, b = rng.randrange(g.n), rng.randrange(g.n)
                if a != b:
                    pairs.append((a, b))
            balls.append(ball(g, v, rng.randint(1, 2), colors=colors,
                              distinguished=pairs))
        checked = 0
        for i in range(len(balls)):
            for j in range(i + 1, len(balls)):
                b1, b2 = balls[i], balls[j]
                if b1.vertex_count > 6 or b2.vertex_count > 6:
                    continue
                same_code = canonical_code(b1) == canonical_code(b2)
                assert same_code == brute_isomorphic(b1, b2)
                checked += 1
        assert checked > 100


class TestGirth:
    def test_examples(self):
        assert girth(cycle_graph(5)) == 5
        assert girth(path_graph(6)) == math.inf
        assert girth(petersen_graph()) == 5

    def test_loop_and_parallel(self):
        assert girth(Graph(2, ((0, 0), (0, 1)))) == 1
        assert girth(Graph(2, ((0, 1), (0, 1)))) == 2

    def test_against_brute_force(self):
        rng = random.Random(3)
        for _ in range(25):
            g = random_bounded_graph(rng, rng.randint(4, 8), 3)
            assert girth(g) == brute_girth(g)


class TestPowerDistanceColoring:
    def test_single_vertex(self):
        c = power_distance_coloring(Graph(1, ()), 3)
        assert c.assignment == (1,)

    def test_c7_d3_all_distinct(self):
        # diameter of C_7 is 3, so every pair conflicts
        c = power_distance_coloring(cycle_graph(7), 3)
        assert len(set(c.assignment)) == 7

    def test_c6_d1_proper(self):
        g = cycle_graph(6)
        c = power_distance_coloring(g, 1)
        for (u, v) in g.edges:
            assert c[u] != c[v]

    def test_distance_property_exhaustive(self):
        rng = random.Random(11)
        for _ in range(15):
            g = random_bounded_graph(rng, rng.randint(4, 10), 3)
            d = rng.randint(1, 3)
            c = power_distance_coloring(g, d)
            for u in range(g.n):
                for v in range(u + 1, g.n):
                    if g.distance(u, v, cap=d) <= d:
                        assert c[u] != c[v]

    def test_color_count_within_greedy_bound(self):
        from rgcost.graph_core import greedy_distance_color_bound

        rng = random.Random(31)
        for _ in range(10):
            g = random_bounded_graph(rng, rng.randint(4, 10), 3)
            d = rng.randint(1, 3)
            c = power_distance_coloring(g, d)
            assert c.color_count <= greedy_distance_color_bound(g.degree_bound, d)


class TestComponents:
    def test_connected_single_block(self):
        assert connected_components(cycle_graph(5)) == (tuple(range(5)),)

    def test_two_cycles(self):
        g = disjoint_union(cycle_graph(3), cycle_graph(4))
        comps = connected_components(g)
        assert sorted(len(c) for c in comps) == [3, 4]

    def test_edgeless(self):
        g = Graph(4, ())
        assert connected_components(g) == ((0,), (1,), (2,), (3,))


class TestTextFormat:
    def test_round_trip_graph_to_text(self):
        rng = random.Random(2)
        for _ in range(10):
            g = random_bounded_graph(rng, rng.randint(3, 8), 3)
            assert parse_graph(format_graph(g)) == g

    def test_round_trip_text_bit_exact(self):
        g = Graph(4, ((0, 1), (1, 2), (2, 3), (0, 0)), 4)
        text = format_graph(g)
        assert format_graph(parse_graph(text)) == text

    def test_comments_and_loops(self):
        text = "# a comment\ngraph 2 2 4\n0 0  # loop\n0 1\n"
        g = parse_graph(text)
        assert g.edges == ((0, 0), (0, 1))

    def test_error_carries_line_number(self):
        with pytest.raises(GraphFormatError) as err:
            parse_graph("graph 2 1 2\n0 7\n")
        assert err.value.line == 2

    def test_header_mismatch(self):
        with pytest.raises(GraphFormatError):
            parse_graph("graph 2 3 2\n0 1\n")


class TestConstructors:
    def test_torus_is_4_regular(self):
        g = torus_graph(4, 4)
        assert set(g.degrees) == {4}
        assert g.edge_count == 32

    def test_small_torus_multiedges(self):
        g = torus_graph(2, 2)
        assert g.edge_count == 8
        assert set(g.degrees) == {4}

    def test_complete(self):
        assert complete_graph(4).edge_count == 6
