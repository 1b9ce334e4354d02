import random
import warnings
from fractions import Fraction

import pytest

from rgcost import (
    CosetLimitError,
    IntransitiveActionError,
    Presentation,
    PresentationFormatError,
    SchreierGraph,
    abelianized_rank,
    builtin_family,
    canonical_code,
    ball,
    check_relators,
    farber_statistic,
    parse_presentation,
    parse_subgroup_words,
    rank_gradient_table,
    rank_quotient,
    reidemeister_schreier,
    schreier_from_permutations,
    tietze_simplify,
    todd_coxeter,
    verify_generators,
)
from rgcost.schreier import cyclic_reduce, free_reduce, word_inverse

F = Fraction


class TestWords:
    def test_free_reduce(self):
        assert free_reduce("aA") == ""
        assert free_reduce("abBA") == ""
        assert free_reduce("abAB") == "abAB"

    def test_cyclic_reduce(self):
        assert cyclic_reduce("Aba") == "b"
        assert cyclic_reduce("abA") == "b"

    def test_inverse(self):
        assert word_inverse("ab") == "BA"
        assert free_reduce("ab" + word_inverse("ab")) == ""


class TestParsePresentation:
    def test_cyclic_group(self):
        p = parse_presentation("gens: a\nrel: aaaaa\n")
        assert p.generators == ("a",) and p.relators == ("aaaaa",)

    def test_z2(self):
        p = parse_presentation("gens: a b\nrel: abAB\n")
        assert p.relators == ("abAB",)

    def test_free_group(self):
        p = parse_presentation("gens: a b\n")
        assert p.relators == ()

    def test_unreduced_relator_warns(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            p = parse_presentation("gens: a b\nrel: abBaa\n")
        assert p.relators == ("aaa",)
        assert any("reduced" in str(w.message) for w in caught)

    def test_malformed(self):
        with pytest.raises(PresentationFormatError):
            parse_presentation("nonsense\n")
        with pytest.raises(PresentationFormatError):
            parse_presentation("gens: a\nrel: ax\n")

    def test_subgroup_words(self):
        assert parse_subgroup_words("sub: aa\n# c\nsub: b\n") == ("aa", "b")


class TestToddCoxeter:
    def test_cyclic_five(self):
        sch = todd_coxeter(Presentation(("a",), ("aaaaa",)), ())
        assert sch.n == 5
        # the a-action is a single 5-cycle
        perm = sch.perms["a"]
        seen, c = [], 0
        for _ in range(5):
            seen.append(c)
            c = perm[c]
        assert sorted(seen) == list(range(5)) and c == 0

    def test_s3_subgroup_index_two(self):
        p = Presentation(("a", "b"), ("aa", "bbb", "abab"))
        assert todd_coxeter(p, ("b",)).n == 2

    def test_z2_sublattice(self):
        p = Presentation(("a", "b"), ("abAB",))
        sch = todd_coxeter(p, ("aaa", "bbb"))
        assert sch.n == 9
        assert check_relators(sch, p).passed

    def test_relator_order_invariance(self):
        p1 = Presentation(("a", "b"), ("aa", "bbb", "abab"))
        p2 = Presentation(("a", "b"), ("abab", "aa", "bbb"))
        s1 = todd_coxeter(p1, ("a",))
        s2 = todd_coxeter(p2, ("a",))
        assert s1.n == s2.n
        assert s1.perms == s2.perms

    def test_cap_exceeded(self):
        with pytest.raises(CosetLimitError):
            todd_coxeter(Presentation(("a", "b")), (), max_cosets=50)

    def test_trivial_group(self):
        sch = todd_coxeter(Presentation(("a",), ("a",)), ())
        assert sch.n == 1


class TestSchreierFromPermutations:
    def test_cycle(self):
        sch = schreier_from_permutations({"a": tuple((i + 1) % 6 for i in range(6))})
        assert sch.n == 6 and sch.is_transitive()

    def test_random_pair_valid(self):
        fam = builtin_family("F2-random", (30,), seed=3)
        sch = fam.graphs[0]
        g = sch.to_graph()
        assert set(g.degrees) == {4}

    def test_intransitive_rejected(self):
        with pytest.raises(IntransitiveActionError) as err:
            schreier_from_permutations({"a": (0, 1)})
        assert len(err.value.orbits) == 2

    def test_non_permutation_rejected(self):
        with pytest.raises(ValueError):
            schreier_from_permutations({"a": (0, 0)})


class TestCheckRelators:
    def test_todd_coxeter_output_passes(self):
        p = Presentation(("a", "b"), ("aa", "bbb", "abab"))
        assert check_relators(todd_coxeter(p, ("b",)), p).passed

    def test_free_presentation_always_passes(self):
        fam = builtin_family("Z2-torus", (3,))
        assert check_relators(fam.graphs[0], Presentation(("a", "b"))).passed

    def test_random_fails_z2(self):
        fam = builtin_family("F2-random", (40,), seed=9)
        verdict = check_relators(fam.graphs[0], Presentation(("a", "b"), ("abAB",)))
        assert not verdict.passed
        relator, coset = verdict.failing
        assert relator == "abAB" and 0 <= coset < 40


class TestReidemeisterSchreier:
    def test_f2_index_three(self):
        sch = SchreierGraph(("a", "b"), 3, {"a": (1, 2, 0), "b": (0, 1, 2)})
        sp = reidemeister_schreier(sch, Presentation(("a", "b")))
        assert sp.generator_count == 4  # Nielsen-Schreier: 3(2-1)+1

    def test_cyclic_five_lifts(self):
        p = Presentation(("a",), ("aaaaa",))
        sch = todd_coxeter(p, ())
        sp = reidemeister_schreier(sch, p)
        assert sp.generator_count == 1
        assert len(sp.relators) == 5
        assert all(w == (1,) for w in sp.relators)

    def test_torus_lifted_commutators(self):
        p = Presentation(("a", "b"), ("abAB",))
        sch = builtin_family("Z2-torus", (3,)).graphs[0]
        sp = reidemeister_schreier(sch, p)
        assert len(sp.relators) == 9
        assert all(len(w) <= 4 for w in sp.relators)

    def test_nielsen_schreier_on_random_actions(self):
        p = Presentation(("a", "b"))
        for seed in range(5):
            fam = builtin_family("F2-random", (10 + 7 * seed,), seed=seed)
            sch = fam.graphs[0]
            sp = reidemeister_schreier(sch, p)
            n = sch.n
            assert sp.generator_count == n * 2 - (n - 1)
            assert sp.generator_count == n * (2 / 2 - 1) + 1 + n  # index(|S|/2-1)+1

    def test_transversal_prefix_closed(self):
        fam = builtin_family("Z2-torus", (4,))
        sch = fam.graphs[0]
        sp = reidemeister_schreier(sch, fam.presentation)
        assert sp.transversal[sch.root] == ""
        for coset, word in enumerate(sp.transversal):
            assert sch.apply(word, sch.root) == coset
            if word:
                parent = sch.apply(word[1:], sch.root)
                assert sp.transversal[parent] == word[1:]

    def test_tree_generators_trivial(self):
        fam = builtin_family("Z2-torus", (3,))
        sch = fam.graphs[0]
        sp = reidemeister_schreier(sch, fam.presentation)
        from rgcost.schreier import free_reduce as fr

        for (s, c) in sp.tree:
            target = sch.perms[s][c]
            word = word_inverse(sp.transversal[target]) + s + sp.transversal[c]
            assert fr(word) == ""

    def test_traces_are_closed_walks_spelling_relators(self):
        fam = builtin_family("Z2-torus", (3,))
        sch = fam.graphs[0]
        sp = reidemeister_schreier(sch, fam.presentation)
        gen_index = {inst: i for i, inst in enumerate(sp.generator_edges)}
        from rgcost.schreier import _free_reduce_signed

        for (relator, coset), trace, word in zip(
            sp.relator_sources, sp.traces, sp.relators
        ):
            # closed walk
            cur = coset
            for (s, c, sign) in trace:
                if sign > 0:
                    assert c == cur
                    cur = sch.perms[s][c]
                else:
                    assert sch.perms[s][c] == cur
                    cur = c
            assert cur == coset
            # non-tree factors in reverse crossing order spell the relator
            factors = [
                sign * (gen_index[(s, c)] + 1)
                for (s, c, sign) in trace
                if (s, c) in gen_index
            ]
            assert _free_reduce_signed(tuple(reversed(factors))) == word


def presentation_from_signed(gen_count, relators):
    """Rebuild a letter presentation from signed-integer relator words."""
    assert gen_count <= 26
    letters = "abcdefghijklmnopqrstuvwxyz"[:gen_count]
    words = []
    for w in relators:
        words.append("".join(letters[abs(x) - 1] if x > 0
                             else letters[abs(x) - 1].upper() for x in w))
    return Presentation(tuple(letters), tuple(words))


class TestSubgroupPresentationRoundTrip:
    """The presentation of a finite-index subgroup of a finite group must
    enumerate (trivial subgroup) to exactly |H| = |G| / index."""

    CASES = [
        # (presentation, subgroup words, |G|)
        (Presentation(("a", "b"), ("aa", "bbb", "abab")), ("b",), 6),     # S3
        (Presentation(("a", "b"), ("aa", "bbb", "abab")), ("a",), 6),
        (Presentation(("a",), ("a" * 12,)), ("aaaa",), 12),               # Z/12
        (Presentation(("a", "b"), ("aaaa", "bbAA", "Baba")), ("b",), 8),  # Q8
        (Presentation(("a", "b"), ("aa", "bbbbbb", "abab")), ("ab",), 12),  # D6
    ]

    def test_round_trip_orders(self):
        for p, words, order in self.CASES:
            sch = todd_coxeter(p, words)
            sp = reidemeister_schreier(sch, p)
            sub_order = order // sch.n
            rebuilt = presentation_from_signed(sp.generator_count, sp.relators)
            assert todd_coxeter(rebuilt, ()).n == sub_order

    def test_klein_bottle_subgroups(self):
        kb = Presentation(("a", "b"), ("abaB",))
        cover = reidemeister_schreier(todd_coxeter(kb, ("a", "bb")), kb)
        assert abelianized_rank(cover) == 2  # orientation cover is Z^2
        klein_again = reidemeister_schreier(todd_coxeter(kb, ("b", "aa")), kb)
        assert abelianized_rank(klein_again) == 1  # Z + Z/2 abelianization


class TestTietzeAndRank:
    def test_free_unchanged(self):
        _simplified, d = tietze_simplify((4, []))
        assert d == 4

    def test_single_occurrence_elimination(self):
        # <x, y | x> -> rank 1
        _simplified, d = tietze_simplify((2, [(1,)]))
        assert d == 1

    def test_zero_budget_leaves_presentation_alone(self):
        _simplified, d = tietze_simplify((3, [(1,), (2, 3)]), budget=0)
        assert d == 3

    def test_torus_subgroup_floor(self):
        p = Presentation(("a", "b"), ("abAB",))
        sch = builtin_family("Z2-torus", (2,)).graphs[0]
        sp = reidemeister_schreier(sch, p)
        _simplified, d_up = tietze_simplify(sp)
        assert d_up >= 2
        assert abelianized_rank(sp) == 2

    def test_abelianized_examples(self):
        assert abelianized_rank((4, [])) == 4
        assert abelianized_rank(Presentation(("x",), ("xx",))) == 0
        for m in (2, 3, 5):
            p = Presentation(("a", "b"), ("abAB",))
            sch = builtin_family("Z2-torus", (m,)).graphs[0]
            sp = reidemeister_schreier(sch, p)
            assert abelianized_rank(sp) == 2

    def test_abelianized_never_exceeds_tietze(self):
        p = Presentation(("a", "b"), ("abAB",))
        for m in (2, 3, 4):
            sch = builtin_family("Z2-torus", (m,)).graphs[0]
            sp = reidemeister_schreier(sch, p)
            _s, d_up = tietze_simplify(sp)
            assert abelianized_rank(sp) <= d_up

    def test_rank_quotient(self):
        assert rank_quotient(4, 3) == 1
        assert rank_quotient(1, 17) == 0
        assert rank_quotient(2, 4) == F(1, 4)


class TestRankGradientTable:
    def test_free_group_rows(self):
        p = Presentation(("a", "b"))
        fam = builtin_family("F2-random", (12, 20), seed=2)
        rows = rank_gradient_table(p, fam.graphs)
        for row in rows:
            assert row.d_exact
            assert row.d_lower == row.d_upper == row.index + 1
            assert row.r_lower == row.r_upper == 1

    def test_z2_rows(self):
        fam = builtin_family("Z2-torus", (2, 3, 4))
        rows = rank_gradient_table(fam.presentation, fam.graphs, fam.certified_words)
        for m, row in zip((2, 3, 4), rows):
            assert row.index == m * m
            assert row.r_lower == F(1, m * m)
            assert row.r_upper == F(1, m * m)

    def test_cyclic_single_row(self):
        fam = builtin_family("Z-quotient", (5,))
        rows = rank_gradient_table(fam.presentation, fam.graphs)
        assert rows[0].index == 5
        # trivial subgroup: simplification eliminates the one generator
        assert rows[0].d_lower == rows[0].d_upper == 0
        assert rows[0].d_exact


class TestVerifyGenerators:
    def test_z2_certificate(self):
        fam = builtin_family("Z2-torus", (4,))
        res = verify_generators(fam.presentation, fam.graphs[0], ("aaaa", "bbbb"))
        assert res.passed and res.index_found == 16

    def test_f2_schreier_basis(self):
        sch = SchreierGraph(("a", "b"), 3, {"a": (1, 2, 0), "b": (0, 1, 2)})
        p = Presentation(("a", "b"))
        sp = reidemeister_schreier(sch, p)
        res = verify_generators(p, sch, sp.generator_words)
        assert res.passed and res.index_found == 3

    def test_proper_subgroup_fails(self):
        fam = builtin_family("Z2-torus", (2,))
        res = verify_generators(fam.presentation, fam.graphs[0], ("aaaa", "bbbb"))
        assert not res.passed
        assert res.index_found == 16  # strictly larger index than 4

    def test_non_stabilizing_rejected(self):
        fam = builtin_family("Z2-torus", (2,))
        with pytest.raises(ValueError):
            verify_generators(fam.presentation, fam.graphs[0], ("a",))


class TestFarber:
    def test_identity_word_fixes_everything(self):
        fam = builtin_family("Z2-torus", (3,))
        rows = farber_statistic(fam.graphs[0], words=("",))
        assert rows[0].fraction == 1

    def test_torus_translation_fixed_point_free(self):
        fam = builtin_family("Z2-torus", (4,))
        rows = farber_statistic(fam.graphs[0], words=("a",))
        assert rows[0].fraction == 0

    def test_f2_random_word_ab_small_fraction(self):
        total = F(0)
        seeds = range(12)
        for seed in seeds:
            fam = builtin_family("F2-random", (100,), seed=seed)
            rows = farber_statistic(fam.graphs[0], words=("ab",))
            total += rows[0].fraction
        mean = total / len(list(seeds))
        assert mean < F(5, 100)  # expected about 1/100

    def test_ball_match_torus(self):
        fam = builtin_family("Z2-torus", (6,))
        rows = farber_statistic(fam.graphs[0], radius=[1, 2], cayley="free-abelian")
        assert all(row.fraction == 1 for row in rows)
        # radius 3 wraps on the 6-torus: balls stop matching Z^2
        rows3 = farber_statistic(fam.graphs[0], radius=[3], cayley="free-abelian")
        assert rows3[0].fraction == 0

    def test_ball_match_cycle_free(self):
        fam = builtin_family("Z-cycle", (30,))
        rows = farber_statistic(fam.graphs[0], radius=[2, 3], cayley="free")
        assert all(row.fraction == 1 for row in rows)


class TestBuiltinFamilies:
    def test_names_and_params(self):
        fam = builtin_family("Z-cycle", (5, 9))
        assert [g.n for g in fam.graphs] == [5, 9]
        fam2 = builtin_family("Z2-torus", (2, 3))
        assert [g.n for g in fam2.graphs] == [4, 9]

    def test_f2_random_deterministic(self):
        a = builtin_family("F2-random", (25,), seed=4)
        b = builtin_family("F2-random", (25,), seed=4)
        assert a.graphs[0].perms == b.graphs[0].perms

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            builtin_family("nope", (3,))
