"""Group presentations, coset enumeration, Schreier graphs, subgroup
presentations, and rank-gradient bookkeeping.

Conventions: generators are single lowercase letters, inverses the
corresponding uppercase letters.  Cosets are left cosets acted on by left
multiplication, so a word w = w0 w1 ... w(l-1) is applied to a coset
rightmost letter first.  Coset 0 is the subgroup itself.
"""

from __future__ import annotations

import random
import warnings
from collections import Counter, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .graph_core import Graph, ball, canonical_code, _norm_edge


class PresentationFormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CosetLimitError(RuntimeError):
    """Enumeration hit the coset cap: infinite index or insufficient cap
    (indistinguishable in general)."""


class IntransitiveActionError(ValueError):
    def __init__(self, orbits: Sequence[Sequence[int]]):
        self.orbits = tuple(tuple(o) for o in orbits)
        super().__init__(
            f"action is not transitive: {len(self.orbits)} orbits "
            f"{[list(o[:8]) for o in self.orbits]}"
        )


# ---------------------------------------------------------------------------
# words
# ---------------------------------------------------------------------------


def inverse_letter(ch: str) -> str:
    return ch.swapcase()


def word_inverse(word: str) -> str:
    return "".join(inverse_letter(ch) for ch in reversed(word))


def free_reduce(word: str) -> str:
    stack: list[str] = []
    for ch in word:
        if stack and stack[-1] == inverse_letter(ch):
            stack.pop()
        else:
            stack.append(ch)
    return "".join(stack)


def cyclic_reduce(word: str) -> str:
    w = free_reduce(word)
    while len(w) >= 2 and w[0] == inverse_letter(w[-1]):
        w = w[1:-1]
    return w


@dataclass(frozen=True)
class Presentation:
    """Finite presentation; relators are stored freely and cyclically reduced."""

    generators: tuple[str, ...]
    relators: tuple[str, ...] = ()

    def __post_init__(self):
        gens = tuple(self.generators)
        if len(set(gens)) != len(gens):
            raise ValueError("generator letters must be distinct")
        for s in gens:
            if len(s) != 1 or not ("a" <= s <= "z"):
                raise ValueError(f"generator {s!r} must be a single lowercase letter")
        allowed = set(gens) | {s.upper() for s in gens}
        reduced = []
        for w in self.relators:
            for ch in w:
                if ch not in allowed:
                    raise ValueError(f"relator letter {ch!r} not in alphabet")
            r = cyclic_reduce(w)
            if r:
                reduced.append(r)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "relators", tuple(reduced))

    @property
    def alphabet(self) -> tuple[str, ...]:
        """Letters in canonical order: each generator followed by its inverse."""
        out = []
        for s in self.generators:
            out.append(s)
            out.append(s.upper())
        return tuple(out)

    @property
    def relator_length_sum(self) -> int:
        return sum(len(r) for r in self.relators)


def parse_presentation(text: str) -> Presentation:
    gens: Optional[tuple[str, ...]] = None
    relators: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("gens:"):
            if gens is not None:
                raise PresentationFormatError("duplicate gens line", lineno)
            gens = tuple(line[len("gens:"):].split())
        elif line.startswith("rel:"):
            word = line[len("rel:"):].strip()
            if not word:
                raise PresentationFormatError("empty relator", lineno)
            relators.append(word)
        else:
            raise PresentationFormatError(f"unrecognized line {line!r}", lineno)
    if gens is None:
        raise PresentationFormatError("missing 'gens:' line", 1)
    try:
        pres = Presentation(gens, tuple(relators))
    except ValueError as exc:
        raise PresentationFormatError(str(exc)) from None
    for given, kept in zip(relators, pres.relators):
        if given != kept:
            warnings.warn(
                f"relator {given!r} was not reduced; using {kept!r}",
                stacklevel=2,
            )
            break
    if len(pres.relators) != len(relators):
        warnings.warn("trivial relators were dropped", stacklevel=2)
    return pres


def format_presentation(p: Presentation) -> str:
    lines = ["gens: " + " ".join(p.generators)]
    lines.extend(f"rel: {r}" for r in p.relators)
    return "\n".join(lines) + "\n"


def parse_subgroup_words(text: str) -> tuple[str, ...]:
    words: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not line.startswith("sub:"):
            raise PresentationFormatError(f"unrecognized line {line!r}", lineno)
        word = line[len("sub:"):].strip()
        if word:
            words.append(word)
    return tuple(words)


# ---------------------------------------------------------------------------
# Schreier graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SchreierGraph:
    """Transitive permutation action of the generators on cosets 0..n-1."""

    generators: tuple[str, ...]
    coset_count: int
    perms: dict[str, tuple[int, ...]]
    root: int = 0

    def __post_init__(self):
        n = self.coset_count
        for s in self.generators:
            perm = tuple(self.perms[s])
            if sorted(perm) != list(range(n)):
                raise ValueError(f"action of {s!r} is not a permutation of 0..{n - 1}")
            self.perms[s] = perm

    @property
    def n(self) -> int:
        return self.coset_count

    def inverse_perm(self, s: str) -> tuple[int, ...]:
        perm = self.perms[s]
        inv = [0] * self.n
        for i, j in enumerate(perm):
            inv[j] = i
        return tuple(inv)

    def apply(self, word: str, coset: int) -> int:
        """Left action: rightmost letter applied first."""
        c = coset
        for ch in reversed(word):
            if ch.islower():
                c = self.perms[ch][c]
            else:
                c = self.inverse_perm(ch.lower())[c]
        return c

    def orbits(self) -> tuple[tuple[int, ...], ...]:
        seen = [False] * self.n
        out = []
        for s0 in range(self.n):
            if seen[s0]:
                continue
            orbit = [s0]
            seen[s0] = True
            frontier = deque([s0])
            while frontier:
                c = frontier.popleft()
                for s in self.generators:
                    for nxt in (self.perms[s][c], self.inverse_perm(s)[c]):
                        if not seen[nxt]:
                            seen[nxt] = True
                            orbit.append(nxt)
                            frontier.append(nxt)
            out.append(tuple(sorted(orbit)))
        return tuple(out)

    def is_transitive(self) -> bool:
        return len(self.orbits()) == 1

    def edge_instances(self) -> tuple[tuple[str, int], ...]:
        """One undirected Schreier edge per (generator, source coset)."""
        return tuple((s, c) for s in self.generators for c in range(self.n))

    def to_labeled_graph(self) -> tuple[Graph, tuple[tuple[str, int], ...]]:
        """Underlying multigraph plus (label, direction) aligned to .edges."""
        records = []
        for s in self.generators:
            perm = self.perms[s]
            for c in range(self.n):
                t = perm[c]
                pair = _norm_edge(c, t)
                if c == t:
                    direction = 0
                elif pair == (c, t):
                    direction = 1
                else:
                    direction = -1
                records.append((pair, s, direction))
        records.sort()
        edges = tuple(r[0] for r in records)
        labels = tuple((r[1], r[2]) for r in records)
        g = Graph(self.n, edges, 2 * len(self.generators))
        return g, labels

    def to_graph(self) -> Graph:
        return self.to_labeled_graph()[0]

    def to_json(self) -> str:
        import json

        return json.dumps(
            {
                "generators": list(self.generators),
                "n": self.n,
                "root": self.root,
                "perm": {s: list(self.perms[s]) for s in self.generators},
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "SchreierGraph":
        import json

        data = json.loads(text)
        perms = {s: tuple(v) for s, v in data["perm"].items()}
        return SchreierGraph(
            tuple(data["generators"]), data["n"], perms, data.get("root", 0)
        )


def schreier_from_permutations(
    perms: Mapping[str, Sequence[int]] | Sequence[Sequence[int]],
    generator_names: Optional[Sequence[str]] = None,
) -> SchreierGraph:
    """Validated Schreier graph from explicit permutations; transitivity required."""
    if isinstance(perms, Mapping):
        names = tuple(sorted(perms))
        table = {s: tuple(perms[s]) for s in names}
    else:
        if generator_names is None:
            raise ValueError("generator names required for positional permutations")
        names = tuple(generator_names)
        table = {s: tuple(p) for s, p in zip(names, perms)}
    sizes = {len(p) for p in table.values()}
    if len(sizes) != 1:
        raise ValueError("permutations must share a common domain")
    n = sizes.pop()
    sch = SchreierGraph(names, n, table)
    orbits = sch.orbits()
    if len(orbits) > 1:
        raise IntransitiveActionError(orbits)
    return sch


# ---------------------------------------------------------------------------
# coset enumeration (HLT with a lookahead pass at the cap)
# ---------------------------------------------------------------------------

DEFAULT_MAX_COSETS = 10**6


class _CosetTable:
    def __init__(self, p: Presentation, max_cosets: int):
        self.p = p
        self.alphabet = p.alphabet
        self.index = {x: i for i, x in enumerate(self.alphabet)}
        self.inv = [self.index[inverse_letter(x)] for x in self.alphabet]
        self.max_cosets = max_cosets
        self.table: list[list[Optional[int]]] = [[None] * len(self.alphabet)]
        self.parent = [0]
        self.live_count = 1
        self.app_relators = [self._app_word(r) for r in p.relators]

    def _app_word(self, word: str) -> list[int]:
        return [self.index[ch] for ch in reversed(word)]

    def rep(self, c: int) -> int:
        root = c
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[c] != root:
            self.parent[c], c = root, self.parent[c]
        return root

    def is_live(self, c: int) -> bool:
        return self.parent[c] == c

    def define(self, c: int, x: int) -> int:
        if self.live_count >= self.max_cosets:
            self._lookahead()
            if self.live_count >= self.max_cosets:
                raise CosetLimitError(
                    f"coset cap {self.max_cosets} exceeded: the subgroup may "
                    "have infinite index or the cap is too low"
                )
        new = len(self.table)
        self.table.append([None] * len(self.alphabet))
        self.parent.append(new)
        self.live_count += 1
        self.table[c][x] = new
        self.table[new][self.inv[x]] = c
        return new

    def _merge(self, a: int, b: int, queue: deque) -> None:
        a, b = self.rep(a), self.rep(b)
        if a == b:
            return
        lo, hi = (a, b) if a < b else (b, a)
        self.parent[hi] = lo
        self.live_count -= 1
        queue.append(hi)

    def coincidence(self, a: int, b: int) -> None:
        queue: deque[int] = deque()
        self._merge(a, b, queue)
        while queue:
            dead = queue.popleft()
            for x in range(len(self.alphabet)):
                d = self.table[dead][x]
                if d is None:
                    continue
                self.table[dead][x] = None
                if self.table[d][self.inv[x]] == dead:
                    self.table[d][self.inv[x]] = None
                mu, nu = self.rep(dead), self.rep(d)
                if self.table[mu][x] is not None:
                    self._merge(nu, self.table[mu][x], queue)
                elif self.table[nu][self.inv[x]] is not None:
                    self._merge(mu, self.table[nu][self.inv[x]], queue)
                else:
                    self.table[mu][x] = nu
                    self.table[nu][self.inv[x]] = mu

    def scan(self, c: int, aw: Sequence[int], fill: bool) -> None:
        """Require word (in application order) to fix coset c."""
        i, j = 0, len(aw) - 1
        f = b = c
        while True:
            while i <= j and self.table[f][aw[i]] is not None:
                f = self.table[f][aw[i]]
                i += 1
            if i > j:
                if f != b:
                    self.coincidence(f, b)
                return
            while j >= i and self.table[b][self.inv[aw[j]]] is not None:
                b = self.table[b][self.inv[aw[j]]]
                j -= 1
            if j < i:
                if f != b:
                    self.coincidence(f, b)
                return
            if j == i:
                self.table[f][aw[i]] = b
                self.table[b][self.inv[aw[i]]] = f
                return
            if not fill:
                return
            self.define(f, aw[i])

    def _lookahead(self) -> None:
        for c in range(len(self.table)):
            if not self.is_live(c):
                continue
            for aw in self.app_relators:
                self.scan(self.rep(c), aw, fill=False)
                if not self.is_live(c):
                    break

    def enumerate(self, subgroup_words: Sequence[str]) -> None:
        for w in subgroup_words:
            word = free_reduce(w)
            if word:
                self.scan(0, self._app_word(word), fill=True)
        passes = 0
        while True:
            c = 0
            while c < len(self.table):
                if self.is_live(c):
                    for aw in self.app_relators:
                        self.scan(self.rep(c), aw, fill=True)
                        if not self.is_live(c):
                            break
                    if self.is_live(c):
                        for x in range(len(self.alphabet)):
                            if self.table[c][x] is None:
                                self.define(c, x)
                c += 1
            if self._verified(subgroup_words):
                return
            passes += 1
            if passes > 64:
                raise RuntimeError("coset enumeration failed to stabilize")

    def _verified(self, subgroup_words: Sequence[str]) -> bool:
        for c in range(len(self.table)):
            if not self.is_live(c):
                continue
            if any(e is None for e in self.table[c]):
                return False
        before = self.live_count
        for w in subgroup_words:
            word = free_reduce(w)
            if word:
                self.scan(0, self._app_word(word), fill=False)
        for c in range(len(self.table)):
            if self.is_live(c):
                for aw in self.app_relators:
                    self.scan(c, aw, fill=False)
        return self.live_count == before


def todd_coxeter(
    p: Presentation,
    subgroup_words: Sequence[str] = (),
    max_cosets: int = DEFAULT_MAX_COSETS,
) -> SchreierGraph:
    """HLT coset enumeration for the subgroup generated by the given words.

    Output numbering is standardized by a BFS from the root with letters in
    alphabet order, so the result is independent of relator order and of the
    internal definition history.
    """
    ct = _CosetTable(p, max_cosets)
    ct.enumerate(subgroup_words)
    live = [c for c in range(len(ct.table)) if ct.is_live(c)]
    # BFS standardization, lowest letter first
    root = ct.rep(0)
    order: dict[int, int] = {root: 0}
    frontier = deque([root])
    while frontier:
        c = frontier.popleft()
        for x in range(len(ct.alphabet)):
            nxt = ct.table[c][x]
            if nxt is not None and nxt not in order:
                order[nxt] = len(order)
                frontier.append(nxt)
    if len(order) != len(live):
        raise AssertionError("coset table is not connected")
    perms = {}
    for s in p.generators:
        x = ct.index[s]
        perm = [0] * len(live)
        for c in live:
            perm[order[c]] = order[ct.table[c][x]]
        perms[s] = tuple(perm)
    return SchreierGraph(p.generators, len(live), perms, 0)


@dataclass(frozen=True)
class RelatorCheck:
    passed: bool
    failing: Optional[tuple[str, int]] = None


def check_relators(sch: SchreierGraph, p: Presentation) -> RelatorCheck:
    """Every relator must act as the identity permutation."""
    if set(p.generators) != set(sch.generators):
        raise ValueError("alphabets differ between presentation and graph")
    for r in p.relators:
        for c in range(sch.n):
            if sch.apply(r, c) != c:
                return RelatorCheck(False, (r, c))
    return RelatorCheck(True, None)


# ---------------------------------------------------------------------------
# Reidemeister-Schreier
# ---------------------------------------------------------------------------


@dataclass
class SchreierPresentation:
    """Presentation of the root stabilizer read off a BFS spanning tree.

    Generators correspond to non-tree Schreier edge instances (s, c); words
    over them are tuples of signed 1-based indices.  ``traces`` records, per
    lifted relator, every edge instance crossed with its orientation.
    """

    graph: SchreierGraph
    presentation: Presentation
    tree: frozenset[tuple[str, int]]
    transversal: tuple[str, ...]
    generator_edges: tuple[tuple[str, int], ...]
    generator_words: tuple[str, ...]
    relators: tuple[tuple[int, ...], ...]
    relator_sources: tuple[tuple[str, int], ...]
    traces: tuple[tuple[tuple[str, int, int], ...], ...]

    @property
    def generator_count(self) -> int:
        return len(self.generator_edges)


def reidemeister_schreier(sch: SchreierGraph, p: Presentation) -> SchreierPresentation:
    """Subgroup presentation from the BFS spanning tree of the Schreier graph.

    The transversal word of a coset is read along the tree path from the
    root; the generator of a non-tree edge e = (c, s.c) is
    (transversal of s.c)^-1 . s . (transversal of c), and each relator lifts
    at each coset to a word in these generators.
    """
    verdict = check_relators(sch, p)
    if not verdict.passed:
        raise ValueError(f"relator check failed at {verdict.failing}")
    n = sch.n
    inv_perm = {s: sch.inverse_perm(s) for s in sch.generators}

    # BFS tree, lowest-generator-first: try s then its inverse, per generator
    transversal: list[Optional[str]] = [None] * n
    transversal[sch.root] = ""
    tree: set[tuple[str, int]] = set()
    frontier = deque([sch.root])
    while frontier:
        c = frontier.popleft()
        for s in sch.generators:
            fwd = sch.perms[s][c]
            if transversal[fwd] is None:
                transversal[fwd] = s + transversal[c]
                tree.add((s, c))
                frontier.append(fwd)
            bwd = inv_perm[s][c]
            if transversal[bwd] is None:
                transversal[bwd] = s.upper() + transversal[c]
                tree.add((s, bwd))
                frontier.append(bwd)
    if any(t is None for t in transversal):
        raise ValueError("Schreier graph is not connected")

    instances = [(s, c) for s in sch.generators for c in range(n)]
    nontree = sorted(inst for inst in instances if inst not in tree)
    gen_index = {inst: i for i, inst in enumerate(nontree)}
    gen_words = []
    for (s, c) in nontree:
        target = sch.perms[s][c]
        gen_words.append(free_reduce(word_inverse(transversal[target]) + s
                                     + transversal[c]))

    relators: list[tuple[int, ...]] = []
    sources: list[tuple[str, int]] = []
    traces: list[tuple[tuple[str, int, int], ...]] = []
    for r in p.relators:
        for c in range(n):
            cur = c
            factors: list[int] = []
            trace: list[tuple[str, int, int]] = []
            for ch in reversed(r):
                if ch.islower():
                    inst = (ch, cur)
                    nxt = sch.perms[ch][cur]
                    sign = 1
                else:
                    s = ch.lower()
                    nxt = inv_perm[s][cur]
                    inst = (s, nxt)
                    sign = -1
                trace.append((inst[0], inst[1], sign))
                if inst in gen_index:
                    factors.append(sign * (gen_index[inst] + 1))
                cur = nxt
            if cur != c:
                raise AssertionError("relator walk must close")
            word = _free_reduce_signed(tuple(reversed(factors)))
            relators.append(word)
            sources.append((r, c))
            traces.append(tuple(trace))

    return SchreierPresentation(
        graph=sch,
        presentation=p,
        tree=frozenset(tree),
        transversal=tuple(transversal),  # type: ignore[arg-type]
        generator_edges=tuple(nontree),
        generator_words=tuple(gen_words),
        relators=tuple(relators),
        relator_sources=tuple(sources),
        traces=tuple(traces),
    )


# ---------------------------------------------------------------------------
# signed-word utilities, Tietze simplification, abelianized rank
# ---------------------------------------------------------------------------


def _free_reduce_signed(word: Sequence[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for x in word:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


def _cyclic_reduce_signed(word: Sequence[int]) -> tuple[int, ...]:
    w = list(_free_reduce_signed(word))
    while len(w) >= 2 and w[0] == -w[-1]:
        w = w[1:-1]
    return tuple(w)


def _invert_signed(word: Sequence[int]) -> tuple[int, ...]:
    return tuple(-x for x in reversed(word))


def _as_signed_presentation(
    sp,
) -> tuple[int, list[tuple[int, ...]]]:
    if isinstance(sp, SchreierPresentation):
        return sp.generator_count, [tuple(w) for w in sp.relators]
    if isinstance(sp, Presentation):
        index = {s: i + 1 for i, s in enumerate(sp.generators)}
        rels = []
        for r in sp.relators:
            rels.append(tuple(index[ch] if ch.islower() else -index[ch.lower()]
                              for ch in r))
        return len(sp.generators), rels
    gen_count, rels = sp
    return gen_count, [tuple(w) for w in rels]


@dataclass(frozen=True)
class SimplifiedPresentation:
    generator_count: int
    relators: tuple[tuple[int, ...], ...]


def tietze_simplify(sp, budget: int = 10000) -> tuple[SimplifiedPresentation, int]:
    """Heuristic presentation shrinking; returns the remaining generator count.

    Repeats three moves until fixpoint or budget: drop trivial relators,
    eliminate a generator that occurs exactly once in some relator, and
    rewrite a relator by a shorter complement of another relator's segment.
    """
    gen_count, relators = _as_signed_presentation(sp)
    live = set(range(1, gen_count + 1))
    rels: list[tuple[int, ...]] = [
        w for w in (_cyclic_reduce_signed(r) for r in relators) if w
    ]
    spent = 0

    def substitute(word, gen, expr):
        out: list[int] = []
        for x in word:
            if x == gen:
                out.extend(expr)
            elif x == -gen:
                out.extend(_invert_signed(expr))
            else:
                out.append(x)
        return _cyclic_reduce_signed(out)

    changed = True
    while changed and spent < budget:
        changed = False
        # (b) eliminate generators with a unique occurrence in some relator
        for i, w in enumerate(rels):
            counts = Counter(abs(x) for x in w)
            singles = [g for g, cnt in counts.items() if cnt == 1 and g in live]
            if not singles:
                continue
            g = min(singles)
            pos = next(idx for idx, x in enumerate(w) if abs(x) == g)
            rot = w[pos:] + w[:pos]  # rot = (+-g) . rest, so g = -(rest or its inverse)
            rest = rot[1:]
            expr = _invert_signed(rest) if rot[0] > 0 else tuple(rest)
            live.discard(g)
            rels = [substitute(x, g, expr) for j, x in enumerate(rels) if j != i]
            rels = [w2 for w2 in rels if w2]
            spent += 1
            changed = True
            break
        if changed:
            continue
        # (c) length-reducing overlap substitutions
        for i in range(len(rels)):
            if changed or spent >= budget:
                break
            for j in range(len(rels)):
                if i == j or changed:
                    continue
                u, w = rels[i], rels[j]
                if len(u) < 2 or len(u) > len(w):
                    continue
                found = _overlap_rewrite(u, w)
                if found is not None and len(found) < len(w):
                    rels[j] = found
                    rels = [w2 for w2 in rels if w2]
                    spent += 1
                    changed = True

    remaining = len(live)
    # renumber live generators consecutively
    remap = {g: i + 1 for i, g in enumerate(sorted(live))}
    rel_out = tuple(
        tuple((1 if x > 0 else -1) * remap[abs(x)] for x in w) for w in rels
    )
    return SimplifiedPresentation(remaining, rel_out), remaining


def _overlap_rewrite(u: Sequence[int], w: Sequence[int]) -> Optional[tuple[int, ...]]:
    """Replace in w a segment of u (cyclically, either direction) longer than
    half of u by the inverse of the complement; returns the shorter relator."""
    lu = len(u)
    for variant in (tuple(u), _invert_signed(u)):
        doubled = variant + variant
        for t in range(lu - 1, lu // 2, -1):
            for start in range(lu):
                seg = doubled[start:start + t]
                comp = doubled[start + t:start + lu]
                repl = _invert_signed(comp)
                idx = _find_subword(w, seg)
                if idx is not None:
                    out = tuple(w[:idx]) + repl + tuple(w[idx + t:])
                    out = _cyclic_reduce_signed(out)
                    if len(out) < len(w):
                        return out
    return None


def _find_subword(w: Sequence[int], seg: Sequence[int]) -> Optional[int]:
    t = len(seg)
    for i in range(len(w) - t + 1):
        if tuple(w[i:i + t]) == tuple(seg):
            return i
    return None


def _sparse_rank(rows: list[dict[int, Fraction]]) -> int:
    """Exact rank over the rationals of a sparse integer matrix."""
    rows = [dict(r) for r in rows if r]
    rank = 0
    while rows:
        rows.sort(key=lambda r: (len(r), min(r)))
        pivot_row = rows.pop(0)
        if not pivot_row:
            continue
        col = min(pivot_row)
        pval = pivot_row[col]
        rank += 1
        out = []
        for r in rows:
            if col in r:
                factor = r[col] / pval
                new = dict(r)
                for c, val in pivot_row.items():
                    acc = new.get(c, Fraction(0)) - factor * val
                    if acc:
                        new[c] = acc
                    else:
                        new.pop(c, None)
                if new:
                    out.append(new)
            else:
                out.append(r)
        rows = out
    return rank


def abelianized_rank(sp) -> int:
    """Free rank of the abelianization: a lower bound on the minimal number
    of generators, via exact integer row reduction of the exponent matrix."""
    gen_count, relators = _as_signed_presentation(sp)
    rows: list[dict[int, Fraction]] = []
    for w in relators:
        row: dict[int, Fraction] = {}
        for x in w:
            g = abs(x)
            row[g] = row.get(g, Fraction(0)) + (1 if x > 0 else -1)
        row = {c: v for c, v in row.items() if v}
        if row:
            rows.append(row)
    return gen_count - _sparse_rank(rows)


def rank_quotient(d: int, index: int) -> Fraction:
    if d < 0:
        raise ValueError("d must be nonnegative")
    if index < 1:
        raise ValueError("index must be positive")
    return Fraction(d - 1, index)


@dataclass(frozen=True)
class RankGradientRow:
    index: int
    d_lower: int
    d_upper: int
    r_lower: Fraction
    r_upper: Fraction
    d_exact: bool


def rank_gradient_table(
    p: Presentation,
    schs: Sequence[SchreierGraph],
    certificates: Optional[Sequence[Optional[Sequence[str]]]] = None,
    tietze_budget: int = 10000,
) -> tuple[RankGradientRow, ...]:
    """Per-graph rank bounds and rank quotients.

    With no relators the subgroup is free and its rank is the cycle rank of
    the Schreier graph (exact).  Otherwise the bounds come from the
    abelianized rank and Tietze simplification; an optional certificate (a
    candidate generating word list, verified by re-enumeration) can tighten
    the upper bound.
    """
    rows = []
    for i, sch in enumerate(schs):
        verdict = check_relators(sch, p)
        if not verdict.passed:
            raise ValueError(f"relator check failed at {verdict.failing}")
        n = sch.n
        edge_count = n * len(p.generators)
        if not p.relators:
            d = edge_count - (n - 1)
            lo = hi = d
            exact = True
        else:
            sp = reidemeister_schreier(sch, p)
            lo = abelianized_rank(sp)
            _simplified, hi = tietze_simplify(sp, budget=tietze_budget)
            exact = False
            cert = certificates[i] if certificates else None
            if cert is not None:
                res = verify_generators(p, sch, cert)
                if res.passed:
                    hi = max(min(hi, len(cert)), lo)
            exact = lo == hi
        rows.append(
            RankGradientRow(
                index=n,
                d_lower=lo,
                d_upper=hi,
                r_lower=rank_quotient(lo, n),
                r_upper=rank_quotient(hi, n),
                d_exact=exact,
            )
        )
    return tuple(rows)


@dataclass(frozen=True)
class VerifyResult:
    passed: bool
    index_found: Optional[int]


def verify_generators(
    p: Presentation,
    sch: SchreierGraph,
    candidate_words: Sequence[str],
    max_cosets: int = DEFAULT_MAX_COSETS,
) -> VerifyResult:
    """Certify d(H) <= len(candidates) by re-enumerating the candidate subgroup.

    The candidates must stabilize the root, so they generate a subgroup of H;
    equality of index then proves equality of subgroups.
    """
    for w in candidate_words:
        if sch.apply(w, sch.root) != sch.root:
            raise ValueError(f"candidate word {w!r} does not stabilize the root")
    result = todd_coxeter(p, candidate_words, max_cosets)
    return VerifyResult(result.n == sch.n, result.n)


# ---------------------------------------------------------------------------
# Farber diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FarberRow:
    kind: str
    key: str
    fraction: Fraction


def farber_statistic(
    sch: SchreierGraph,
    words: Optional[Sequence[str]] = None,
    radius: Optional[Sequence[int] | int] = None,
    cayley: Optional[str] = None,
) -> tuple[FarberRow, ...]:
    """Fixed-point fractions of words and, for decidable built-in families,
    the fraction of vertices whose labeled r-ball matches the Cayley ball."""
    rows: list[FarberRow] = []
    for w in words or ():
        fixed = sum(1 for c in range(sch.n) if sch.apply(w, c) == c)
        rows.append(FarberRow("fixed", w, Fraction(fixed, sch.n)))
    if radius is not None:
        radii = [radius] if isinstance(radius, int) else list(radius)
        if cayley is None:
            raise ValueError("ball matching requires a cayley family name")
        g, labels = sch.to_labeled_graph()
        for r in radii:
            target = _cayley_ball_code(cayley, sch.generators, r)
            hits = sum(
                1
                for v in range(sch.n)
                if canonical_code(ball(g, v, r, labels=labels)) == target
            )
            rows.append(FarberRow("ball", f"r={r}", Fraction(hits, sch.n)))
    return tuple(rows)


def _cayley_ball_code(family: str, gens: Sequence[str], r: int) -> bytes:
    if family == "free":
        words = [""]
        seen = {""}
        frontier = [""]
        for _ in range(r):
            nxt = []
            for w in frontier:
                for s in list(gens) + [g.upper() for g in gens]:
                    t = free_reduce(s + w)
                    if t not in seen and len(t) <= r:
                        seen.add(t)
                        words.append(t)
                        nxt.append(t)
            frontier = nxt
        ids = {w: i for i, w in enumerate(sorted(seen, key=lambda x: (len(x), x)))}
        records = []
        for w in seen:
            for s in gens:
                t = free_reduce(s + w)
                if t in seen:
                    pair = _norm_edge(ids[w], ids[t])
                    direction = 0 if ids[w] == ids[t] else (1 if pair == (ids[w], ids[t]) else -1)
                    records.append((pair, s, direction))
        records.sort()
        g = Graph(len(seen), tuple(rec[0] for rec in records), 2 * len(gens))
        labels = tuple((rec[1], rec[2]) for rec in records)
        return canonical_code(ball(g, ids[""], r, labels=labels))
    if family in ("free-abelian", "zd"):
        d = len(gens)
        pts = {}

        def walk(point):
            return tuple(point)

        from itertools import product

        coords = [
            pt
            for pt in product(range(-r, r + 1), repeat=d)
            if sum(abs(c) for c in pt) <= r
        ]
        coords.sort()
        ids = {pt: i for i, pt in enumerate(coords)}
        records = []
        for pt in coords:
            for axis, s in enumerate(gens):
                to = tuple(c + (1 if ax == axis else 0) for ax, c in enumerate(pt))
                if to in ids:
                    pair = _norm_edge(ids[pt], ids[to])
                    direction = 1 if pair == (ids[pt], ids[to]) else -1
                    records.append((pair, s, direction))
        records.sort()
        g = Graph(len(coords), tuple(rec[0] for rec in records), 2 * d)
        labels = tuple((rec[1], rec[2]) for rec in records)
        origin = ids[tuple(0 for _ in range(d))]
        return canonical_code(ball(g, origin, r, labels=labels))
    raise ValueError(f"unknown cayley family {family!r}")


# ---------------------------------------------------------------------------
# built-in families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Family:
    name: str
    presentation: Presentation
    graphs: tuple[SchreierGraph, ...]
    params: tuple[int, ...]
    certified_words: tuple[Optional[tuple[str, ...]], ...]
    cayley: Optional[str] = None


def builtin_family(name: str, params: Sequence[int], seed: int = 0) -> Family:
    """Test corpora: Z cycles, Z^2 tori, F2 random sofic approximations, and
    finite cyclic quotients."""
    params = tuple(params)
    if name == "Z-cycle":
        p = Presentation(("a",))
        graphs = []
        for n in params:
            perm = tuple((i + 1) % n for i in range(n))
            graphs.append(SchreierGraph(("a",), n, {"a": perm}))
        certs = tuple(("a" * n,) for n in params)
        return Family(name, p, tuple(graphs), params, certs, cayley="free")
    if name == "Z2-torus":
        p = Presentation(("a", "b"), ("abAB",))
        graphs = []
        for m in params:
            n = m * m
            pa = [0] * n
            pb = [0] * n
            for x in range(m):
                for y in range(m):
                    pa[x * m + y] = ((x + 1) % m) * m + y
                    pb[x * m + y] = x * m + (y + 1) % m
            graphs.append(
                SchreierGraph(("a", "b"), n, {"a": tuple(pa), "b": tuple(pb)})
            )
        certs = tuple(("a" * m, "b" * m) for m in params)
        return Family(name, p, tuple(graphs), params, certs, cayley="free-abelian")
    if name == "F2-random":
        p = Presentation(("a", "b"))
        rng = random.Random(seed)
        graphs = []
        for n in params:
            sch = None
            for _attempt in range(64):
                pa = list(range(n))
                pb = list(range(n))
                rng.shuffle(pa)
                rng.shuffle(pb)
                try:
                    sch = schreier_from_permutations(
                        {"a": tuple(pa), "b": tuple(pb)}
                    )
                    break
                except IntransitiveActionError:
                    continue
            if sch is None:
                raise RuntimeError(f"no transitive pair found for n={n}")
            graphs.append(sch)
        return Family(name, p, tuple(graphs), params,
                      tuple(None for _ in params), cayley="free")
    if name == "Z-quotient":
        if len(params) != 1:
            raise ValueError("Z-quotient takes a single modulus parameter")
        m = params[0]
        p = Presentation(("a",), ("a" * m,))
        sch = todd_coxeter(p, ())
        return Family(name, p, (sch,), params, (None,))
    raise ValueError(f"unknown family {name!r}")
