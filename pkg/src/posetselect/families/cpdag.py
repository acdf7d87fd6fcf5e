"""Causal-structure poset: CPDAGs ordered by conditional-dependence inclusion.

A CPDAG represents a Markov equivalence class of DAGs (same skeleton and
v-structures).  The raw containment relation -- some DAG of the first
class is a directed subgraph of some DAG of the second -- is exposed as
``cpdag_precedes``; it is not transitive on four or more nodes, so the
poset order is its transitive closure (``cpdag_precedes_closure``),
which coincides with inclusion of the encoded conditional dependencies.
Similarity is the meet valuation over the closure, computed from cached
down-closures one skeleton component at a time (the valuation is
additive across disconnected components).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from ..core import (
    CoveringPair,
    FamilyMismatchError,
    GradedPoset,
    MinimalCoveringSet,
    SizeCapError,
)

Edge = tuple[int, int]

# down-set enumeration guards (per component / per argument)
MAX_RHO_RANK = 8
MAX_RHO_P = 12
MAX_EXTENSIONS = 4096
_CACHE_LIMIT = 500_000


@dataclass(frozen=True)
class Dag:
    p: int
    edges: frozenset[Edge]

    def __post_init__(self) -> None:
        for u, v in self.edges:
            if u == v or not (0 <= u < self.p and 0 <= v < self.p):
                raise ValueError("bad edge")
            if (v, u) in self.edges:
                raise ValueError("two-cycle")
        if _has_cycle(self.p, self.edges):
            raise ValueError("directed cycle")

    def key(self) -> tuple:
        return (self.p, tuple(sorted(self.edges)))


def _has_cycle(p: int, edges: Iterable[Edge]) -> bool:
    succ: dict[int, list[int]] = {}
    for u, v in edges:
        succ.setdefault(u, []).append(v)
    state = [0] * p  # 0 unseen, 1 on stack, 2 done
    for start in range(p):
        if state[start]:
            continue
        stack = [(start, iter(succ.get(start, ())))]
        state[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if state[nxt] == 1:
                    return True
                if state[nxt] == 0:
                    state[nxt] = 1
                    stack.append((nxt, iter(succ.get(nxt, ()))))
                    advanced = True
                    break
            if not advanced:
                state[node] = 2
                stack.pop()
    return False


@dataclass(frozen=True)
class Cpdag:
    """Mixed graph with directed edges and normalized undirected pairs."""

    p: int
    directed: tuple[Edge, ...]
    undirected: tuple[Edge, ...]
    _adj: dict = field(init=False, compare=False, repr=False, hash=False)

    def __post_init__(self) -> None:
        skel = set()
        for u, v in self.directed:
            if u == v or not (0 <= u < self.p and 0 <= v < self.p):
                raise ValueError("bad directed edge")
            pair = (min(u, v), max(u, v))
            if pair in skel:
                raise ValueError("duplicate edge")
            skel.add(pair)
        for u, v in self.undirected:
            if not u < v or not (0 <= u and v < self.p):
                raise ValueError("undirected pairs must be normalized (u < v)")
            if (u, v) in skel:
                raise ValueError("edge both directed and undirected")
            skel.add((u, v))
        if self.directed != tuple(sorted(self.directed)) or self.undirected != tuple(
            sorted(self.undirected)
        ):
            raise ValueError("edge tuples must be sorted")
        adj: dict[int, set[int]] = {i: set() for i in range(self.p)}
        for u, v in self.directed:
            adj[u].add(v)
            adj[v].add(u)
        for u, v in self.undirected:
            adj[u].add(v)
            adj[v].add(u)
        object.__setattr__(self, "_adj", adj)

    def key(self) -> tuple:
        return (self.p, self.directed, self.undirected)

    @property
    def n_edges(self) -> int:
        return len(self.directed) + len(self.undirected)

    def skeleton(self) -> frozenset[Edge]:
        return frozenset(
            (min(u, v), max(u, v)) for u, v in self.directed
        ) | frozenset(self.undirected)

    def neighbors(self, node: int) -> set[int]:
        return self._adj[node]

    def components(self) -> list["Cpdag"]:
        """Sub-CPDAGs per connected skeleton component (isolated nodes dropped)."""
        seen: set[int] = set()
        out = []
        for start in range(self.p):
            if start in seen or not self._adj[start]:
                continue
            comp = {start}
            frontier = [start]
            while frontier:
                node = frontier.pop()
                for nxt in self._adj[node]:
                    if nxt not in comp:
                        comp.add(nxt)
                        frontier.append(nxt)
            seen |= comp
            out.append(
                cpdag(
                    self.p,
                    [e for e in self.directed if e[0] in comp],
                    [e for e in self.undirected if e[0] in comp],
                )
            )
        return out


def cpdag(p: int, directed: Iterable[Edge] = (), undirected: Iterable[Edge] = ()) -> Cpdag:
    und = tuple(sorted((min(u, v), max(u, v)) for u, v in undirected))
    return Cpdag(p, tuple(sorted(directed)), und)


def empty_cpdag(p: int) -> Cpdag:
    return cpdag(p)


# ---------------------------------------------------------------------------
# DAG -> CPDAG


def _v_structure_edges(p: int, edges: frozenset[Edge]) -> set[Edge]:
    parents: dict[int, list[int]] = {}
    adj: dict[int, set[int]] = {i: set() for i in range(p)}
    for u, v in edges:
        parents.setdefault(v, []).append(u)
        adj[u].add(v)
        adj[v].add(u)
    compelled: set[Edge] = set()
    for z, pars in parents.items():
        for x, y in combinations(sorted(pars), 2):
            if y not in adj[x]:
                compelled.add((x, z))
                compelled.add((y, z))
    return compelled


def _meek_closure(
    p: int, directed: set[Edge], undirected: set[Edge]
) -> tuple[set[Edge], set[Edge]]:
    """Orient undirected edges forced by Meek rules R1-R3 (to fixpoint)."""
    adj: dict[int, set[int]] = {i: set() for i in range(p)}
    for u, v in directed | undirected:
        adj[u].add(v)
        adj[v].add(u)
    und_nbrs: dict[int, set[int]] = {i: set() for i in range(p)}
    for u, v in undirected:
        und_nbrs[u].add(v)
        und_nbrs[v].add(u)
    children: dict[int, set[int]] = {i: set() for i in range(p)}
    parents: dict[int, set[int]] = {i: set() for i in range(p)}
    for u, v in directed:
        children[u].add(v)
        parents[v].add(u)

    def orient(a: int, b: int) -> None:
        undirected.discard((min(a, b), max(a, b)))
        und_nbrs[a].discard(b)
        und_nbrs[b].discard(a)
        directed.add((a, b))
        children[a].add(b)
        parents[b].add(a)

    changed = True
    while changed:
        changed = False
        for u, v in sorted(undirected):
            for a, b in ((u, v), (v, u)):
                # R1: x -> a, a - b, x and b nonadjacent  =>  a -> b
                if any(b not in adj[x] for x in parents[a]):
                    orient(a, b)
                    changed = True
                    break
                # R2: a -> c -> b with a - b  =>  a -> b
                if children[a] & parents[b]:
                    orient(a, b)
                    changed = True
                    break
                # R3: a - c -> b and a - d -> b with c, d nonadjacent  =>  a -> b
                mids = [c for c in und_nbrs[a] if c in parents[b]]
                if any(
                    d not in adj[c] for c, d in combinations(sorted(mids), 2)
                ):
                    orient(a, b)
                    changed = True
                    break
            if changed:
                break
    return directed, undirected


_dag_to_cpdag_cache: dict[tuple, Cpdag] = {}


def dag_to_cpdag(dag: Dag) -> Cpdag:
    """The CPDAG of the Markov equivalence class containing ``dag``."""
    cache_key = dag.key()
    hit = _dag_to_cpdag_cache.get(cache_key)
    if hit is not None:
        return hit
    directed = set(_v_structure_edges(dag.p, dag.edges))
    undirected = {
        (min(u, v), max(u, v)) for u, v in dag.edges if (u, v) not in directed
    }
    directed, undirected = _meek_closure(dag.p, directed, undirected)
    out = cpdag(dag.p, directed, undirected)
    if len(_dag_to_cpdag_cache) > _CACHE_LIMIT:
        _dag_to_cpdag_cache.clear()
    _dag_to_cpdag_cache[cache_key] = out
    return out


# ---------------------------------------------------------------------------
# consistent extensions and the order relation


def _component_und_edges(und: Sequence[Edge]) -> list[list[Edge]]:
    parent: dict[int, int] = {}

    def find(a: int) -> int:
        while parent.get(a, a) != a:
            parent[a] = parent.get(parent[a], parent[a])
            a = parent[a]
        return a

    for u, v in und:
        parent.setdefault(u, u)
        parent.setdefault(v, v)
        parent[find(u)] = find(v)
    groups: dict[int, list[Edge]] = {}
    for e in und:
        groups.setdefault(find(e[0]), []).append(e)
    return list(groups.values())


def _orientations_of_component(
    c: Cpdag,
    comp_edges: list[Edge],
    forced: dict[Edge, Edge] | None = None,
    restricted: "Cpdag | None" = None,
    first_only: bool = False,
    cap: int = MAX_EXTENSIONS,
) -> list[tuple[Edge, ...]]:
    """Orientations of one undirected component with no new v-structures.

    ``forced`` pins some component edges to a direction.  ``restricted``
    adds the containment-side constraint: edges shared with its skeleton
    may not form colliders absent from it.  Returns tuples of directed
    edges (one per component edge); acyclicity is enforced against the
    fixed directed part plus the assignment.
    """
    adj = c._adj
    skel_r = restricted.skeleton() if restricted is not None else frozenset()
    dir_r = set(restricted.directed) if restricted is not None else set()
    adj_r: dict[int, set[int]] = {}
    if restricted is not None:
        adj_r = restricted._adj

    parents: dict[int, set[int]] = {i: set() for i in range(c.p)}
    children: dict[int, set[int]] = {i: set() for i in range(c.p)}
    for u, v in c.directed:
        parents[v].add(u)
        children[u].add(v)

    order = sorted(comp_edges)
    results: list[tuple[Edge, ...]] = []
    assignment: list[Edge] = []

    def reaches(src: int, dst: int) -> bool:
        # path src ~> dst through fixed directed edges plus the assignment
        seen = {src}
        frontier = [src]
        while frontier:
            node = frontier.pop()
            if node == dst:
                return True
            for nxt in children[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return False

    def collider_ok(tail: int, head: int) -> bool:
        # orienting tail -> head may not create a v-structure missing from
        # the class (any existing parent of head nonadjacent to tail), nor
        # a restricted collider missing from the containment side
        for other in parents[head]:
            if other == tail:
                continue
            if other not in adj[tail]:
                return False
            if restricted is not None:
                e1 = (min(tail, head), max(tail, head))
                e2 = (min(other, head), max(other, head))
                if e1 in skel_r and e2 in skel_r and other not in adj_r.get(tail, ()):
                    # both edges exist on the containment side; the collider
                    # is legal only if that side already directs both
                    if (tail, head) not in dir_r or (other, head) not in dir_r:
                        return False
        return True

    def assign(idx: int) -> bool:
        if len(results) >= cap:
            raise SizeCapError(f"extension cap {cap} exceeded")
        if idx == len(order):
            results.append(tuple(assignment))
            return first_only
        u, v = order[idx]
        options = [(u, v), (v, u)]
        if forced and (u, v) in forced:
            options = [forced[(u, v)]]
        for tail, head in options:
            if reaches(head, tail):
                continue
            if not collider_ok(tail, head):
                continue
            parents[head].add(tail)
            children[tail].add(head)
            assignment.append((tail, head))
            done = assign(idx + 1)
            assignment.pop()
            parents[head].discard(tail)
            children[tail].discard(head)
            if done:
                return True
        return False

    assign(0)
    return results


def consistent_extensions(c: Cpdag, cap: int = MAX_EXTENSIONS) -> list[Dag]:
    """All DAGs in the equivalence class described by ``c`` (capped)."""
    comps = _component_und_edges(c.undirected)
    per_comp: list[list[tuple[Edge, ...]]] = []
    for comp in comps:
        opts = _orientations_of_component(c, comp, cap=cap)
        if not opts:
            return []
        per_comp.append(opts)
    total = math.prod(len(o) for o in per_comp) if per_comp else 1
    if total > cap:
        raise SizeCapError(f"class would have >= {total} extensions (cap {cap})")
    outs: list[Dag] = []
    base = frozenset(c.directed)

    def build(i: int, acc: frozenset[Edge]) -> None:
        if i == len(per_comp):
            if not _has_cycle(c.p, acc):
                outs.append(Dag(c.p, acc))
            return
        for opt in per_comp[i]:
            build(i + 1, acc | frozenset(opt))

    build(0, base)
    return outs


def is_valid_cpdag(c: Cpdag) -> bool:
    """Round-trip validity: some extension exists and recompiles to ``c``."""
    comps = _component_und_edges(c.undirected)
    chosen: frozenset[Edge] = frozenset(c.directed)
    for comp in comps:
        opts = _orientations_of_component(c, comp, first_only=True)
        if not opts:
            return False
        chosen = chosen | frozenset(opts[0])
    if _has_cycle(c.p, chosen):
        return False
    return dag_to_cpdag(Dag(c.p, chosen)) == c


_precedes_cache: dict[tuple, bool] = {}


def cpdag_precedes(a: Cpdag, b: Cpdag) -> bool:
    """True iff some DAG of a's class is a directed subgraph of one of b's.

    Search for a class member of ``b`` whose restriction to a's skeleton
    lies in a's class: a's directed edges are forced, and orientations
    creating colliders absent from either class are pruned.
    """
    if a.p != b.p:
        raise FamilyMismatchError("CPDAGs live on different node counts")
    if a == b:
        return True
    key = (a.key(), b.key())
    hit = _precedes_cache.get(key)
    if hit is not None:
        return hit
    result = _precedes_impl(a, b)
    if len(_precedes_cache) > _CACHE_LIMIT:
        _precedes_cache.clear()
    _precedes_cache[key] = result
    return result


def _precedes_impl(a: Cpdag, b: Cpdag) -> bool:
    if a.n_edges > b.n_edges:
        return False
    skel_b = b.skeleton()
    if not a.skeleton() <= skel_b:
        return False
    dir_b = set(b.directed)
    forced: dict[Edge, Edge] = {}
    for x, y in a.directed:
        if (x, y) in dir_b:
            continue
        if (y, x) in dir_b:
            return False
        forced[(min(x, y), max(x, y))] = (x, y)
    # b's fixed directed edges may already clash with a's class: two fixed
    # edges into a common head, both inside a's skeleton, whose tails are
    # nonadjacent there, form a collider of the restriction and must be a
    # v-structure of a itself
    adj_a = a._adj
    skel_a = a.skeleton()
    dir_a = set(a.directed)
    for x, z in b.directed:
        for y in range(b.p):
            if y in (x, z) or (y, z) not in dir_b:
                continue
            e1, e2 = (min(x, z), max(x, z)), (min(y, z), max(y, z))
            if e1 in skel_a and e2 in skel_a and y not in adj_a[x]:
                if (x, z) not in dir_a or (y, z) not in dir_a:
                    return False
    for comp in _component_und_edges(b.undirected):
        comp_forced = {e: forced[e] for e in comp if e in forced}
        opts = _orientations_of_component(
            b, comp, forced=comp_forced, restricted=a, first_only=True
        )
        if not opts:
            return False
    return True


# ---------------------------------------------------------------------------
# the poset order (transitive closure) and down-closures

_one_step_cache: dict[tuple, tuple[Cpdag, ...]] = {}
_down_set_cache: dict[tuple, tuple[Cpdag, ...]] = {}
_down_keys_cache: dict[tuple, frozenset[tuple]] = {}


def _one_step_down(x: Cpdag, cap: int = MAX_EXTENSIONS) -> tuple[Cpdag, ...]:
    """Classes of sub-DAGs of x's class members (one containment step)."""
    key = x.key()
    hit = _one_step_cache.get(key)
    if hit is not None:
        return hit
    if x.n_edges > MAX_RHO_RANK:
        raise SizeCapError(
            f"down-set of a rank-{x.n_edges} CPDAG exceeds the rank guard {MAX_RHO_RANK}"
        )
    seen: dict[tuple, Cpdag] = {}
    for g in consistent_extensions(x, cap=cap):
        edges = sorted(g.edges)
        for r in range(len(edges) + 1):
            for keep in combinations(edges, r):
                sub = dag_to_cpdag(Dag(x.p, frozenset(keep)))
                seen.setdefault(sub.key(), sub)
    out = tuple(sorted(seen.values(), key=lambda c: c.key()))
    if len(_one_step_cache) > 50_000:
        _one_step_cache.clear()
    _one_step_cache[key] = out
    return out


def down_set(x: Cpdag, cap: int = MAX_EXTENSIONS) -> tuple[Cpdag, ...]:
    """All CPDAGs below ``x`` in the poset order (closure of containment).

    One containment step is not transitive, so sub-classes of sub-classes
    are accumulated to a fixpoint.
    """
    key = x.key()
    hit = _down_set_cache.get(key)
    if hit is not None:
        return hit
    seen: dict[tuple, Cpdag] = {key: x}
    frontier = [x]
    while frontier:
        w = frontier.pop()
        for z in _one_step_down(w, cap=cap):
            if z.key() not in seen:
                seen[z.key()] = z
                if z.n_edges:
                    frontier.append(z)
    out = tuple(sorted(seen.values(), key=lambda c: c.key()))
    if len(_down_set_cache) > 50_000:
        _down_set_cache.clear()
        _down_keys_cache.clear()
    _down_set_cache[key] = out
    return out


def down_keys(x: Cpdag, cap: int = MAX_EXTENSIONS) -> frozenset[tuple]:
    key = x.key()
    hit = _down_keys_cache.get(key)
    if hit is None:
        hit = frozenset(z.key() for z in down_set(x, cap=cap))
        _down_keys_cache[key] = hit
    return hit


_component_keys_cache: dict[tuple, frozenset[tuple]] = {}


def down_keys_by_component(c: Cpdag, cap: int = MAX_EXTENSIONS) -> frozenset[tuple]:
    """Keys of all CONNECTED elements below ``c``, plus the empty element.

    A connected element sits inside a single skeleton component, so the
    union of per-component down-closures answers membership while keeping
    the enumeration cost per component.
    """
    key = c.key()
    hit = _component_keys_cache.get(key)
    if hit is not None:
        return hit
    keys: set[tuple] = {empty_cpdag(c.p).key()}
    for comp in c.components():
        keys |= down_keys(comp, cap=cap)
    out = frozenset(keys)
    if len(_component_keys_cache) > 20_000:
        _component_keys_cache.clear()
    _component_keys_cache[key] = out
    return out


_closure_cache: dict[tuple, bool] = {}


def cpdag_precedes_closure(a: Cpdag, b: Cpdag) -> bool:
    """The poset order: a chain of containment steps from ``a`` to ``b``.

    Equivalent to every conditional dependence of ``a`` holding in ``b``.
    Decided from b's cached down-closure when its rank is inside the
    guard, otherwise by an upward search from ``a`` through single-edge
    augmentations within b's skeleton.
    """
    if a.p != b.p:
        raise FamilyMismatchError("CPDAGs live on different node counts")
    if a == b or a.n_edges == 0:
        return True
    if a.n_edges > b.n_edges or not a.skeleton() <= b.skeleton():
        return False
    if cpdag_precedes(a, b):
        return True
    if all(comp.n_edges <= MAX_RHO_RANK for comp in b.components()):
        # membership decomposes: a disconnected element is below b iff
        # each of its components is (independence models intersect)
        keys = down_keys_by_component(b)
        return all(comp.key() in keys for comp in a.components())
    key = (a.key(), b.key())
    hit = _closure_cache.get(key)
    if hit is not None:
        return hit
    result = _closure_upward_search(a, b)
    if len(_closure_cache) > _CACHE_LIMIT:
        _closure_cache.clear()
    _closure_cache[key] = result
    return result


def _closure_upward_search(a: Cpdag, b: Cpdag) -> bool:
    # breadth-first through one-edge augmentations of a's class members,
    # pruned to b's skeleton; every chain to b walks such augmentations
    skel_b = b.skeleton()
    seen = {a.key()}
    frontier = [a]
    while frontier:
        w = frontier.pop()
        missing = sorted(skel_b - w.skeleton())
        for u, v in missing:
            for g in consistent_extensions(w):
                for edge in ((u, v), (v, u)):
                    if _has_cycle(w.p, g.edges | {edge}):
                        continue
                    bigger = dag_to_cpdag(Dag(w.p, g.edges | {edge}))
                    if bigger.key() in seen:
                        continue
                    seen.add(bigger.key())
                    if bigger == b or cpdag_precedes(bigger, b):
                        return True
                    frontier.append(bigger)
    return False


def rho_cpdag(x: Cpdag, y: Cpdag) -> int:
    """Meet valuation: the largest rank among CPDAGs below both arguments.

    Decomposes the lower-rank argument across skeleton components (the
    valuation is additive over disconnected components) and walks each
    component's down-closure, filtering by the poset order against the
    other argument.
    """
    if x.p != y.p:
        raise FamilyMismatchError("CPDAGs live on different node counts")
    if x.p > MAX_RHO_P:
        raise SizeCapError(f"rho guard: p={x.p} exceeds {MAX_RHO_P}")
    if cpdag_precedes_closure(x, y):
        return x.n_edges
    if cpdag_precedes_closure(y, x):
        return y.n_edges
    small, other = (x, y) if x.n_edges <= y.n_edges else (y, x)
    use_keys = all(c.n_edges <= MAX_RHO_RANK for c in other.components())
    target = down_keys_by_component(other) if use_keys else None
    total = 0
    for comp in small.components():
        best = 0
        for z in sorted(down_set(comp), key=lambda c: -c.n_edges):
            if z.n_edges <= best:
                break
            if target is not None:
                ok = all(zc.key() in target for zc in z.components())
            else:
                ok = cpdag_precedes_closure(z, other)
            if ok:
                best = z.n_edges
        total += best
    return total


# ---------------------------------------------------------------------------
# star forests (the restricted family used during aggregation)


@dataclass(frozen=True)
class Star:
    center: int
    leaves: frozenset[int]
    in_leaves: frozenset[int] | None  # None = all edges undirected


def star_cpdag(p: int, center: int, leaves: Iterable[int], in_leaves: Iterable[int] | None = None) -> Cpdag:
    leaves = frozenset(leaves)
    if in_leaves is None:
        return cpdag(p, (), ((center, l) for l in leaves))
    ins = frozenset(in_leaves)
    if len(ins) < 2 or not ins <= leaves:
        raise ValueError("a directed star needs at least two in-leaves")
    directed = [(l, center) for l in ins] + [(center, l) for l in leaves - ins]
    return Cpdag(p, tuple(sorted(directed)), ())


def star_decomposition(c: Cpdag) -> list[Star]:
    """Decompose a star-forest CPDAG; raises if a component is not a star."""
    stars = []
    for comp in c.components():
        skel = sorted(comp.skeleton())
        common = set(skel[0])
        for e in skel[1:]:
            common &= set(e)
        if not common:
            raise ValueError("skeleton component is not a star")
        if len(skel) == 1:
            if comp.directed:
                raise ValueError("single directed edge is not a valid CPDAG")
            u, v = skel[0]
            stars.append(Star(u, frozenset([v]), None))
            continue
        center = min(common)
        leaves = frozenset(n for e in skel for n in e if n != center)
        if comp.undirected and comp.directed:
            raise ValueError("mixed star orientation is not a valid CPDAG")
        if comp.undirected:
            stars.append(Star(center, leaves, None))
        else:
            ins = frozenset(u for u, v in comp.directed if v == center)
            if len(ins) < 2:
                raise ValueError("directed star must have >= 2 in-edges")
            stars.append(Star(center, leaves, ins))
    return stars


def is_star_forest(c: Cpdag) -> bool:
    try:
        star_decomposition(c)
        return True
    except ValueError:
        return False


class CpdagProfile:
    """Per-estimate tables answering 'is this sub-star below it?' queries.

    The estimate's down-closure is materialized once; a sub-star is below
    the estimate iff its canonical key is in the closure.
    """

    def __init__(self, c: Cpdag, cap: int = MAX_EXTENSIONS):
        self.c = c
        self.keys = down_keys(c, cap=cap)
        self.adj = {i: frozenset(c.neighbors(i)) for i in range(c.p)}
        self._best: dict[tuple, int] = {}

    def star_realizable(self, center: int, leaves: frozenset[int], ins: frozenset[int] | None) -> bool:
        if not leaves <= self.adj[center]:
            return False
        return star_cpdag(self.c.p, center, leaves, ins).key() in self.keys

    def best_substar(self, star: Star) -> int:
        """Largest sub-star of ``star`` below the estimate."""
        avail = star.leaves & self.adj[star.center]
        key = (star.center, avail, star.in_leaves)
        hit = self._best.get(key)
        if hit is not None:
            return hit
        best = 0
        items = sorted(avail)
        for r in range(len(items), 0, -1):
            if r <= best:
                break
            for keep in combinations(items, r):
                sub_leaves = frozenset(keep)
                if star.in_leaves is None:
                    sub_ins = None
                else:
                    kept_ins = star.in_leaves & sub_leaves
                    sub_ins = kept_ins if len(kept_ins) >= 2 else None
                if self.star_realizable(star.center, sub_leaves, sub_ins):
                    best = r
                    break
        self._best[key] = best
        return best


_profile_cache: dict[tuple, CpdagProfile] = {}


def profile_of(c: Cpdag) -> CpdagProfile:
    key = c.key()
    hit = _profile_cache.get(key)
    if hit is None:
        hit = CpdagProfile(c)
        if len(_profile_cache) > 20_000:
            _profile_cache.clear()
        _profile_cache[key] = hit
    return hit


def rho_star_forest(x: Cpdag, y: Cpdag) -> int:
    """rho(x, y) for a star forest ``x`` via the profile of ``y``."""
    prof = profile_of(y)
    return sum(prof.best_substar(s) for s in star_decomposition(x))


# ---------------------------------------------------------------------------
# poset families


class CpdagPoset(GradedPoset):
    """All CPDAGs on p nodes.  Covers are not enumerated for this family;

    greedy aggregation runs on the star-forest restriction below.
    """

    name = "causal"
    has_join = False

    def __init__(self, p: int):
        if p < 1:
            raise ValueError("p must be positive")
        self.p = p

    @property
    def least(self) -> Cpdag:
        return empty_cpdag(self.p)

    def check_member(self, x: Cpdag) -> None:
        if not isinstance(x, Cpdag) or x.p != self.p:
            raise FamilyMismatchError(f"expected Cpdag with p={self.p}")

    def rank(self, x: Cpdag) -> int:
        return x.n_edges

    def precedes(self, x: Cpdag, y: Cpdag) -> bool:
        return cpdag_precedes_closure(x, y)

    def rho(self, x: Cpdag, y: Cpdag) -> int:
        return rho_cpdag(x, y)

    def upward_covers(self, x: Cpdag) -> list[Cpdag]:
        raise NotImplementedError(
            "cover enumeration is only provided for the star-forest restriction"
        )

    def sort_key(self, x: Cpdag) -> tuple:
        return x.key()

    def max_rank(self) -> int:
        return self.p * (self.p - 1) // 2


class RestrictedCpdagPoset(CpdagPoset):
    """CPDAGs whose skeleton components are stars (diameter <= 2 trees)."""

    name = "causal-restricted"

    def check_member(self, x: Cpdag) -> None:
        super().check_member(x)
        if not is_star_forest(x):
            raise FamilyMismatchError("element is not a star-forest CPDAG")

    def rho(self, x: Cpdag, y: Cpdag) -> int:
        if is_star_forest(x):
            return rho_star_forest(x, y)
        if is_star_forest(y):
            return rho_star_forest(y, x)
        return rho_cpdag(x, y)

    def upward_covers(self, u: Cpdag) -> list[Cpdag]:
        """Star forests one edge above ``u`` in the order.

        Adding an adjacency must keep every component a star; all census
        orientation patterns of the grown component are candidates, kept
        when they dominate ``u``.
        """
        self.check_member(u)
        skel = u.skeleton()
        out = []
        seen: set[tuple] = set()
        for x, y in combinations(range(self.p), 2):
            if (x, y) in skel:
                continue
            new_edges = sorted(skel | {(x, y)})
            comp_nodes = _component_of(new_edges, x)
            comp_edges = [e for e in new_edges if e[0] in comp_nodes]
            common = set(comp_edges[0])
            for e in comp_edges[1:]:
                common &= set(e)
            if not common:
                continue
            leaves_by_center = {
                c: frozenset(n for e in comp_edges for n in e if n != c)
                for c in sorted(common)
            }
            other_dir = [e for e in u.directed if e[0] not in comp_nodes]
            other_und = [e for e in u.undirected if e[0] not in comp_nodes]
            k = len(comp_edges)
            for center in sorted(common):
                leaves = leaves_by_center[center]
                patterns: list[frozenset[int] | None] = [None]
                if k >= 2:
                    patterns += [
                        frozenset(ins)
                        for r in range(2, k + 1)
                        for ins in combinations(sorted(leaves), r)
                    ]
                for ins in patterns:
                    comp = star_cpdag(self.p, center, leaves, ins)
                    v = cpdag(
                        self.p,
                        tuple(other_dir) + comp.directed,
                        tuple(other_und) + comp.undirected,
                    )
                    if v.key() in seen:
                        continue
                    seen.add(v.key())
                    if cpdag_precedes(u, v):
                        out.append(v)
        return sorted(out, key=self.sort_key)

    def max_rank(self) -> int:
        return self.p - 1

    def minimal_covering_pairs(
        self,
        max_rank: int | None = None,
        max_members: int = 500_000,
        counts_only: bool = False,
    ) -> MinimalCoveringSet:
        return minimal_covering_pairs_causal(self.p, max_rank, max_members, counts_only)


def _component_of(edges: list[Edge], node: int) -> set[int]:
    comp = {node}
    changed = True
    while changed:
        changed = False
        for u, v in edges:
            if (u in comp) != (v in comp):
                comp |= {u, v}
                changed = True
    return comp


def star_census_count(k: int) -> int:
    """Orientation classes of a k-edge star: undirected plus >= 2 in-edges."""
    return 1 + sum(math.comb(k, i) for i in range(2, k + 1))


def causal_minimal_counts(p: int, top: int) -> tuple[dict[int, int], dict[int, int]]:
    """(enumerated, paper-formula) stratum counts for the causal family.

    Enumerated keeps one pair per (star, removed edge): rank 1 dedupes the
    endpoint choice to p(p-1)/2 undirected edges; rank k >= 2 has k
    removals per star.  The paper formula counts stars only.
    """
    paper = {k: p * math.comb(p - 1, k) * star_census_count(k) for k in range(1, top + 1)}
    enum = {k: paper[k] * k for k in range(1, top + 1)}
    enum[1] = p * (p - 1) // 2
    return enum, paper


def minimal_covering_pairs_causal(
    p: int,
    max_rank: int | None = None,
    max_members: int = 500_000,
    counts_only: bool = False,
) -> MinimalCoveringSet:
    """Star-based minimal covering pairs for the restricted causal family.

    The literature counting formula p*C(p-1,k)*(2^k - k) counts rank-k
    stars; the enumerated set keeps one pair per (star, removed edge)
    after deduplication, which differs by the removal multiplicity (and
    by the endpoint double-count at rank 1).
    """
    top = max_rank if max_rank is not None else p - 1
    enum_counts, paper_counts = causal_minimal_counts(p, top)
    if counts_only:
        return MinimalCoveringSet(
            family="causal-restricted",
            pairs_by_rank={},
            counts_paper=paper_counts,
            counts_known=enum_counts,
        )
    est = sum(enum_counts.values())
    if est > max_members:
        raise SizeCapError(f"causal minimal set would have ~{est} pairs (cap {max_members})")
    pairs_by_rank: dict[int, dict[tuple, CoveringPair]] = {}
    counts_paper: dict[int, int] = {}
    for k in range(1, top + 1):
        counts_paper[k] = p * math.comb(p - 1, k) * star_census_count(k)
        pairs_by_rank[k] = {}
    for center in range(p):
        others = [n for n in range(p) if n != center]
        for k in range(1, top + 1):
            for leaves in combinations(others, k):
                leafset = frozenset(leaves)
                patterns: list[frozenset[int] | None] = [None]
                if k >= 2:
                    patterns += [
                        frozenset(ins)
                        for r in range(2, k + 1)
                        for ins in combinations(leaves, r)
                    ]
                for ins in patterns:
                    upper = star_cpdag(p, center, leafset, ins)
                    for m in leaves:
                        rest = leafset - {m}
                        if not rest:
                            lower = empty_cpdag(p)
                        elif ins is None:
                            lower = star_cpdag(p, center, rest, None)
                        else:
                            kept = ins - {m}
                            lower = star_cpdag(
                                p, center, rest, kept if len(kept) >= 2 else None
                            )
                        pair = CoveringPair(lower, upper)
                        pairs_by_rank[k].setdefault(
                            (lower.key(), upper.key()), pair
                        )
    return MinimalCoveringSet(
        family="causal-restricted",
        pairs_by_rank={
            k: tuple(v[kk] for kk in sorted(v)) for k, v in pairs_by_rank.items()
        },
        counts_paper=counts_paper,
    )


class ReversedCpdagPoset(GradedPoset):
    """The causal poset with the order flipped: the complete CPDAG is null.

    Rank counts missing edges.  Exposed for completeness; no estimator
    targets it, and similarity falls back to enumeration (small p only).
    """

    name = "causal-reversed"
    has_join = False

    def __init__(self, p: int):
        if p < 1:
            raise ValueError("p must be positive")
        self.p = p
        self._universe: tuple[Cpdag, ...] | None = None

    @property
    def least(self) -> Cpdag:
        return cpdag(self.p, (), combinations(range(self.p), 2))

    def check_member(self, x: Cpdag) -> None:
        if not isinstance(x, Cpdag) or x.p != self.p:
            raise FamilyMismatchError(f"expected Cpdag with p={self.p}")

    def rank(self, x: Cpdag) -> int:
        return self.p * (self.p - 1) // 2 - x.n_edges

    def precedes(self, x: Cpdag, y: Cpdag) -> bool:
        return cpdag_precedes(y, x)

    def _all_elements(self) -> tuple[Cpdag, ...]:
        if self._universe is None:
            if self.p > 4:
                raise SizeCapError("reversed causal poset enumerates only for p <= 4")
            seen: dict[tuple, Cpdag] = {}
            pairs = list(combinations(range(self.p), 2))
            for mask in range(3 ** len(pairs)):
                edges = []
                m = mask
                ok = True
                for u, v in pairs:
                    m, r = divmod(m, 3)
                    if r == 1:
                        edges.append((u, v))
                    elif r == 2:
                        edges.append((v, u))
                try:
                    g = Dag(self.p, frozenset(edges))
                except ValueError:
                    ok = False
                if ok:
                    c = dag_to_cpdag(g)
                    seen.setdefault(c.key(), c)
            self._universe = tuple(sorted(seen.values(), key=lambda c: c.key()))
        return self._universe

    def rho(self, x: Cpdag, y: Cpdag) -> int:
        best = -1
        for z in self._all_elements():
            if self.precedes(z, x) and self.precedes(z, y):
                best = max(best, self.rank(z))
        return best

    def upward_covers(self, x: Cpdag) -> list[Cpdag]:
        r = self.rank(x)
        return sorted(
            (
                z
                for z in self._all_elements()
                if self.rank(z) == r + 1 and self.precedes(x, z)
            ),
            key=self.sort_key,
        )

    def sort_key(self, x: Cpdag) -> tuple:
        return x.key()

    def max_rank(self) -> int:
        return self.p * (self.p - 1) // 2
