"""Small exact combinatorial searches on bitset graphs.

Graphs are lists of Python ints: bit ``j`` of ``adj[i]`` is set iff ``i`` and
``j`` are adjacent. Both searches are exponential in the worst case and
take an expansion budget; running out raises :class:`CapacityError`.
"""
from __future__ import annotations

from .model import CapacityError


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def components(adj: list) -> list:
    """Connected components as bitmasks, ordered by smallest vertex."""
    left = (1 << len(adj)) - 1
    out = []
    while left:
        seed = left & -left
        comp = seed
        frontier = seed
        while frontier:
            nxt = 0
            for v in _bits(frontier):
                nxt |= adj[v]
            frontier = nxt & ~comp
            comp |= frontier
        out.append(comp)
        left &= ~comp
    return out


def _clique_cover_bound(cand: int, adj: list) -> int:
    """Greedy clique cover size of ``cand``; an upper bound on its independence number."""
    n = 0
    while cand:
        v = (cand & -cand).bit_length() - 1
        clique_ok = cand & adj[v]
        cand &= ~(1 << v)
        while clique_ok:
            w = (clique_ok & -clique_ok).bit_length() - 1
            cand &= ~(1 << w)
            clique_ok &= adj[w]
        n += 1
    return n


def max_independent_set(adj: list, budget: int = 2_000_000) -> list:
    """Exact maximum independent set, returned as a sorted vertex list.

    Branch and bound per connected component. Vertices of degree <= 1 are
    taken greedily (some optimum always contains them); otherwise the search
    branches on a vertex of maximum degree, pruned by a greedy clique cover.
    """
    result = []
    for comp in components(adj):
        result.extend(_component_mis(adj, comp, budget))
    return sorted(result)


def _component_mis(adj: list, comp: int, budget: int) -> list:
    best = [0, 0]  # size, mask
    nodes = [0]

    def expand(cand: int, chosen: int, size: int):
        nodes[0] += 1
        if nodes[0] > budget:
            raise CapacityError(f"independent-set search exceeded {budget} expansions")
        # degree <= 1 reductions
        changed = True
        while changed and cand:
            changed = False
            for v in _bits(cand):
                if (adj[v] & cand).bit_count() <= 1:
                    chosen |= 1 << v
                    size += 1
                    cand &= ~((1 << v) | adj[v])
                    changed = True
                    break
        if not cand:
            if size > best[0]:
                best[0], best[1] = size, chosen
            return
        if size + _clique_cover_bound(cand, adj) <= best[0]:
            return
        v = max(_bits(cand), key=lambda u: ((adj[u] & cand).bit_count(), -u))
        expand(cand & ~((1 << v) | adj[v]), chosen | (1 << v), size + 1)
        expand(cand & ~(1 << v), chosen, size)

    expand(comp, 0, 0)
    return list(_bits(best[1]))


def greedy_coloring(adj: list) -> list:
    """DSatur colouring; returns the colour of each vertex."""
    n = len(adj)
    color = [-1] * n
    sat = [set() for _ in range(n)]
    for _ in range(n):
        v = max((u for u in range(n) if color[u] < 0),
                key=lambda u: (len(sat[u]), adj[u].bit_count(), -u))
        c = 0
        while c in sat[v]:
            c += 1
        color[v] = c
        for w in _bits(adj[v]):
            sat[w].add(c)
    return color


def chromatic_number(adj: list, budget: int = 2_000_000) -> int:
    """Exact chromatic number by DSatur branch and bound."""
    n = len(adj)
    if n == 0:
        return 0
    upper = max(greedy_coloring(adj)) + 1
    best = [upper]
    color = [-1] * n
    nodes = [0]

    def expand(colored: int, used: int):
        nodes[0] += 1
        if nodes[0] > budget:
            raise CapacityError(f"colouring search exceeded {budget} expansions")
        if colored == n:
            best[0] = min(best[0], used)
            return
        v, vsat = -1, None
        for u in range(n):
            if color[u] >= 0:
                continue
            s = {color[w] for w in _bits(adj[u]) if color[w] >= 0}
            if vsat is None or len(s) > len(vsat):
                v, vsat = u, s
        for c in range(min(used + 1, best[0] - 1)):
            if c in vsat:
                continue
            color[v] = c
            expand(colored + 1, max(used, c + 1))
            color[v] = -1

    expand(0, 0)
    return best[0]
