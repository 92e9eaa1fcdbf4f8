"""Entropy estimates on finite models.

Counts of (n, r)-separated orbit sets, growth slopes, chain counts and the
spectral growth rate of a chain digraph, entropy-point tests on scheduled
balls, a doubling-family lower-bound certificate, and two-set cover entropy.
All logarithms are natural.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .chains import ChainDigraph, find_path
from .graphsearch import chromatic_number, greedy_coloring, max_independent_set
from .model import TOL, CapacityError, FiniteModel, ResolutionError
from .pointwise import ShadowSolver, Verdict, chain_sensitive_star

THETA = 0.02
EXACT_CAP = 24
PAIRWISE_CAP = 3000
CHAIN_CAP = 5000
POWER_TOL = 1e-9
POWER_MAX_ITER = 200_000


class CertificateError(ValueError):
    """The certificate construction could not find its ingredients."""


@dataclass
class EntropyEstimate:
    value: float
    method: str
    params: dict = field(default_factory=dict)
    bound: str = "estimate"
    counts: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"value": float(self.value), "method": self.method, "bound": self.bound,
                "params": _plain(self.params), "counts": [[int(n), int(c)] for n, c in self.counts],
                "info": _plain(self.info)}


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


# --------------------------------------------------------------------------
# separated orbit sets


def _orbits(m: FiniteModel, K: np.ndarray, n: int) -> np.ndarray:
    out = np.empty((len(K), n), dtype=np.int64)
    cur = np.asarray(K, dtype=np.int64)
    for t in range(n):
        out[:, t] = cur
        cur = m.image[cur]
    return out


def _separation(m: FiniteModel, paths: np.ndarray, r: float) -> list:
    """Bitset graph joining rows of ``paths`` that stay within r of each other."""
    k = len(paths)
    adj = [0] * k
    for a in range(k):
        d = m.dist_pairs(paths[a + 1 :], np.broadcast_to(paths[a], paths[a + 1 :].shape))
        close = np.flatnonzero(d.max(axis=1) <= r + TOL) if d.size else []
        for j in close:
            b = a + 1 + int(j)
            adj[a] |= 1 << b
            adj[b] |= 1 << a
    return adj


def _greedy_separated(m: FiniteModel, paths: np.ndarray, r: float) -> list:
    """Index-order greedy: keep a row unless it stays within r of a kept row.

    Implemented as elimination (keep the first live row, drop every row
    close to it), which selects exactly the same rows.
    """
    live = np.arange(len(paths))
    chosen = []
    while live.size:
        a = int(live[0])
        chosen.append(a)
        rest = paths[live[1:]]
        d = m.dist_pairs(rest, np.broadcast_to(paths[a], rest.shape)).max(axis=1)
        live = live[1:][d > r + TOL]
    return chosen


def _separation_times(m: FiniteModel, K: np.ndarray, n_max: int, r: float) -> np.ndarray:
    """``T[a, b]``: first step at which the orbits of ``K[a]`` and ``K[b]`` are more
    than r apart, or ``n_max`` if they stay close for steps ``0..n_max-1``.

    Points ``a`` and ``b`` are (n, r)-separated iff ``T[a, b] < n``.
    """
    T = np.full((len(K), len(K)), n_max, dtype=np.int32)
    cur = np.asarray(K, dtype=np.int64)
    for t in range(n_max):
        uniq, inv = np.unique(cur, return_inverse=True)
        far = m.pairwise(uniq) > r + TOL
        np.putmask(T, (T == n_max) & far[np.ix_(inv, inv)], t)
        cur = m.image[cur]
    return T


def _greedy_from_close(close: np.ndarray) -> list:
    live = np.arange(close.shape[0])
    chosen = []
    while live.size:
        a = int(live[0])
        chosen.append(a)
        live = live[1:][~close[a, live[1:]]]
    return chosen


def _adjacency_from_close(close: np.ndarray) -> list:
    adj = []
    for a, row in enumerate(close):
        bits = 0
        for b in np.flatnonzero(row):
            if b != a:
                bits |= 1 << int(b)
        adj.append(bits)
    return adj


def separated_set(m: FiniteModel, K, n: int, r: float, mode: str = "exact",
                  cap: int = EXACT_CAP) -> np.ndarray:
    """A largest (exact) or maximal (greedy) (n, r)-separated subset of ``K``."""
    K = np.unique(np.asarray(K, dtype=np.int64))
    if K.size == 0:
        return K
    if mode == "auto":
        mode = "exact" if K.size <= cap else "greedy"
    paths = _orbits(m, K, max(n, 1))
    if mode == "greedy":
        return K[_greedy_separated(m, paths, r)]
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    if K.size > cap:
        raise CapacityError(f"exact separated count needs |K| <= {cap}, got {K.size}")
    return K[max_independent_set(_separation(m, paths, r))]


def separated_count(m: FiniteModel, K, n: int, r: float, mode: str = "exact",
                    cap: int = EXACT_CAP) -> int:
    """Size of a largest (n, r)-separated subset of ``K`` (a lower bound in greedy mode).

    Two points are (n, r)-separated when their orbits differ by more than
    ``r`` at some step ``0 <= i < n``.
    """
    return int(separated_set(m, K, n, r, mode, cap).size)


def branch_separated_count(m: FiniteModel, K, n: int, r: float, target: int | None = None,
                           budget: int = 1_000_000) -> int:
    """Greedy count of pairwise (n, r)-separated exact orbit segments starting in ``K``.

    On symbolic models a window stands for a whole cylinder, and every path
    through ``m.successors`` is the visible part of some true orbit, so the
    count ranges over those paths rather than the canonical image alone. On
    grid models the two notions agree.

    Paths are visited depth first. Once a prefix is already separated from
    every kept path, its canonical completion is kept at once. Stops early
    when ``target`` is reached; more than ``budget`` visited prefixes raises
    :class:`CapacityError`. The result is a lower bound on the true maximum.
    """
    K = np.unique(np.asarray(K, dtype=np.int64))
    kept: list = []
    visits = 0

    def full(prefix):
        row = list(prefix)
        while len(row) < n:
            row.append(int(m.image[row[-1]]))
        return row

    def near(prefix, k):
        return all(m.dist(a, b) <= r + TOL for a, b in zip(prefix, kept[k]))

    def dfs(prefix, close, seen):
        # close: kept rows (among the first ``seen``) still within r of prefix
        nonlocal visits
        visits += 1
        if visits > budget:
            raise CapacityError(f"branch enumeration exceeded {budget} prefixes")
        if target is not None and len(kept) >= target:
            return
        close = close + [k for k in range(seen, len(kept)) if near(prefix, k)]
        if not close:
            kept.append(full(prefix))
            return
        if len(prefix) == n:
            return
        t, seen = len(prefix), len(kept)
        for w in m.successors(prefix[-1]):
            w = int(w)
            dfs(prefix + [w], [k for k in close if m.dist(w, kept[k][t]) <= r + TOL], seen)

    for x in K:
        dfs([int(x)], [], 0)
    return len(kept)


def growth_slope(ns, counts) -> dict:
    """Least-squares growth rates of ``log count`` against ``n``.

    Finite models saturate: counts stop growing once every orbit has cycled
    or every distinguishable pair has separated. ``slope`` is fitted up to
    the saturation point (the first n attaining the final count),
    ``full_slope`` over the whole range.
    """
    ns = np.asarray(ns, dtype=float)
    logs = np.log(np.maximum(np.asarray(counts, dtype=float), 1.0))
    last = logs[-1]
    sat_idx = int(np.flatnonzero(np.isclose(logs, last))[0])
    saturated = sat_idx < len(ns) - 1

    def fit(x, y):
        if len(x) < 2 or np.ptp(x) == 0:
            return 0.0
        return max(float(np.polyfit(x, y, 1)[0]), 0.0)

    return {"slope": fit(ns[: sat_idx + 1], logs[: sat_idx + 1]),
            "full_slope": fit(ns, logs),
            "saturation": int(ns[sat_idx]) if saturated else None}


def entropy_slope(m: FiniteModel, K, r: float, n_range, mode: str = "auto",
                  cap: int = EXACT_CAP, region: str = "") -> EntropyEstimate:
    ns = list(n_range)
    if len(ns) < 2 or len(set(ns)) != len(ns) or min(ns) < 1:
        raise ValueError("n_range needs at least two distinct positive steps")
    K = np.unique(np.asarray(K, dtype=np.int64))
    resolved = mode if mode != "auto" else ("exact" if K.size <= cap else "greedy")
    if resolved == "exact" and K.size > cap:
        raise CapacityError(f"exact separated count needs |K| <= {cap}, got {K.size}")
    if K.size <= PAIRWISE_CAP:
        # one pass over the orbits serves every n
        T = _separation_times(m, K, max(ns), r)
        count = (lambda c: len(_greedy_from_close(c))) if resolved == "greedy" else \
            (lambda c: len(max_independent_set(_adjacency_from_close(c))))
        counts = [count(T >= n) if K.size else 0 for n in ns]
    else:
        counts = [separated_count(m, K, n, r, resolved, cap) for n in ns]
    fit = growth_slope(ns, counts)
    return EntropyEstimate(
        fit["slope"], "separated-slope",
        {"r": r, "n_min": min(ns), "n_max": max(ns), "region": region, "size": int(K.size),
         "mode": resolved},
        "lower" if resolved == "greedy" else "estimate",
        list(zip(ns, counts)),
        {"full_slope": fit["full_slope"], "saturation": fit["saturation"]})


# --------------------------------------------------------------------------
# chains


def _path_counts(G: ChainDigraph, n: int, nodes=None) -> list:
    """Number of paths with 1..n nodes, as exact integers."""
    A = G.matrix().tocsr()
    if nodes is not None:
        nodes = np.asarray(nodes, dtype=np.int64)
        A = A[nodes][:, nodes].tocsr()
    A = A.astype(np.int64)
    k = A.shape[0]
    row_max = float(np.asarray(A.sum(axis=1)).max(initial=0))
    v = np.ones(k, dtype=np.int64)
    out = [k]
    for step in range(n - 1):
        # switch to Python integers before int64 could overflow
        if float(v.max(initial=0)) * max(row_max, 1.0) * k > 2.0**62:
            return out + _path_counts_big(A, [int(c) for c in v], n - 1 - step)
        v = A @ v
        out.append(int(v.sum()))
    return out


def _path_counts_big(A, v: list, steps: int) -> list:
    indptr, indices = A.indptr, A.indices
    out = []
    for _ in range(steps):
        v = [sum(v[j] for j in indices[indptr[i] : indptr[i + 1]]) for i in range(len(v))]
        out.append(sum(v))
    return out


def path_count(G: ChainDigraph, n: int, nodes=None) -> int:
    """Number of distinct delta-chains with ``n`` nodes (dynamic programming)."""
    if n < 1:
        raise ValueError("n must be positive")
    return _path_counts(G, n, nodes)[-1]


def path_count_slope(G: ChainDigraph, n: int, nodes=None) -> float:
    """Growth increment ``log c_n - log c_{n-1}`` of the path count."""
    counts = _path_counts(G, n, nodes)
    if counts[-1] == 0 or counts[-2] == 0:
        return 0.0
    return math.log(counts[-1]) - math.log(counts[-2])


def enumerate_chains(G: ChainDigraph, n: int, cap: int = CHAIN_CAP) -> np.ndarray:
    """All chains with ``n`` nodes, as rows, in lexicographic order."""
    rows = [[i] for i in range(G.node_count)]
    for _ in range(n - 1):
        nxt = []
        for row in rows:
            for j in G.out(row[-1]):
                nxt.append(row + [int(j)])
                if len(nxt) > cap:
                    raise CapacityError(f"more than {cap} chains with {n} nodes")
        rows = nxt
    if len(rows) > cap:
        raise CapacityError(f"more than {cap} chains with {n} nodes")
    return np.array(rows, dtype=np.int64).reshape(len(rows), n)


def chain_separated_count(G: ChainDigraph, m: FiniteModel, n: int, r: float,
                          mode: str = "exact", cap: int = CHAIN_CAP) -> int:
    """Largest family of pairwise (n, r)-separated delta-chains with ``n`` nodes.

    ``all-chains`` mode is only valid below the separation floor, where any
    two distinct chains are separated, and counts paths directly.
    """
    if mode == "all-chains":
        if r >= m.separation_floor() - TOL:
            raise ValueError("all-chains mode needs r below the separation floor")
        return path_count(G, n)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    chains = enumerate_chains(G, n, cap)
    if r < m.separation_floor() - TOL:
        return len(chains)
    return len(max_independent_set(_separation(m, chains, r)))


def spectral_radius(A, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> tuple:
    """Perron root of an irreducible nonnegative sparse matrix.

    Power iteration runs on ``A + I``, which is primitive, so the iteration
    converges even for periodic blocks. Returns ``(rho, lower, upper, iters)``
    where the bracket comes from Collatz-Wielandt ratios.
    """
    k = A.shape[0]
    if k == 1:
        val = float(A[0, 0]) if A.nnz else 0.0
        return val, val, val, 0
    x = np.full(k, 1.0 / k)
    lo, hi = 0.0, math.inf
    for it in range(1, max_iter + 1):
        y = A @ x + x
        ratio = y / x
        lo, hi = max(lo, float(ratio.min())), min(hi, float(ratio.max()))
        x = y / y.sum()
        if hi - lo <= tol * max(hi, 1.0):
            rho = 0.5 * (lo + hi) - 1.0
            return rho, lo - 1.0, hi - 1.0, it
    return 0.5 * (lo + hi) - 1.0, lo - 1.0, hi - 1.0, -1


def spectral_chain_entropy(G: ChainDigraph, nodes=None, tol: float = POWER_TOL,
                           max_iter: int = POWER_MAX_ITER) -> EntropyEstimate:
    """Log spectral radius of the chain digraph (optionally restricted to ``nodes``).

    Reducible digraphs are split into strongly connected blocks and the
    largest block radius is taken. A block that exhausts the iteration cap
    contributes its bracketing bounds instead, and the estimate says so.
    """
    A = G.matrix().astype(float)
    if nodes is not None:
        nodes = np.asarray(nodes, dtype=np.int64)
        A = A[nodes][:, nodes]
    A = A.tocsr()
    n_blocks, labels = connected_components(A, directed=True, connection="strong")
    best = (0.0, 0.0, 0.0)
    converged = True
    for b in range(n_blocks):
        idx = np.flatnonzero(labels == b)
        block = A[idx][:, idx]
        if block.nnz == 0:
            continue
        rho, lo, hi, it = spectral_radius(block, tol, max_iter)
        if it < 0:
            converged = False
        if rho > best[0]:
            best = (rho, lo, hi)
    rho, lo, hi = best
    value = math.log(rho) if rho > 1.0 else 0.0
    info = {"radius": rho,
            "lower": math.log(lo) if lo > 1.0 else 0.0,
            "upper": math.log(hi) if hi > 1.0 else 0.0,
            "converged": converged, "blocks": int(n_blocks)}
    return EntropyEstimate(value, "spectral", {"delta": G.delta,
                                               "region": "all" if nodes is None else "subset"},
                           "estimate" if converged else "upper", [], info)


# --------------------------------------------------------------------------
# entropy points


def _ball_tests(m, x, r, radii, n_range, threshold, mode, cap):
    if r <= m.floor - TOL:
        raise ResolutionError(f"r {r:g} must exceed the resolution floor {m.floor:g}")
    estimates = []
    for rho in sorted(radii, reverse=True):
        est = entropy_slope(m, m.ball(int(x), rho), r, n_range, mode, cap,
                            region=f"ball({int(x)},{rho:g})")
        est.params["radius"] = rho
        estimates.append(est)
    ok = all(e.value > threshold for e in estimates)
    return Verdict(ok, estimates, {"threshold": threshold})


def entropy_point_test(m: FiniteModel, x: int, r: float, radii, n_range,
                       theta: float = THETA, mode: str = "auto", cap: int = EXACT_CAP) -> Verdict:
    """Whether every scheduled ball around ``x`` shows entropy above ``theta`` at scale r."""
    return _ball_tests(m, x, r, radii, n_range, theta, mode, cap)


def ent_rb_test(m: FiniteModel, x: int, r: float, b: float, radii, n_range,
                mode: str = "auto", cap: int = EXACT_CAP) -> Verdict:
    """Like :func:`entropy_point_test` with the stronger threshold: slope >= b."""
    v = _ball_tests(m, x, r, radii, n_range, b - TOL, mode, cap)
    v.value = all(e.value >= b - TOL for e in v.witness)
    return v


def ent_up_test(m: FiniteModel, x: int, grid, radii, n_range, mode: str = "auto",
                cap: int = EXACT_CAP) -> Verdict:
    """True iff some ``(r, b)`` of ``grid`` passes :func:`ent_rb_test`; witness is that pair."""
    for r, b in grid:
        if ent_rb_test(m, x, r, b, radii, n_range, mode, cap):
            return Verdict(True, (r, b))
    return Verdict(False, None)


# --------------------------------------------------------------------------
# certificate


@dataclass
class Certificate:
    estimate: EntropyEstimate
    chains: np.ndarray
    block_length: int
    pieces: dict
    shadows: np.ndarray | None = None


def _pairwise_separated(m: FiniteModel, rows: np.ndarray, s: float) -> bool:
    for a in range(len(rows) - 1):
        rest = rows[a + 1 :]
        d = m.dist_pairs(rest, np.broadcast_to(rows[a], rest.shape)).max(axis=1)
        if d.min() <= s + TOL:
            return False
    return True


def entropy_certificate(m: FiniteModel, G: ChainDigraph, x: int, r: float, s: float, N: int,
                        epsilon: float | None = None) -> Certificate:
    """Lower bound ``log(2)/n`` from a family of ``2**N`` separated chains.

    Two chains ``a0, a1`` of length k from ``x`` end more than r apart, and
    ``b0, b1`` return their endpoints to ``x``. The blocks ``g0 = a0 b0 a1 b1``
    and ``g1 = a1 b1 a0 b0`` both have length ``n = 2k + l + m`` and are r-apart
    at offset k. Concatenating N blocks along each word ``u`` in ``{0,1}^N``
    gives ``2**N`` pairwise (nN, s)-separated chains.

    With ``epsilon`` given (and ``s + 2*epsilon < r``), each chain is also
    shadowed when possible; the shadow orbits are then checked to be
    pairwise separated, which bounds the separated count of ``B_eps(x)``.
    """
    x = int(x)
    if epsilon is not None and s + 2 * epsilon >= r:
        raise ValueError("need s + 2*epsilon < r")
    if s >= r:
        raise ValueError("need s < r")
    star = chain_sensitive_star(m, G, x, r)
    if not star:
        raise CertificateError(f"node {x} has no chain pair separating beyond r={r:g}")
    a0, a1 = star.witness
    b0 = find_path(G, a0[-1], [x])
    b1 = find_path(G, a1[-1], [x])
    if b0 is None or b1 is None:
        raise CertificateError(f"no return chain to node {x}")
    k, l, mm = len(a0) - 1, len(b0) - 1, len(b1) - 1
    g0 = a0 + b0[1:] + a1[1:] + b1[1:]
    g1 = a1 + b1[1:] + a0[1:] + b0[1:]
    n = 2 * k + l + mm
    blocks = (g0, g1)
    rows = []
    for u in range(2 ** N):
        bits = [(u >> (N - 1 - j)) & 1 for j in range(N)]
        row = [x]
        for bit in bits:
            row.extend(blocks[bit][1:])
        rows.append(row)
    chains = np.array(rows, dtype=np.int64)
    # two words differing in bit j are r-apart at the k-offset of block j
    if m.dist(g0[k], g1[k]) <= r + TOL:
        raise AssertionError("certificate blocks are not separated at their offset")
    for j in range(N):
        col = chains[:, k + j * n]
        bit = np.array([(u >> (N - 1 - j)) & 1 for u in range(2 ** N)])
        if m.dist_pairs(col[bit == 0], col[bit == 1]).min(initial=math.inf) <= r + TOL:
            raise AssertionError("certificate family failed the offset check")
    if not _pairwise_separated(m, chains[:, : n * N], s):
        raise AssertionError("certificate family failed pairwise separation")
    bound = math.log(2) / n
    est = EntropyEstimate(bound, "certificate",
                          {"r": r, "s": s, "N": N, "delta": G.delta, "node": x},
                          "lower", [], {"k": k, "l": l, "m": mm, "n": n})
    cert = Certificate(est, chains, n, {"a0": a0, "a1": a1, "b0": b0, "b1": b1})
    if epsilon is not None:
        solver = ShadowSolver(m, G, epsilon)
        shadows = [solver.shadow_orbit(row) for row in rows]
        if all(sh is not None for sh in shadows):
            sh = np.array(shadows, dtype=np.int64)
            ok = _pairwise_separated(m, sh[:, : n * N], s)
            est.info["shadowed"] = True
            est.info["shadow_family_separated"] = bool(ok)
            est.info["shadow_starts"] = sorted(set(int(v) for v in sh[:, 0]))
            cert.shadows = sh
        else:
            est.info["shadowed"] = False
    return cert


# --------------------------------------------------------------------------
# two-set cover entropy


def _itinerary_patterns(m: FiniteModel, A, B, n: int) -> list:
    """Distinct forced-symbol patterns: symbol 1 forced inside A, 0 inside B."""
    inA = np.zeros(m.size, dtype=bool)
    inB = np.zeros(m.size, dtype=bool)
    inA[np.asarray(A, dtype=np.int64)] = True
    inB[np.asarray(B, dtype=np.int64)] = True
    paths = _orbits(m, np.arange(m.size), n)
    ones = inA[paths]
    zeros = inB[paths]
    weights = 1 << np.arange(n, dtype=np.int64)
    one_mask = ones @ weights
    zero_mask = zeros @ weights
    return sorted(set(zip(one_mask.tolist(), zero_mask.tolist())))


def cover_count(m: FiniteModel, A, B, n: int, exact: bool = True, budget: int = 2_000_000) -> tuple:
    """Minimum number of itinerary words whose cells cover the model.

    The cover is ``{X \\ A, X \\ B}``; a node's itinerary forces symbol 1
    whenever it sits in A and 0 whenever it sits in B. Patterns sharing no
    conflicting position can share one word, and pairwise compatibility of
    such patterns implies joint compatibility, so the minimum is the
    chromatic number of the conflict graph. Returns ``(count, exact_flag)``.
    """
    pats = _itinerary_patterns(m, A, B, n)
    k = len(pats)
    adj = [0] * k
    for a in range(k):
        oa, za = pats[a]
        for b in range(a + 1, k):
            ob, zb = pats[b]
            if (oa & zb) or (ob & za):
                adj[a] |= 1 << b
                adj[b] |= 1 << a
    if exact:
        try:
            return chromatic_number(adj, budget), True
        except CapacityError:
            pass
    return max(greedy_coloring(adj)) + 1 if k else 0, False


def cover_entropy_two_sets(m: FiniteModel, A, B, n_max: int, exact_limit: int = 10) -> EntropyEstimate:
    """Growth slope of the two-set cover refinement count over ``n = 1..n_max``."""
    A = np.asarray(sorted(set(int(a) for a in A)), dtype=np.int64)
    B = np.asarray(sorted(set(int(b) for b in B)), dtype=np.int64)
    if np.intersect1d(A, B).size:
        raise ValueError("A and B must be disjoint")
    if n_max > 14:
        raise CapacityError("n_max above 14 is out of reach")
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    ns = list(range(1, n_max + 1))
    counts, all_exact = [], True
    for n in ns:
        c, ok = cover_count(m, A, B, n, exact=n <= exact_limit)
        counts.append(c)
        all_exact &= ok
    fit = growth_slope(ns, counts)
    return EntropyEstimate(fit["slope"], "cover", {"n_max": n_max, "|A|": int(A.size),
                                                  "|B|": int(B.size)},
                           "estimate" if all_exact else "upper", list(zip(ns, counts)),
                           {"full_slope": fit["full_slope"], "saturation": fit["saturation"],
                            "exact": all_exact})


# --------------------------------------------------------------------------
# tables


def entropy_table(estimates, delta: float | None = None) -> str:
    """CSV with one row per (n, count) of each estimate."""
    buf = io.StringIO()
    buf.write("n,r,delta,region,count,slope\n")
    for est in estimates:
        p = est.params
        d = p.get("delta", delta)
        for n, c in est.counts:
            buf.write(f"{n},{p.get('r', '')},{'' if d is None else d},{p.get('region', '')},"
                      f"{c},{est.value:.6f}\n")
    return buf.getvalue()
