"""Pointwise shadowing, chain continuity, equicontinuity and sensitivity.

Every decision here is exact on the finite model at the given resolution.
Infinite-horizon questions terminate because each procedure walks a finite
state space and stops when a state repeats.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .chains import ChainDigraph
from .model import TOL, CapacityError, FiniteModel, ResolutionError

DEFAULT_STATE_CAP = 500_000


def _check_eps(m: FiniteModel, eps: float, what: str = "epsilon"):
    if eps < m.floor - TOL:
        raise ResolutionError(f"{what} {eps:g} below resolution floor {m.floor:g}")


@dataclass
class Verdict:
    """A boolean answer plus whatever witnesses back it up."""

    value: bool
    witness: object = None
    info: dict = field(default_factory=dict)

    def __bool__(self):
        return self.value


# --------------------------------------------------------------------------
# shadowing


class ShadowSolver:
    """Candidate-set search deciding pointwise shadowing at fixed (epsilon, delta).

    A state is ``(v, Y)``: the chain currently sits at ``v`` and ``Y`` holds
    the current positions of every orbit that has epsilon-tracked the chain
    so far. Following an edge ``v -> w`` maps ``Y`` to ``f(Y) & B_eps(w)``.
    On grid models ``f(Y)`` is the set of cells met by the exact images.
    A node is shadowable iff no reachable state has ``Y`` empty.

    States are pruned by subsumption: ``(v, Y)`` adds nothing once some
    ``(v, Y')`` with ``Y' <= Y`` has been explored. Explored states of a
    successful search are kept as known-safe for later start nodes.
    """

    def __init__(self, m: FiniteModel, G: ChainDigraph, eps: float,
                 state_cap: int = DEFAULT_STATE_CAP):
        _check_eps(m, eps)
        self.m = m
        self.G = G
        self.eps = float(eps)
        self.state_cap = state_cap
        self._balls: dict = {}
        self._safe: dict = {}
        self._verdicts: dict = {}
        # grid cells map onto every cell their exact image touches
        self._cells = m.true_image_rows(m.node_error) if m.node_error is not None else None

    def ball(self, w: int) -> np.ndarray:
        b = self._balls.get(w)
        if b is None:
            b = self.m.ball(w, self.eps)
            self._balls[w] = b
        return b

    def _succ(self, Y: frozenset) -> np.ndarray:
        ys = np.fromiter(Y, dtype=np.int64, count=len(Y))
        if self._cells is not None:
            return np.unique(np.concatenate([self._cells[y] for y in ys]))
        if self.m.branches is None:
            return np.unique(self.m.image[ys])
        return np.unique(np.concatenate([self.m.branches[y] for y in ys]))

    @staticmethod
    def _subsumed(store: dict, v: int, Y: frozenset) -> bool:
        for old in store.get(v, ()):
            if old <= Y:
                return True
        return False

    def solve(self, x: int) -> Verdict:
        x = int(x)
        if x in self._verdicts:
            return self._verdicts[x]
        Y0 = frozenset(self.ball(x).tolist())
        if self._subsumed(self._safe, x, Y0):
            res = Verdict(True, None, {"states": 0})
            self._verdicts[x] = res
            return res
        parent = {(x, Y0): None}
        local = {x: [Y0]}
        queue = deque([(x, Y0)])
        n_states = 1
        while queue:
            v, Y = queue.popleft()
            succ = self._succ(Y)
            for w in self.G.out(v):
                w = int(w)
                Yn = np.intersect1d(succ, self.ball(w), assume_unique=True)
                if Yn.size == 0:
                    chain = [w, v]
                    st = parent[(v, Y)]
                    while st is not None:
                        chain.append(st[0])
                        st = parent[st]
                    chain.reverse()
                    res = Verdict(False, chain, {"states": n_states})
                    self._verdicts[x] = res
                    return res
                Yn = frozenset(Yn.tolist())
                if self._subsumed(local, w, Yn) or self._subsumed(self._safe, w, Yn):
                    continue
                local.setdefault(w, []).append(Yn)
                parent[(w, Yn)] = (v, Y)
                queue.append((w, Yn))
                n_states += 1
                if n_states > self.state_cap:
                    raise CapacityError(f"shadowing search exceeded {self.state_cap} states")
        for v, ys in local.items():
            self._safe.setdefault(v, []).extend(ys)
        res = Verdict(True, None, {"states": n_states})
        self._verdicts[x] = res
        return res

    def shadow_orbit(self, chain) -> list | None:
        """An orbit (node path) epsilon-tracking the finite ``chain``, or None."""
        chain = [int(c) for c in chain]
        layers = [np.asarray(self.ball(chain[0]))]
        for w in chain[1:]:
            Y = frozenset(layers[-1].tolist())
            nxt = np.intersect1d(self._succ(Y), self.ball(w), assume_unique=True)
            if nxt.size == 0:
                return None
            layers.append(nxt)
        # walk back choosing, at each step, the least predecessor still alive
        path = [int(layers[-1][0])]
        for t in range(len(chain) - 2, -1, -1):
            target = path[-1]
            for y in layers[t]:
                if target in self.m.successors(int(y)):
                    path.append(int(y))
                    break
        return path[::-1]


def is_shadowable(m: FiniteModel, G: ChainDigraph, x: int, epsilon: float) -> Verdict:
    """Every delta-chain from ``x`` is epsilon-shadowed by some orbit.

    On a negative verdict the witness is a chain whose candidate set empties.
    """
    return ShadowSolver(m, G, epsilon).solve(x)


def sh_set(m: FiniteModel, G: ChainDigraph, epsilon: float, solver: ShadowSolver | None = None):
    solver = solver or ShadowSolver(m, G, epsilon)
    return np.array([x for x in range(m.size) if solver.solve(x)], dtype=np.int64)


# --------------------------------------------------------------------------
# chain continuity


def _backtrack(G: ChainDigraph, layers: list, v: int) -> list:
    chain = [int(v)]
    for t in range(len(layers) - 2, -1, -1):
        cur = chain[-1]
        for u in layers[t]:
            if G.has_edge(int(u), cur):
                chain.append(int(u))
                break
    return chain[::-1]


def _state_key(o, layer) -> tuple:
    return (int(o), np.asarray(layer, dtype=np.int64).tobytes())


def is_chain_continuous(m: FiniteModel, G: ChainDigraph, x: int, epsilon: float) -> Verdict:
    """Every delta-chain from ``x`` stays within epsilon of the orbit of ``x``.

    The pair (orbit position, reachable layer) is eventually periodic, so the
    scan stops at the first repeated pair.
    """
    _check_eps(m, epsilon)
    x = int(x)
    layer = np.array([x], dtype=np.int64)
    o = x
    layers = [layer]
    seen = set()
    while True:
        key = _state_key(o, layer)
        if key in seen:
            return Verdict(True, None, {"steps": len(layers) - 1})
        seen.add(key)
        d = m.dist_from(o, layer)
        if d.max() > epsilon + TOL:
            v = int(layer[int(np.argmax(d))])
            return Verdict(False, _backtrack(G, layers, v), {"steps": len(layers) - 1})
        layer = G.layer_step(layer)
        o = int(m.image[o])
        layers.append(layer)


# --------------------------------------------------------------------------
# equicontinuity and sensitivity


def _joint_orbit(m: FiniteModel, start: np.ndarray):
    """Yield (t, positions) for the joint orbit of ``start`` until it cycles."""
    pos = np.asarray(start, dtype=np.int64)
    seen = set()
    t = 0
    while True:
        key = pos.tobytes()
        if key in seen:
            return
        seen.add(key)
        yield t, pos
        pos = m.image[pos]
        t += 1


def is_equicontinuous(m: FiniteModel, x: int, epsilon: float, radii) -> Verdict:
    """Some scheduled ball around ``x`` keeps every orbit within epsilon of x's orbit."""
    x = int(x)
    for rho in sorted(radii, reverse=True):
        ball = m.ball(x, rho)
        start = np.concatenate([[x], ball])
        ok = True
        for _, pos in _joint_orbit(m, start):
            if m.dist_from(int(pos[0]), pos[1:]).max() > epsilon + TOL:
                ok = False
                break
        if ok:
            return Verdict(True, rho)
    return Verdict(False, None)


def _far_pair(m: FiniteModel, pos: np.ndarray, r: float):
    """Indices (a, b) into ``pos`` with dist > r, or None."""
    uniq, first = np.unique(pos, return_index=True)
    pair = m.far_pair(uniq, r)
    if pair is None:
        return None
    return int(first[pair[0]]), int(first[pair[1]])


def is_sensitive(m: FiniteModel, x: int, r: float, radii) -> Verdict:
    """Every scheduled ball around ``x`` holds a pair whose orbits separate by more than r.

    Witness: ``(y, z, i)`` found at the smallest radius.
    """
    if r <= 2 * m.floor - TOL:
        raise ResolutionError(f"r {r:g} must exceed twice the resolution floor {m.floor:g}")
    x = int(x)
    witness = None
    for rho in sorted(radii, reverse=True):
        ball = m.ball(x, rho)
        found = None
        for t, pos in _joint_orbit(m, ball):
            pair = _far_pair(m, pos, r)
            if pair is not None:
                found = (int(ball[pair[0]]), int(ball[pair[1]]), t)
                break
        if found is None:
            return Verdict(False, None, {"radius": rho})
        witness = found
    return Verdict(True, witness)


def chain_sensitive_star(m: FiniteModel, G: ChainDigraph, x: int, r: float) -> Verdict:
    """Two delta-chains of equal length from ``x`` end more than r apart.

    Reachability of ``(u, v)`` from ``(x, x)`` in the product digraph holds
    iff ``u`` and ``v`` both lie in the same chain layer ``R_k``, so the
    product search runs over the (eventually periodic) layer sequence.
    Witness: the two chains.
    """
    x = int(x)
    layer = np.array([x], dtype=np.int64)
    layers = [layer]
    seen = set()
    while True:
        key = layer.tobytes()
        if key in seen:
            return Verdict(False, None, {"steps": len(layers) - 1})
        seen.add(key)
        pair = _far_pair(m, layer, r)
        if pair is not None:
            u, v = int(layer[pair[0]]), int(layer[pair[1]])
            return Verdict(True, (_backtrack(G, layers, u), _backtrack(G, layers, v)),
                           {"steps": len(layers) - 1})
        layer = G.layer_step(layer)
        layers.append(layer)


# --------------------------------------------------------------------------
# reports


@dataclass
class PointReport:
    node: int
    shadowable: dict = field(default_factory=dict)
    chain_continuous: dict = field(default_factory=dict)
    equicontinuous: dict = field(default_factory=dict)
    sensitive: dict = field(default_factory=dict)
    chain_sensitive: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def enc(d):
            out = []
            for key, v in sorted(d.items()):
                out.append({"params": list(key) if isinstance(key, tuple) else [key],
                            "value": bool(v.value), "witness": _plain(v.witness)})
            return out

        return {"node": self.node, "shadowable": enc(self.shadowable),
                "chain_continuous": enc(self.chain_continuous),
                "equicontinuous": enc(self.equicontinuous),
                "sensitive": enc(self.sensitive),
                "chain_sensitive": enc(self.chain_sensitive)}


def _plain(w):
    if w is None:
        return None
    if isinstance(w, (list, tuple)):
        return [_plain(v) for v in w]
    if isinstance(w, (np.integer,)):
        return int(w)
    if isinstance(w, (np.floating,)):
        return float(w)
    return w


def point_reports(m: FiniteModel, graphs: dict, schedule, scales, nodes=None) -> list:
    """Full verdict grid for each node over the schedule (graphs keyed by delta)."""
    nodes = range(m.size) if nodes is None else nodes
    solvers = {(e, d): ShadowSolver(m, graphs[d], e) for e in schedule.epsilons for d in graphs}
    reports = []
    for x in nodes:
        rep = PointReport(int(x))
        for (e, d), solver in solvers.items():
            rep.shadowable[(e, d)] = solver.solve(x)
            rep.chain_continuous[(e, d)] = is_chain_continuous(m, graphs[d], x, e)
        for e in schedule.epsilons:
            rep.equicontinuous[e] = is_equicontinuous(m, x, e, schedule.radii)
        for r in scales:
            rep.sensitive[r] = is_sensitive(m, x, r, schedule.radii)
            for d, G in graphs.items():
                rep.chain_sensitive[(r, d)] = chain_sensitive_star(m, G, x, r)
        reports.append(rep)
    return reports
