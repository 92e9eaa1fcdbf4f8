"""Finite models of dynamical systems.

A :class:`FiniteModel` is a finite point set with a metric, a self-map given
as an index array, and the error bookkeeping that comes from squeezing a
continuous (or infinite symbolic) system into finitely many points.

Three builders are provided: cell-centred grids for concrete 1-D and 2-D
maps, windowed subshifts of finite type, and the staircase shift family
built from levels ``s_1 < ... < s_K < 1`` (``build_example31_model``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

TOL = 1e-12
DEFAULT_NODE_CAP = 200_000


class ModelError(ValueError):
    """Bad model parameters."""


class CapacityError(RuntimeError):
    """A configured size cap was exceeded."""


class ResolutionError(ValueError):
    """A requested resolution lies below what the model can represent."""


class ValidationError(AssertionError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(eq=False)
class FiniteModel:
    """Finite point set with metric, self-map and discretisation error.

    Distances come either from ``coords`` (rows are points, combined with
    per-coordinate ``weights``, optional ``period`` and a ``norm`` of
    ``"sup"`` or ``"euclid"``) or from an explicit ``matrix``.

    ``branches`` is only set for symbolic models: ``branches[i]`` lists every
    window reachable from ``i`` by one exact shift step, while ``image[i]`` is
    the canonical (alphabet-least) choice among them.
    """

    name: str
    image: np.ndarray
    proj_error: float
    mesh: float
    labels: tuple = ()
    coords: np.ndarray | None = None
    weights: np.ndarray | None = None
    period: float | None = None
    norm: str = "sup"
    matrix: np.ndarray | None = None
    branches: tuple | None = None
    node_error: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=np.int64)
        self.image.setflags(write=False)
        if self.coords is not None:
            self.coords = np.asarray(self.coords, dtype=float)
            if self.coords.ndim == 1:
                self.coords = self.coords[:, None]
            if self.weights is None:
                self.weights = np.ones(self.coords.shape[1])
            self.weights = np.asarray(self.weights, dtype=float)
        elif self.matrix is not None:
            self.matrix = np.asarray(self.matrix, dtype=float)
        else:
            raise ModelError("model needs coords or a distance matrix")
        if not self.labels:
            self.labels = tuple(str(i) for i in range(self.size))
        if self.node_error is None:
            self.node_error = np.full(self.size, float(self.proj_error))
        self._tree = None
        self._sep = None

    # -- basic shape ---------------------------------------------------------
    @property
    def size(self) -> int:
        return len(self.image)

    @property
    def floor(self) -> float:
        """Scale below which the model carries no information (mesh + proj_error)."""
        return self.mesh + self.proj_error

    @property
    def delta_floor(self) -> float:
        """Smallest admissible chain-digraph delta.

        Symbolic models carry every exact shift branch, so their chain digraph
        is exact at any delta; grid models need delta >= proj_error.
        """
        return 0.0 if self.branches is not None else self.proj_error

    def successors(self, i: int) -> np.ndarray:
        if self.branches is not None:
            return self.branches[i]
        return self.image[i : i + 1]

    def true_image_rows(self, delta) -> list | None:
        """Nodes within ``delta`` of each node's exact image point.

        Only grid models keep exact image points; other models return None.
        ``delta`` may be a scalar or one tolerance per node. A node whose exact
        image sits on a cell boundary gets both neighbouring cells once the
        tolerance reaches half a cell. The projected image is always included.
        """
        true_img = self.meta.get("true_image") if self.meta else None
        if true_img is None or self.branches is not None or self.node_error is None:
            return None
        true_img = np.asarray(true_img, dtype=float)
        if self.period is not None:
            true_img = np.mod(true_img, self.period)
        tol = np.broadcast_to(np.asarray(delta, dtype=float), (self.size,))
        reach = float(tol.max()) + float(self.node_error.max())
        rows = []
        for i, near in enumerate(self.balls(self.image, reach)):
            d = np.atleast_1d(self._diff(true_img[i][None, :], self.coords[near]))
            keep = near[d <= tol[i] + TOL]
            rows.append(np.union1d(keep, self.image[i : i + 1]).astype(np.int64))
        return rows

    # -- metric --------------------------------------------------------------
    def _diff(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        d = np.abs(a - b)
        if self.period is not None:
            d = np.minimum(d, self.period - d)
        d = d * self.weights
        if self.norm == "sup":
            return d.max(axis=-1)
        return np.sqrt((d * d).sum(axis=-1))

    def dist(self, i: int, j: int) -> float:
        if self.matrix is not None:
            return float(self.matrix[i, j])
        return float(self._diff(self.coords[i], self.coords[j]))

    def dist_from(self, i: int, idx=None) -> np.ndarray:
        """Distances from node ``i`` to ``idx`` (all nodes by default)."""
        if self.matrix is not None:
            row = self.matrix[i]
            return row if idx is None else row[np.asarray(idx, dtype=np.int64)]
        pts = self.coords if idx is None else self.coords[np.asarray(idx, dtype=np.int64)]
        return self._diff(pts, self.coords[i][None, :])

    def pairwise(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if self.matrix is not None:
            return self.matrix[np.ix_(idx, idx)]
        pts = self.coords[idx] * self.weights
        per = None if self.period is None else self.period * self.weights
        out = np.zeros((len(idx), len(idx)))
        # one coordinate at a time keeps memory at k*k rather than k*k*dim
        for k in range(pts.shape[1]):
            d = np.abs(pts[:, k, None] - pts[None, :, k])
            if per is not None:
                d = np.minimum(d, np.broadcast_to(per, pts.shape[1:])[k] - d)
            if self.norm == "sup":
                np.maximum(out, d, out=out)
            else:
                out += d * d
        return out if self.norm == "sup" else np.sqrt(out)

    def far_pair(self, idx, r: float):
        """Positions ``(a, b)`` in ``idx`` of two nodes more than r apart, or None."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size < 2:
            return None
        if self.matrix is None and self.period is None and self.norm == "sup":
            pts = self.coords[idx] * self.weights
            lo, hi = pts.argmin(axis=0), pts.argmax(axis=0)
            span = pts[hi, np.arange(pts.shape[1])] - pts[lo, np.arange(pts.shape[1])]
            k = int(np.argmax(span))
            return (int(lo[k]), int(hi[k])) if span[k] > r + TOL else None
        for s in range(0, idx.size, 256):
            block = idx[s : s + 256]
            if self.matrix is not None:
                d = self.matrix[np.ix_(block, idx)]
            else:
                d = self._diff(self.coords[block][:, None, :], self.coords[idx][None, :, :])
            hit = np.argwhere(d > r + TOL)
            if hit.size:
                return int(s + hit[0, 0]), int(hit[0, 1])
        return None

    def dist_pairs(self, a, b) -> np.ndarray:
        """Elementwise distances ``d(a[k], b[k])``; index arrays of any matching shape."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.matrix is not None:
            return self.matrix[a, b]
        return self._diff(self.coords[a], self.coords[b])

    def _kdtree(self):
        if self._tree is None and self.coords is not None:
            scaled = self.coords * self.weights
            box = None
            if self.period is not None:
                box = self.period * self.weights
            self._tree = cKDTree(scaled, boxsize=box)
        return self._tree

    @property
    def _p(self):
        return np.inf if self.norm == "sup" else 2

    def ball(self, i: int, radius: float) -> np.ndarray:
        """Sorted node indices of the closed ball of ``radius`` around ``i``."""
        if self.matrix is not None:
            return np.flatnonzero(self.matrix[i] <= radius + TOL)
        tree = self._kdtree()
        found = tree.query_ball_point(self.coords[i] * self.weights, radius + TOL, p=self._p)
        return np.array(sorted(found), dtype=np.int64)

    def balls(self, centers, radius: float) -> list:
        if self.matrix is not None:
            return [self.ball(int(c), radius) for c in centers]
        tree = self._kdtree()
        pts = self.coords[np.asarray(centers, dtype=np.int64)] * self.weights
        found = tree.query_ball_point(pts, radius + TOL, p=self._p)
        return [np.array(sorted(f), dtype=np.int64) for f in found]

    def separation_floor(self) -> float:
        """Smallest positive distance between two nodes (cached)."""
        if self._sep is None:
            self._sep = self._separation_floor()
        return self._sep

    def _separation_floor(self) -> float:
        m = self.size
        if m < 2:
            return 0.0
        if self.matrix is not None:
            d = self.matrix[~np.eye(m, dtype=bool)]
            d = d[d > TOL]
            return float(d.min()) if d.size else 0.0
        tree = self._kdtree()
        k = min(m, 8)
        dd, _ = tree.query(self.coords * self.weights, k=k, p=self._p)
        dd = dd[:, 1:].ravel()
        dd = dd[dd > TOL]
        if dd.size:
            return float(dd.min())
        # all k nearest coincide; fall back to exhaustive scan
        best = math.inf
        for i in range(m):
            row = self.dist_from(i)
            row = row[row > TOL]
            if row.size:
                best = min(best, float(row.min()))
        return 0.0 if best is math.inf else best

    def dist_to_set(self, points, targets) -> np.ndarray:
        """For each node in ``points``, distance to the nearest node of ``targets``."""
        points = np.asarray(points, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.int64)
        if self.matrix is not None:
            return self.matrix[np.ix_(points, targets)].min(axis=1)
        box = None if self.period is None else self.period * self.weights
        tree = cKDTree(self.coords[targets] * self.weights, boxsize=box)
        d, _ = tree.query(self.coords[points] * self.weights, k=1, p=self._p)
        return np.asarray(d, dtype=float)

    def nearest_in(self, points, targets) -> np.ndarray:
        """Nearest node of ``targets`` for each of ``points``; ties go to the lower index."""
        points = np.asarray(points, dtype=np.int64)
        targets = np.sort(np.asarray(targets, dtype=np.int64))
        out = np.empty(len(points), dtype=np.int64)
        for k, p in enumerate(points):
            row = self.dist_from(int(p), targets)
            out[k] = targets[int(np.argmin(row))]
        return out

    def orbit(self, i: int, steps: int) -> np.ndarray:
        out = np.empty(steps, dtype=np.int64)
        cur = i
        for t in range(steps):
            out[t] = cur
            cur = self.image[cur]
        return out

    def diameter(self) -> float:
        return float(max(self.dist_from(i).max() for i in range(self.size)))


@dataclass(frozen=True)
class ResolutionSchedule:
    """Decreasing sequences of shadowing tolerances, chain deltas and ball radii."""

    epsilons: tuple
    deltas: tuple
    radii: tuple

    def __post_init__(self):
        for name in ("epsilons", "deltas", "radii"):
            vals = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, vals)
            if not vals:
                raise ResolutionError(f"{name} schedule is empty")
            if any(v <= 0 for v in vals):
                raise ResolutionError(f"{name} entries must be positive")
            if any(b >= a for a, b in zip(vals, vals[1:])):
                raise ResolutionError(f"{name} must be strictly decreasing")

    @property
    def levels(self) -> int:
        return min(len(self.epsilons), len(self.deltas))

    def level(self, j: int) -> tuple:
        return self.epsilons[j], self.deltas[j]

    def check(self, m: FiniteModel) -> None:
        floor = m.floor
        if self.epsilons[-1] < floor - TOL:
            raise ResolutionError(
                f"smallest epsilon {self.epsilons[-1]:g} below resolution floor {floor:g}"
            )
        if self.radii[-1] < floor - TOL:
            raise ResolutionError(
                f"smallest radius {self.radii[-1]:g} below resolution floor {floor:g}"
            )
        if self.deltas[-1] < m.delta_floor - TOL:
            raise ResolutionError(
                f"smallest delta {self.deltas[-1]:g} below projection error {m.delta_floor:g}"
            )


# --------------------------------------------------------------------------
# explicit models


def from_matrix(dist, image, name="matrix", proj_error=0.0, mesh=0.0, labels=()) -> FiniteModel:
    """Model from an explicit distance matrix (used for small hand-built systems)."""
    dist = np.asarray(dist, dtype=float)
    image = np.asarray(image, dtype=np.int64)
    if dist.shape != (len(image), len(image)):
        raise ModelError("distance matrix shape does not match image length")
    return FiniteModel(name=name, image=image, proj_error=proj_error, mesh=mesh,
                       labels=tuple(labels), matrix=dist)


def permutation_model(perm: Sequence[int], spacing: float = 1.0) -> FiniteModel:
    """Points ``0..m-1`` on a line with spacing ``spacing`` permuted by ``perm``."""
    m = len(perm)
    pos = np.arange(m, dtype=float) * spacing
    return FiniteModel(name="permutation", image=np.asarray(perm), proj_error=0.0,
                       mesh=0.0, coords=pos, norm="sup")


# --------------------------------------------------------------------------
# grid models


def _doubling(x):
    return 2.0 * x


def _tent(x):
    return 1.0 - np.abs(2.0 * x - 1.0)


def _logistic(x, mu=4.0):
    return mu * x * (1.0 - x)


def _north_south(x, a=0.5, phase=0.0):
    # repelling fixed point at ``phase``, attracting one at ``phase + 1/2``
    return x + a * np.sin(2 * np.pi * (x - phase)) / (2 * np.pi)


def _rotation(x, alpha=0.5):
    return x + alpha


def _identity(x):
    return x.copy()


def _cat(xy):
    x, y = xy[:, 0], xy[:, 1]
    return np.stack([2 * x + y, x + y], axis=1)


def _identity2(xy):
    return xy.copy()


# name -> (dimension, periodic, function, default params)
MAPS: dict = {
    "identity": (1, False, _identity, {}),
    "rotation": (1, True, _rotation, {"alpha": 0.5}),
    "doubling": (1, True, _doubling, {}),
    "tent": (1, False, _tent, {}),
    "logistic": (1, False, _logistic, {"mu": 4.0}),
    "north_south": (1, True, _north_south, {"a": 0.5, "phase": 0.0}),
    "cat": (2, True, _cat, {}),
    "identity2": (2, False, _identity2, {}),
}


def _nearest_cell(y: np.ndarray, n: int, periodic: bool) -> np.ndarray:
    """Nearest cell centre on a cell-centred grid, ties toward the lower index."""
    if periodic:
        y = np.mod(y, 1.0)
    t = y * n
    r = np.round(t)
    on_boundary = np.abs(t - r) < 1e-9
    idx = np.where(on_boundary, r - 1, np.ceil(t) - 1).astype(np.int64)
    if periodic:
        # boundary at 0 (== 1) sits between cells n-1 and 0: lower index is 0
        idx = np.where(on_boundary & ((r == 0) | (r == n)), 0, idx)
        idx = np.mod(idx, n)
    else:
        idx = np.clip(idx, 0, n - 1)
    return idx


def build_grid_model(map_name: str, mesh: float, params: dict | None = None,
                     node_cap: int = DEFAULT_NODE_CAP) -> FiniteModel:
    """Cell-centred grid model of a named map on [0,1], the circle or the 2-torus.

    ``mesh`` is the cell width; it must divide 1. The stored ``FiniteModel.mesh``
    is the covering radius of the grid (half a cell in the metric).
    """
    if map_name not in MAPS:
        raise ModelError(f"unknown map {map_name!r}; known: {', '.join(sorted(MAPS))}")
    if not mesh > 0:
        raise ModelError("mesh must be positive")
    dim, periodic, fn, defaults = MAPS[map_name]
    n = int(round(1.0 / mesh))
    if n < 1 or abs(n * mesh - 1.0) > 1e-9:
        raise ModelError(f"mesh {mesh} does not divide the unit interval")
    m = n**dim
    if m > node_cap:
        raise CapacityError(f"grid of {m} nodes exceeds node cap {node_cap}")
    kw = dict(defaults)
    kw.update(params or {})
    unknown = set(kw) - set(defaults)
    if unknown:
        raise ModelError(f"unknown parameters for {map_name}: {sorted(unknown)}")

    centers_1d = (np.arange(n) + 0.5) / n
    if dim == 1:
        coords = centers_1d[:, None]
        fx = np.asarray(fn(centers_1d, **kw), dtype=float)
        image = _nearest_cell(fx, n, periodic)
        true_img = fx[:, None]
        labels = tuple(f"{c:.6g}" for c in centers_1d)
    else:
        gx, gy = np.meshgrid(centers_1d, centers_1d, indexing="ij")
        coords = np.stack([gx.ravel(), gy.ravel()], axis=1)
        fx = np.asarray(fn(coords, **kw), dtype=float)
        ix = _nearest_cell(fx[:, 0], n, periodic)
        iy = _nearest_cell(fx[:, 1], n, periodic)
        image = ix * n + iy
        true_img = fx
        labels = tuple(f"({a:.4g},{b:.4g})" for a, b in coords)

    period = 1.0 if periodic else None
    model = FiniteModel(name=map_name, image=image, proj_error=0.0, mesh=0.0,
                        labels=labels, coords=coords, period=period,
                        norm="sup" if dim == 1 else "euclid",
                        meta={"kind": "grid", "map": map_name, "params": kw,
                              "cell": 1.0 / n, "dim": dim})
    err = model._diff(np.mod(true_img, 1.0) if periodic else true_img, coords[image])
    model.node_error = np.asarray(err, dtype=float)
    model.proj_error = float(err.max()) if len(err) else 0.0
    # covering radius of the grid in the ambient metric
    half = 0.5 / n
    model.mesh = half if dim == 1 else half * math.sqrt(2)
    model.meta["true_image"] = true_img
    return model


# --------------------------------------------------------------------------
# symbolic models


def _enumerate_words(alphabet_size: int, length: int, ok_append: Callable, cap: int) -> list:
    """All words over ``range(alphabet_size)`` of given length built by checked appends."""
    words = []
    stack = [()]
    while stack:
        w = stack.pop()
        if len(w) == length:
            words.append(w)
            if len(words) > cap:
                raise CapacityError(f"more than {cap} admissible words")
            continue
        for c in range(alphabet_size - 1, -1, -1):
            if ok_append(w, c):
                stack.append(w + (c,))
    words.sort()
    return words


def _symbolic_model(name, words, ok_append, values, window, meta) -> FiniteModel:
    """Shared construction: essential pruning, branches, canonical image, metric."""
    alphabet_size = len(values)
    live = list(words)
    while True:
        index = {w: k for k, w in enumerate(live)}
        succ = []
        for w in live:
            nxt = [index[w[1:] + (c,)] for c in range(alphabet_size)
                   if ok_append(w, c) and (w[1:] + (c,)) in index]
            succ.append(nxt)
        has_pred = np.zeros(len(live), dtype=bool)
        for nxt in succ:
            has_pred[nxt] = True
        keep = [k for k in range(len(live)) if succ[k] and has_pred[k]]
        if len(keep) == len(live):
            break
        live = [live[k] for k in keep]
        if not live:
            break
    if not live:
        raise ModelError("no admissible words: empty model")

    vals = np.asarray(values, dtype=float)
    coords = vals[np.asarray(live, dtype=np.int64)]
    N = window
    weights = 2.0 ** -np.abs(np.arange(-N, N + 1))
    # successors are sorted by the appended symbol, so the first is alphabet-least
    image = np.array([s[0] for s in succ], dtype=np.int64)
    branches = tuple(np.array(s, dtype=np.int64) for s in succ)
    node_error = np.array([float(np.ptp(coords[s, -1])) for s in succ]) * 2.0**-N
    proj_error = float(node_error.max())
    mesh = 2.0 ** -(N + 1) * float(vals.max() - vals.min())
    labels = tuple(meta["render"](w) for w in live)
    meta = dict(meta)
    meta.pop("render")
    meta["words"] = live
    return FiniteModel(name=name, image=image, proj_error=proj_error, mesh=mesh,
                       labels=labels, coords=coords, weights=weights, norm="sup",
                       branches=branches, node_error=node_error, meta=meta)


def _as_symbol_seq(word, alphabet) -> tuple:
    if isinstance(word, str) and all(len(a) == 1 for a in alphabet):
        return tuple(alphabet.index(ch) for ch in word)
    return tuple(alphabet.index(a) for a in word)


def build_subshift_model(alphabet: Sequence[str], forbidden_words: Iterable = (),
                         window: int = 2, values: Sequence[float] | None = None,
                         node_cap: int = DEFAULT_NODE_CAP) -> FiniteModel:
    """Windowed subshift of finite type on coordinates ``-window..window``.

    Symbols take numeric ``values`` in the metric; by default a symbol that
    parses as a number uses that number, otherwise its alphabet position.
    """
    alphabet = [str(a) for a in alphabet]
    if not alphabet:
        raise ModelError("alphabet is empty")
    if window < 1:
        raise ModelError("window must be >= 1")
    forb = [_as_symbol_seq(w, alphabet) for w in forbidden_words]
    if any(len(f) == 0 for f in forb):
        raise ModelError("empty forbidden word")
    L = 2 * window + 1
    if forb and max(len(f) for f in forb) > L:
        raise ModelError("window shorter than a forbidden word")
    if values is None:
        try:
            values = [float(a) for a in alphabet]
        except ValueError:
            values = list(range(len(alphabet)))
    by_len: dict = {}
    for f in forb:
        by_len.setdefault(len(f), set()).add(f)

    def ok_append(w, c):
        w2 = w + (c,)
        for ln, fs in by_len.items():
            if len(w2) >= ln and w2[-ln:] in fs:
                return False
        return True

    words = _enumerate_words(len(alphabet), L, ok_append, node_cap)
    single = all(len(a) == 1 for a in alphabet)
    render = (lambda w: "".join(alphabet[c] for c in w)) if single else \
        (lambda w: ",".join(alphabet[c] for c in w))
    meta = {"kind": "subshift", "alphabet": alphabet, "forbidden": [list(f) for f in forb],
            "window": window, "render": render}
    return _symbolic_model("subshift", words, ok_append, values, window, meta)


def example31_alphabet(s: Sequence[float]) -> list:
    """Symbol values ordered by level, negative before positive: -s1, s1, ..., -1, 1."""
    out = []
    for v in list(s) + [1.0]:
        out += [-float(v), float(v)]
    return out


def example31_admissible(word: Sequence[float], s: Sequence[float]) -> bool:
    """Direct check of the three admissibility rules on a finite window of values."""
    levels = list(s)
    for a, b in zip(word, word[1:]):
        if abs(a) > abs(b) + TOL:
            return False
    for p, x in enumerate(word):
        for k, sk in enumerate(levels, start=1):
            if abs(x - sk) < TOL:
                for j in range(1, k + 1):
                    if p + j < len(word) and abs(word[p + j] + sk) > TOL:
                        return False
        if abs(x - 1.0) < TOL:
            if any(abs(y + 1.0) > TOL for y in word[p + 1 :]):
                return False
    return True


def build_example31_model(K: int, N: int, s: Sequence[float],
                          node_cap: int = DEFAULT_NODE_CAP) -> FiniteModel:
    """Windowed staircase shift over S = {+-1, +-s_1, ..., +-s_K}.

    Windows obey, inside the window: non-decreasing absolute value, every
    ``s_k`` followed by ``k`` copies of ``-s_k``, and every ``1`` followed
    only by ``-1``.
    """
    s = [float(v) for v in s]
    if K < 1 or len(s) != K:
        raise ModelError("need exactly K level values")
    if N < 1:
        raise ModelError("window radius N must be >= 1")
    if not (0 < s[0] and all(a < b for a, b in zip(s, s[1:])) and s[-1] < 1):
        raise ModelError("levels must satisfy 0 < s_1 < ... < s_K < 1")
    values = example31_alphabet(s)
    # symbol c: level = c // 2 (K means the +-1 level), sign = c % 2 (1 is positive)
    top = K

    def ok_append(w, c):
        lev, pos = divmod(c, 2)
        if w:
            if w[-1] // 2 > lev:
                return False
            n = len(w)
            for q in range(max(0, n - top), n):
                ql, qp = divmod(w[q], 2)
                if qp and ql < top and n - q <= ql + 1:
                    if not (lev == ql and not pos):
                        return False
            for q in range(n):
                ql, qp = divmod(w[q], 2)
                if qp and ql == top and not (lev == top and not pos):
                    return False
        return True

    L = 2 * N + 1
    words = _enumerate_words(len(values), L, ok_append, node_cap)

    def render(w):
        return "(" + ",".join(f"{values[c]:g}" for c in w) + ")"

    meta = {"kind": "example31", "K": K, "N": N, "s": s, "values": values,
            "window": N, "render": render}
    model = _symbolic_model("example31", words, ok_append, values, N, meta)
    lev = np.array([[c // 2 for c in w] for w in model.meta["words"]])
    model.meta["levels"] = lev
    return model


def example31_part(model: FiniteModel) -> np.ndarray:
    """Per node: k (1..K) if the window lies in level k, K+1 for the +-1 level, 0 if mixed."""
    lev = model.meta["levels"]
    same = (lev == lev[:, :1]).all(axis=1)
    return np.where(same, lev[:, 0] + 1, 0)


# --------------------------------------------------------------------------
# validation and export


@dataclass
class ValidationReport:
    ok: bool
    separation_floor: float
    checked_pairs: int
    checked_triples: int
    failure: str | None = None
    witness: tuple | None = None

    def raise_for_failure(self):
        if not self.ok:
            raise ValidationError(self.failure, self.witness)


def validate_model(m: FiniteModel, triple_samples: int = 2000, seed: int = 0,
                   raise_on_failure: bool = True) -> ValidationReport:
    """Check metric axioms (all pairs up to 2000 nodes, sampled triples) and image totality."""
    size = m.size
    rng = np.random.default_rng(seed)

    def fail(msg, witness):
        rep = ValidationReport(False, float("nan"), 0, 0, msg, witness)
        if raise_on_failure:
            rep.raise_for_failure()
        return rep

    if size == 0:
        return fail("empty model", ())
    bad = np.flatnonzero((m.image < 0) | (m.image >= size))
    if bad.size:
        return fail("image not total", (int(bad[0]),))
    if m.branches is not None:
        for i, b in enumerate(m.branches):
            if len(b) == 0 or b.min() < 0 or b.max() >= size:
                return fail("branch set not total", (i,))

    rows = range(size) if size <= 2000 else rng.choice(size, 2000, replace=False)
    pairs = 0
    for i in rows:
        i = int(i)
        row = m.dist_from(i)
        pairs += size
        if abs(row[i]) > TOL:
            return fail("dist(i,i) != 0", (i, i))
        if (row < -TOL).any():
            return fail("negative distance", (i, int(np.argmin(row))))
        col = np.array([m.dist(j, i) for j in range(size)]) if m.matrix is not None else row
        asym = np.flatnonzero(np.abs(row - col) > 1e-9)
        if asym.size:
            return fail("asymmetric distance", (i, int(asym[0])))

    triples = 0
    if size >= 3:
        if size <= 14:
            cand = [(a, b, c) for a in range(size) for b in range(size) for c in range(size)]
        else:
            cand = [tuple(int(v) for v in rng.integers(0, size, 3)) for _ in range(triple_samples)]
        for a, b, c in cand:
            triples += 1
            if m.dist(a, c) > m.dist(a, b) + m.dist(b, c) + 1e-9:
                return fail("triangle inequality violated", (a, b, c))
    return ValidationReport(True, m.separation_floor(), pairs, triples)


def model_table(m: FiniteModel) -> str:
    """CSV export: metadata comment lines, then ``index,label,image`` rows."""
    lines = [
        "# chainscope model table v1",
        f"# name={m.name}",
        f"# nodes={m.size}",
        f"# norm={m.norm}",
        f"# period={m.period}",
        f"# proj_error={m.proj_error!r}",
        f"# mesh={m.mesh!r}",
        "index,label,image",
    ]
    for i in range(m.size):
        label = m.labels[i].replace('"', "'")
        lines.append(f'{i},"{label}",{int(m.image[i])}')
    return "\n".join(lines) + "\n"
