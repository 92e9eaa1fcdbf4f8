"""Delta-chain digraphs, chain recurrence and chain components at fixed resolution."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .model import TOL, FiniteModel, ModelError, ResolutionError


@dataclass(eq=False)
class ChainDigraph:
    """Edge ``i -> j`` iff ``dist(f(x_i), x_j) <= delta``.

    ``f(x_i)`` ranges over ``model.successors(i)``: the projected image for
    grid models, every exact shift branch for symbolic ones. Paths in this
    digraph are exactly the model's delta-chains.
    """

    model: FiniteModel
    delta: float
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def node_count(self) -> int:
        return self.model.size

    @property
    def edge_count(self) -> int:
        return int(self.indices.size)

    def out(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        row = self.out(i)
        k = np.searchsorted(row, j)
        return bool(k < row.size and row[k] == j)

    def matrix(self) -> csr_matrix:
        n = self.node_count
        data = np.ones(self.indices.size, dtype=float)
        return csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    def edges(self):
        for i in range(self.node_count):
            for j in self.out(i):
                yield i, int(j)

    def layer_step(self, nodes: np.ndarray) -> np.ndarray:
        """Union of out-neighbourhoods of ``nodes`` (sorted, unique)."""
        if len(nodes) == 0:
            return np.empty(0, dtype=np.int64)
        parts = [self.out(int(v)) for v in nodes]
        return np.unique(np.concatenate(parts))


def _from_rows(m: FiniteModel, delta: float, rows: list) -> ChainDigraph:
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.concatenate(rows).astype(np.int64) if rows else np.empty(0, dtype=np.int64)
    return ChainDigraph(m, float(delta), indptr, indices)


def build_chain_digraph(m: FiniteModel, delta: float) -> ChainDigraph:
    if delta < 0:
        raise ResolutionError("delta must be nonnegative")
    if delta < m.delta_floor - TOL:
        raise ResolutionError(
            f"delta {delta:g} below projection error {m.delta_floor:g}; "
            "the digraph would misrepresent the map"
        )
    size = m.size
    if m.branches is not None:
        targets = [m.branches[i] for i in range(size)]
    else:
        targets = [m.image[i : i + 1] for i in range(size)]
    exact_rows = m.true_image_rows(delta)
    if exact_rows is not None:
        return _from_rows(m, delta, exact_rows)
    if delta + TOL < m.separation_floor():
        rows = [np.unique(t) for t in targets]
        return _from_rows(m, delta, rows)
    flat = np.unique(np.concatenate(targets))
    balls = dict(zip(flat.tolist(), m.balls(flat, delta)))
    rows = []
    for t in targets:
        if len(t) == 1:
            rows.append(balls[int(t[0])])
        else:
            rows.append(np.unique(np.concatenate([balls[int(b)] for b in t])))
    return _from_rows(m, delta, rows)


def induced_digraph(G: ChainDigraph, sub: FiniteModel) -> ChainDigraph:
    """Restriction of ``G`` to the nodes of a model made by :func:`restrict_model`."""
    parent = sub.meta["parent_nodes"]
    local = {int(p): k for k, p in enumerate(parent)}
    rows = []
    for p in parent:
        row = [local[int(j)] for j in G.out(int(p)) if int(j) in local]
        rows.append(np.array(sorted(row), dtype=np.int64))
    return _from_rows(sub, G.delta, rows)


# --------------------------------------------------------------------------
# reachability


def reachable_from(G: ChainDigraph, sources, min_len: int = 1) -> np.ndarray:
    """Boolean mask of nodes reachable from ``sources`` by a path of length >= min_len."""
    seen = np.zeros(G.node_count, dtype=bool)
    start = np.asarray(sources, dtype=np.int64)
    if min_len == 0:
        seen[start] = True
        frontier = deque(start.tolist())
    else:
        frontier = deque()
        for s in start:
            for j in G.out(int(s)):
                if not seen[j]:
                    seen[j] = True
                    frontier.append(int(j))
    while frontier:
        v = frontier.popleft()
        for j in G.out(v):
            if not seen[j]:
                seen[j] = True
                frontier.append(int(j))
    return seen


def reaches(G: ChainDigraph, i: int, j: int) -> bool:
    """True iff a delta-chain of length >= 1 leads from ``i`` to ``j``."""
    return bool(reachable_from(G, [i])[j])


def find_path(G: ChainDigraph, i: int, targets, min_len: int = 1) -> list | None:
    """Shortest path (node list) from ``i`` into ``targets`` with at least ``min_len`` edges."""
    tmask = np.zeros(G.node_count, dtype=bool)
    tmask[np.asarray(list(targets) if not isinstance(targets, np.ndarray) else targets,
                     dtype=np.int64)] = True
    if min_len == 0 and tmask[i]:
        return [i]
    parent = {}
    frontier = deque()
    for j in G.out(i):
        j = int(j)
        if j not in parent:
            parent[j] = i
            frontier.append(j)
    while frontier:
        v = frontier.popleft()
        if tmask[v]:
            path = [v]
            while True:
                u = parent[path[-1]]
                path.append(u)
                if u == i and len(path) > 1:
                    break
            return path[::-1]
        for j in G.out(v):
            j = int(j)
            if j not in parent:
                parent[j] = v
                frontier.append(j)
    return None


# --------------------------------------------------------------------------
# decomposition


@dataclass(eq=False)
class ComponentDecomposition:
    scc_id: np.ndarray
    n_scc: int
    cr_mask: np.ndarray
    components: list
    comp_of_node: np.ndarray
    comp_scc: np.ndarray
    terminal: np.ndarray
    scc_edges: set = field(repr=False)
    delta: float = 0.0

    @property
    def cr_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.cr_mask)

    def terminal_components(self) -> list:
        return [c for c, t in enumerate(self.terminal) if t]

    def condensation(self) -> dict:
        """Component-level DAG: ``c -> set of components reachable from c`` (paths
        through transient nodes included, ``c`` itself excluded)."""
        n = self.n_scc
        succ = [[] for _ in range(n)]
        for a, b in self.scc_edges:
            succ[a].append(b)
        comp_bit = {}
        for c, s in enumerate(self.comp_scc):
            comp_bit[int(s)] = c
        order = _topo_order(n, succ)
        reach = [0] * n
        for s in reversed(order):
            acc = 0
            for t in succ[s]:
                acc |= reach[t]
                if t in comp_bit:
                    acc |= 1 << comp_bit[t]
            reach[s] = acc
        out = {}
        for c, s in enumerate(self.comp_scc):
            bits = reach[int(s)]
            out[c] = {k for k in range(len(self.components)) if bits >> k & 1 and k != c}
        return out


def _topo_order(n: int, succ: list) -> list:
    indeg = [0] * n
    for a in range(n):
        for b in succ[a]:
            indeg[b] += 1
    q = deque(a for a in range(n) if indeg[a] == 0)
    order = []
    while q:
        a = q.popleft()
        order.append(a)
        for b in succ[a]:
            indeg[b] -= 1
            if indeg[b] == 0:
                q.append(b)
    return order


def decompose(G: ChainDigraph) -> ComponentDecomposition:
    """SCC partition, chain recurrent nodes, components and terminal flags."""
    n = G.node_count
    n_scc, labels = connected_components(G.matrix(), directed=True, connection="strong")
    # relabel SCCs by their smallest node so output does not depend on the solver
    first = np.full(n_scc, n, dtype=np.int64)
    np.minimum.at(first, labels, np.arange(n))
    order = np.argsort(first, kind="stable")
    rank = np.empty(n_scc, dtype=np.int64)
    rank[order] = np.arange(n_scc)
    scc_id = rank[labels]

    sizes = np.bincount(scc_id, minlength=n_scc)
    src = np.repeat(np.arange(n), np.diff(G.indptr))
    dst = G.indices
    self_loop = np.zeros(n, dtype=bool)
    self_loop[src[src == dst]] = True
    cr_mask = (sizes[scc_id] > 1) | self_loop

    cross = scc_id[src] != scc_id[dst]
    scc_edges = set(zip(scc_id[src[cross]].tolist(), scc_id[dst[cross]].tolist()))
    has_out = np.zeros(n_scc, dtype=bool)
    for a, _ in scc_edges:
        has_out[a] = True

    comp_scc = np.unique(scc_id[cr_mask])
    comp_index = {int(s): c for c, s in enumerate(comp_scc)}
    comp_of_node = np.full(n, -1, dtype=np.int64)
    members = [[] for _ in comp_scc]
    for v in np.flatnonzero(cr_mask):
        c = comp_index[int(scc_id[v])]
        comp_of_node[v] = c
        members[c].append(v)
    components = [np.array(mm, dtype=np.int64) for mm in members]
    terminal = np.array([not has_out[s] for s in comp_scc], dtype=bool)
    return ComponentDecomposition(scc_id, int(n_scc), cr_mask, components, comp_of_node,
                                  comp_scc, terminal, scc_edges, G.delta)


def omega_cycle(m: FiniteModel, i: int) -> list:
    """Periodic part of the orbit of ``i`` under the model's single-valued image."""
    seen = {}
    path = []
    cur = int(i)
    while cur not in seen:
        seen[cur] = len(path)
        path.append(cur)
        cur = int(m.image[cur])
    return path[seen[cur]:]


def omega_component(m: FiniteModel, D: ComponentDecomposition, i: int) -> int:
    """Component containing the limit cycle of ``i``."""
    cyc = omega_cycle(m, i)
    c = int(D.comp_of_node[cyc[0]])
    if c < 0:
        raise ModelError("orbit cycle not chain recurrent; digraph delta below projection error?")
    return c


def chain_stability_margin(m: FiniteModel, G: ChainDigraph, D: ComponentDecomposition,
                           c: int) -> float:
    """Largest distance from ``C`` of any node a chain starting in ``C`` can reach."""
    comp = D.components[c]
    reach = reachable_from(G, comp, min_len=0)
    outside = np.flatnonzero(reach)
    inside = np.zeros(G.node_count, dtype=bool)
    inside[comp] = True
    outside = outside[~inside[outside]]
    if outside.size == 0:
        return 0.0
    return float(m.dist_to_set(outside, comp).max())


def restrict_model(m: FiniteModel, nodes) -> FiniteModel:
    """Model on a subset with images re-projected into it.

    Per-node projection error grows by the re-projection distance; the new
    ``proj_error`` is the maximum over the subset.
    """
    nodes = np.unique(np.asarray(nodes, dtype=np.int64))
    if nodes.size == 0:
        raise ModelError("cannot restrict to an empty node set")
    local = -np.ones(m.size, dtype=np.int64)
    local[nodes] = np.arange(nodes.size)

    def project(targets):
        targets = np.asarray(targets, dtype=np.int64)
        inside = local[targets] >= 0
        out = targets.copy()
        if not inside.all():
            out[~inside] = m.nearest_in(targets[~inside], nodes)
        extra = np.array([m.dist(int(a), int(b)) for a, b in zip(targets, out)])
        return local[out], extra

    img, extra = project(m.image[nodes])
    node_error = m.node_error[nodes] + extra
    branches = None
    if m.branches is not None:
        branches = []
        for k, v in enumerate(nodes):
            loc, ex = project(m.branches[v])
            branches.append(np.unique(loc))
            node_error[k] = max(node_error[k], float(m.node_error[v] + ex.max()))
        branches = tuple(branches)
    kw = dict(name=f"{m.name}|sub", image=img, proj_error=float(node_error.max()),
              mesh=m.mesh, labels=tuple(m.labels[v] for v in nodes), branches=branches,
              node_error=node_error, meta={**m.meta, "parent_nodes": nodes})
    kw["meta"].pop("words", None)
    kw["meta"].pop("levels", None)
    if "true_image" in m.meta:
        kw["meta"]["true_image"] = np.asarray(m.meta["true_image"])[nodes]
    if m.matrix is not None:
        return FiniteModel(matrix=m.matrix[np.ix_(nodes, nodes)], **kw)
    return FiniteModel(coords=m.coords[nodes], weights=m.weights, period=m.period,
                       norm=m.norm, **kw)


# --------------------------------------------------------------------------
# exports


def condensation_dot(m: FiniteModel, D: ComponentDecomposition, extra: dict | None = None) -> str:
    """Graphviz DOT of the component DAG; terminal components are highlighted."""
    extra = extra or {}
    lines = ["digraph condensation {", "  node [shape=box];"]
    for c, comp in enumerate(D.components):
        label = f"C{c}\\nsize={len(comp)}"
        for key, vals in extra.items():
            if c in vals:
                label += f"\\n{key}={vals[c]}"
        style = ' style=filled fillcolor="#f4a582"' if D.terminal[c] else ""
        lines.append(f'  C{c} [label="{label}"{style}];')
    reach = D.condensation()
    for c in range(len(D.components)):
        # transitive reduction keeps the DOT readable
        direct = set(reach[c])
        for b in reach[c]:
            direct -= reach[b]
        for b in sorted(direct):
            lines.append(f"  C{c} -> C{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def edge_list_csv(G: ChainDigraph) -> str:
    lines = ["src,dst"]
    for i, j in G.edges():
        lines.append(f"{i},{j}")
    return "\n".join(lines) + "\n"
