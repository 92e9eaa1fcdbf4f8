"""Resolution-indexed checks of the chain/shadowing/entropy theorems.

A :class:`SystemAnalysis` owns one model, its resolution schedule and
caches of every verdict computed so far, so that checks sharing
ingredients do not recompute them. Each check returns a
:class:`TheoremCheck` whose status is one of ``confirmed``, ``vacuous``,
``violated-at-resolution`` or ``partial``.

Schedule levels pair ``(epsilons[j], deltas[j])``. Where a check compares a
hypothesis with a conclusion, the conclusion may use one schedule step of
slack: the next coarser epsilon or the next finer delta. Which parameters
were used is recorded.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .chains import (
    build_chain_digraph,
    decompose,
    induced_digraph,
    omega_component,
    reachable_from,
    restrict_model,
)
from .config import RunConfig, build_model, resolve_schedule
from .entropy import entropy_slope, spectral_chain_entropy
from .model import CapacityError
from .pointwise import ShadowSolver, is_chain_continuous, is_sensitive

SCHEMA_VERSION = 1
CONFIRMED = "confirmed"
VACUOUS = "vacuous"
VIOLATED = "violated-at-resolution"
PARTIAL = "partial"

THEOREMS = ("L1.1", "1.1", "1.2", "1.3", "1.4", "A1", "B1", "L2.1")
_ALIASES = {"lemma1.1": "L1.1", "l1.1": "L1.1", "1.1": "1.1", "1.2": "1.2", "1.3": "1.3",
            "1.4": "1.4", "a1": "A1", "a.1": "A1", "b1": "B1", "b.1": "B1", "lemma2.1": "L2.1",
            "l2.1": "L2.1"}


def normalize_theorem_id(tid: str) -> str:
    key = tid.strip().lower().replace(" ", "")
    if key not in _ALIASES:
        raise KeyError(f"unknown theorem id {tid!r}; known: {', '.join(THEOREMS)}")
    return _ALIASES[key]


@dataclass
class TheoremCheck:
    theorem: str
    system: str
    schedule: dict
    hypotheses: dict = field(default_factory=dict)
    conclusions: dict = field(default_factory=dict)
    status: str = CONFIRMED
    witnesses: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    failed_hypothesis: str | None = None

    def to_json(self) -> dict:
        return _plain({"schema_version": SCHEMA_VERSION, "theorem": self.theorem,
                       "system": self.system, "status": self.status,
                       "failed_hypothesis": self.failed_hypothesis, "schedule": self.schedule,
                       "hypotheses": self.hypotheses, "conclusions": self.conclusions,
                       "witnesses": self.witnesses, "notes": self.notes})


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return round(float(obj), 12)
    return obj


class SystemAnalysis:
    """Lazily computed, cached verdicts for one system at one schedule."""

    def __init__(self, cfg: RunConfig, name: str | None = None, model=None):
        self.cfg = cfg
        self.a = cfg.analysis
        self.model = model if model is not None else build_model(cfg.model)
        self.name = name or cfg.model.get("name", self.model.name)
        self.schedule = resolve_schedule(cfg.schedule, self.model)
        self.schedule.check(self.model)
        self.L = self.schedule.levels
        self.n_range = range(self.a.n_range[0], self.a.n_range[1] + 1)
        self._graphs, self._decomps, self._solvers = {}, {}, {}
        self._cc, self._sen, self._ent, self._restricted = {}, {}, {}, {}
        self._regions = {}

    # -- parameters ---------------------------------------------------------
    def eps(self, ie: int) -> float:
        return self.schedule.epsilons[ie]

    def delta(self, idl: int) -> float:
        return self.schedule.deltas[idl]

    def schedule_json(self) -> dict:
        s = self.schedule
        return {"epsilons": list(s.epsilons), "deltas": list(s.deltas), "radii": list(s.radii),
                "scales": list(self.a.scales), "n_range": list(self.a.n_range),
                "theta": self.a.theta, "rb_grid": [list(p) for p in self.a.rb_grid]}

    def slack_params(self, j: int) -> list:
        """(epsilon index, delta index) pairs usable for a conclusion at level j, strictest first."""
        out = [(j, j)]
        if j > 0:
            out.append((j - 1, j))
        if j + 1 < len(self.schedule.deltas):
            out.append((j, j + 1))
        if j > 0 and j + 1 < len(self.schedule.deltas):
            out.append((j - 1, j + 1))
        return out

    # -- structures -----------------------------------------------------------
    def graph(self, idl: int):
        if idl not in self._graphs:
            self._graphs[idl] = build_chain_digraph(self.model, self.delta(idl))
        return self._graphs[idl]

    def decomposition(self, idl: int):
        if idl not in self._decomps:
            self._decomps[idl] = decompose(self.graph(idl))
        return self._decomps[idl]

    def solver(self, ie: int, idl: int) -> ShadowSolver:
        key = (ie, idl)
        if key not in self._solvers:
            self._solvers[key] = ShadowSolver(self.model, self.graph(idl), self.eps(ie),
                                              state_cap=self.a.state_cap)
        return self._solvers[key]

    # -- pointwise verdicts ---------------------------------------------------
    def shadowable(self, x: int, ie: int, idl: int) -> bool:
        return bool(self.solver(ie, idl).solve(int(x)))

    def shadowable_mask(self, ie: int, idl: int) -> np.ndarray:
        s = self.solver(ie, idl)
        return np.array([bool(s.solve(x)) for x in range(self.model.size)])

    def chain_continuous(self, x: int, ie: int, idl: int) -> bool:
        key = (int(x), ie, idl)
        if key not in self._cc:
            self._cc[key] = bool(is_chain_continuous(self.model, self.graph(idl), int(x),
                                                     self.eps(ie)))
        return self._cc[key]

    def sensitive(self, x: int, r: float):
        key = (int(x), r)
        if key not in self._sen:
            self._sen[key] = is_sensitive(self.model, int(x), r, self.schedule.radii)
        return self._sen[key]

    def entropy_estimates(self, x: int, r: float) -> list:
        """Ball entropy estimates around x at scale r, one per scheduled radius."""
        key = (int(x), r)
        if key not in self._ent:
            ests = []
            for rho in self.schedule.radii:
                ball = self.model.ball(int(x), rho)
                # balls are often shared between nodes; estimates depend only on the set
                rkey = (ball.tobytes(), r)
                if rkey not in self._regions:
                    self._regions[rkey] = entropy_slope(self.model, ball, r, self.n_range, "auto",
                                                        self.a.exact_cap)
                e = self._regions[rkey]
                ests.append(replace(e, params={**e.params, "region": f"ball({int(x)},{rho:g})",
                                               "radius": rho}))
            self._ent[key] = ests
        return self._ent[key]

    def entropy_point(self, x: int, r: float) -> bool:
        return all(e.value > self.a.theta for e in self.entropy_estimates(x, r))

    def min_slope(self, x: int, r: float) -> float:
        return min(e.value for e in self.entropy_estimates(x, r))

    def ent_up(self, x: int):
        for r, b in self.a.rb_grid:
            if self.min_slope(x, r) >= b:
                return (r, b)
        return None

    def omega(self, x: int, idl: int) -> int:
        return omega_component(self.model, self.decomposition(idl), int(x))

    def robust_terminal(self, c: int, j: int) -> bool:
        """Component c at delta_j stays within epsilon_j under chains of the next coarser delta.

        At the coarsest level this falls back to the plain sink test.
        """
        D = self.decomposition(j)
        if j == 0:
            return bool(D.terminal[c])
        comp = D.components[c]
        reach = np.flatnonzero(reachable_from(self.graph(j - 1), comp, min_len=0))
        margin = float(self.model.dist_to_set(reach, comp).max()) if reach.size else 0.0
        return margin <= self.eps(j) + 1e-12

    def restricted_cc(self, c: int, ie: int, idl: int) -> np.ndarray:
        """Chain continuity of each node of component c inside the restricted system."""
        key = (c, ie, idl)
        if key not in self._restricted:
            comp = self.decomposition(idl).components[c]
            sub = restrict_model(self.model, comp)
            G = induced_digraph(self.graph(idl), sub)
            eps = max(self.eps(ie), sub.floor)
            self._restricted[key] = np.array(
                [bool(is_chain_continuous(sub, G, k, eps)) for k in range(sub.size)])
        return self._restricted[key]

    def new_check(self, tid: str) -> TheoremCheck:
        return TheoremCheck(tid, self.name, self.schedule_json())


# --------------------------------------------------------------------------
# individual checks


def _finish(chk: TheoremCheck, any_hypothesis: bool, failed_hypothesis: str | None = None):
    if chk.status == PARTIAL:
        return chk
    if chk.witnesses:
        chk.status = VIOLATED
    elif not any_hypothesis:
        chk.status = VACUOUS
        chk.failed_hypothesis = failed_hypothesis
    else:
        chk.status = CONFIRMED
    return chk


def check_lemma_1_1(sa: SystemAnalysis) -> TheoremCheck:
    """Every node reaches some terminal component, at every scheduled delta."""
    chk = sa.new_check("L1.1")
    for j in range(len(sa.schedule.deltas)):
        G, D = sa.graph(j), sa.decomposition(j)
        term = [v for c in D.terminal_components() for v in D.components[c]]
        # nodes that reach a terminal node = reverse reachability from terminal nodes
        rev = _reverse(G)
        ok = reachable_from(rev, term, min_len=0) if term else np.zeros(G.node_count, bool)
        bad = np.flatnonzero(~ok)
        chk.conclusions[f"delta={sa.delta(j):g}"] = {
            "terminal_components": len(D.terminal_components()),
            "components": len(D.components), "nodes_reaching_terminal": int(ok.sum())}
        for v in bad[:5]:
            chk.witnesses.append({"node": int(v), "delta": sa.delta(j)})
    chk.hypotheses["nodes"] = sa.model.size
    return _finish(chk, True)


def _reverse(G):
    from .chains import ChainDigraph

    A = G.matrix().T.tocsr()
    A.sort_indices()
    return ChainDigraph(G.model, G.delta, A.indptr.astype(np.int64), A.indices.astype(np.int64))


def check_theorem_1_1(sa: SystemAnalysis) -> TheoremCheck:
    """Shadowable + terminal limit component + sensitive at r  =>  entropy point at r/2.

    Second clause: shadowable + the largest scheduled ball lies in Sen_r  =>  same.
    """
    chk = sa.new_check("1.1")
    n_h1 = n_h2 = 0
    rho_max = sa.schedule.radii[0]
    for j in range(sa.L):
        for r in sa.a.scales:
            s = r / 2
            h1 = h2 = 0
            sh = sa.shadowable_mask(j, j)
            sen = np.array([bool(sa.sensitive(x, r)) for x in range(sa.model.size)])
            for x in range(sa.model.size):
                if not sh[x]:
                    continue
                term = sa.robust_terminal(sa.omega(x, j), j)
                clause1 = term and sen[x]
                clause2 = bool(sen[sa.model.ball(x, rho_max)].all())
                if not (clause1 or clause2):
                    continue
                h1 += clause1
                h2 += clause2
                if not sa.entropy_point(x, s):
                    chk.witnesses.append({"node": x, "level": j, "r": r, "s": s,
                                          "clause": 1 if clause1 else 2,
                                          "slope": sa.min_slope(x, s)})
            chk.hypotheses[f"level{j}/r={r:g}"] = {"clause1_nodes": h1, "clause2_nodes": h2,
                                                   "shadowable": int(sh.sum()),
                                                   "sensitive": int(sen.sum())}
            n_h1 += h1
            n_h2 += h2
    return _finish(chk, n_h1 + n_h2 > 0, "no shadowable node is sensitive with a terminal "
                   "limit component or sensitive on a whole ball")


def check_theorem_1_2(sa: SystemAnalysis) -> TheoremCheck:
    """All nodes shadowable at the finest level  =>  sensitive-ball nodes are entropy points."""
    chk = sa.new_check("1.2")
    f = sa.L - 1
    sh = sa.shadowable_mask(f, f)
    chk.hypotheses["all_shadowable_finest"] = bool(sh.all())
    chk.hypotheses["shadowable_fraction"] = float(sh.mean())
    if not sh.all():
        return _finish(chk, False, "not every node is shadowable at the finest resolution")
    rho_max = sa.schedule.radii[0]
    interior = 0
    slopes = []
    for r in sa.a.scales:
        s = r / 2
        sen = np.array([bool(sa.sensitive(x, r)) for x in range(sa.model.size)])
        for x in range(sa.model.size):
            if not sen[sa.model.ball(x, rho_max)].all():
                continue
            interior += 1
            slope = sa.min_slope(x, s)
            slopes.append(slope)
            if not sa.entropy_point(x, s):
                chk.witnesses.append({"node": x, "r": r, "s": s, "slope": slope})
    chk.hypotheses["sensitive_interior_nodes"] = interior
    if slopes:
        chk.conclusions["min_slope"] = min(slopes)
        chk.conclusions["max_slope"] = max(slopes)
    return _finish(chk, interior > 0, "no node has a sensitive scheduled ball")


def check_theorem_1_3(sa: SystemAnalysis) -> TheoremCheck:
    """Zero chain entropy  =>  (all shadowable  <=>  all chain continuous) at the finest level."""
    chk = sa.new_check("1.3")
    f = sa.L - 1
    h = spectral_chain_entropy(sa.graph(f))
    chk.hypotheses["spectral_entropy"] = h.value
    chk.hypotheses["zero_entropy"] = h.value <= sa.a.theta
    if h.value > sa.a.theta:
        return _finish(chk, False, "chain entropy above theta at the finest delta")
    sh = sa.shadowable_mask(f, f)
    cc = np.array([sa.chain_continuous(x, f, f) for x in range(sa.model.size)])
    A, B = bool(sh.all()), bool(cc.all())
    chk.conclusions.update({"A_all_shadowable": A, "B_all_chain_continuous": B,
                            "A_implies_B": (not A) or B, "B_implies_A": (not B) or A})
    if A != B:
        bad = np.flatnonzero(sh != cc)
        chk.witnesses.append({"node": int(bad[0]), "shadowable": bool(sh[bad[0]]),
                              "chain_continuous": bool(cc[bad[0]])})
    return _finish(chk, True)


def check_theorem_1_4(sa: SystemAnalysis) -> TheoremCheck:
    """All shadowable  =>  (every node in Ent_up  <=>  every terminal component has entropy)."""
    chk = sa.new_check("1.4")
    f = sa.L - 1
    sh = sa.shadowable_mask(f, f)
    chk.hypotheses["all_shadowable_finest"] = bool(sh.all())
    if not sh.all():
        return _finish(chk, False, "not every node is shadowable at the finest resolution")
    D = sa.decomposition(f)
    G = sa.graph(f)
    term_h = {c: spectral_chain_entropy(G, D.components[c]).value for c in D.terminal_components()}
    B = all(v > sa.a.theta for v in term_h.values())
    missing = [x for x in range(sa.model.size) if sa.ent_up(x) is None]
    A = not missing
    chk.conclusions.update({"A_all_ent_up": A, "B_terminal_entropy_positive": B,
                            "terminal_entropies": term_h, "non_ent_up_nodes": len(missing),
                            "A_implies_B": (not A) or B, "B_implies_A": (not B) or A})
    if A != B:
        if missing:
            chk.witnesses.append({"node": missing[0], "direction": "B=>A"})
        else:
            c = min(term_h, key=term_h.get)
            chk.witnesses.append({"component": c, "entropy": term_h[c], "direction": "A=>B"})
    return _finish(chk, True)


def check_theorem_A1(sa: SystemAnalysis) -> TheoremCheck:
    """Chain continuity of x versus terminality and chain continuity inside its limit component."""
    chk = sa.new_check("A1")
    counts = {}
    for j in range(sa.L):
        stats = {"A": 0, "B": 0, "C": 0, "D": 0}

        def clauses(x, ie, idl):
            c = sa.omega(x, idl)
            Dd = sa.decomposition(idl)
            term = bool(Dd.terminal[c])
            a = sa.chain_continuous(x, ie, idl)
            if not term:
                return a, False, False, False
            comp = Dd.components[c]
            b = all(sa.chain_continuous(int(y), ie, idl) for y in comp)
            rcc = sa.restricted_cc(c, ie, idl)
            return a, b, bool(rcc.all()), bool(rcc.any())

        for x in range(sa.model.size):
            base = clauses(x, j, j)
            for k, name in enumerate("ABCD"):
                stats[name] += base[k]
            for k, name in ((1, "B"), (2, "C"), (3, "D")):
                for lhs, rhs in ((0, k), (k, 0)):
                    if not base[lhs] or base[rhs]:
                        continue
                    # one step of slack for the conclusion side
                    ok = any(clauses(x, ie, idl)[rhs] for ie, idl in sa.slack_params(j)[1:])
                    if not ok:
                        chk.witnesses.append({"node": x, "level": j,
                                              "direction": f"{'ABCD'[lhs]}=>{'ABCD'[rhs]}"})
        counts[f"level{j}"] = stats
    chk.conclusions["clause_counts"] = counts
    return _finish(chk, True)


def check_theorem_B1(sa: SystemAnalysis) -> TheoremCheck:
    """Shadowable chain recurrent nodes stay shadowable in the system restricted to CR."""
    chk = sa.new_check("B1")
    tested = 0
    for j in range(sa.L):
        D = sa.decomposition(j)
        cr = D.cr_nodes
        sh = sa.shadowable_mask(j, j)
        targets = [int(x) for x in cr if sh[x]]
        info = {"cr_nodes": int(cr.size), "shadowable_cr_nodes": len(targets)}
        if targets:
            sub = restrict_model(sa.model, cr)
            G = induced_digraph(sa.graph(j), sub)
            slack = max(sub.proj_error - sa.model.proj_error, 0.0)
            solver = ShadowSolver(sub, G, max(sa.eps(j) + slack, sub.floor),
                                  state_cap=sa.a.state_cap)
            local = {int(v): k for k, v in enumerate(sub.meta["parent_nodes"])}
            for x in targets:
                tested += 1
                v = solver.solve(local[x])
                if not v:
                    chk.witnesses.append({"node": x, "level": j, "slack": slack,
                                          "chain": [int(sub.meta["parent_nodes"][k])
                                                    for k in v.witness]})
            info["slack"] = slack
        chk.hypotheses[f"level{j}"] = info
    return _finish(chk, tested > 0, "no shadowable chain recurrent node")


def check_lemma_2_1(sa: SystemAnalysis, seed: int = 0, pairs: int = 200,
                    entropy_pairs: int = 10) -> TheoremCheck:
    """x -> y and x shadowable  =>  y shadowable; entropy clauses on a subsample."""
    chk = sa.new_check("L2.1")
    rng = np.random.default_rng(seed)
    tested = tested_ent = 0
    for j in range(sa.L):
        G = sa.graph(j)
        xs = rng.choice(sa.model.size, size=min(pairs, sa.model.size), replace=False)
        for x in sorted(int(v) for v in xs):
            if not sa.shadowable(x, j, j):
                continue
            reach = np.flatnonzero(reachable_from(G, [x]))
            if reach.size == 0:
                continue
            y = int(reach[rng.integers(reach.size)])
            tested += 1
            if not sa.shadowable(y, j, j):
                chk.witnesses.append({"x": x, "y": y, "level": j, "clause": 1})
            if tested_ent < entropy_pairs:
                for r in sa.a.scales:
                    if not sa.entropy_point(y, r):
                        continue
                    tested_ent += 1
                    if not sa.entropy_point(x, r / 2):
                        chk.witnesses.append({"x": x, "y": y, "level": j, "clause": 2, "r": r})
                    for rr, b in sa.a.rb_grid:
                        if rr == r and sa.min_slope(y, r) >= b and sa.min_slope(x, r / 2) < b:
                            chk.witnesses.append({"x": x, "y": y, "level": j, "clause": 3,
                                                  "r": r, "b": b})
    chk.hypotheses.update({"pairs_tested": tested, "entropy_pairs_tested": tested_ent})
    return _finish(chk, tested > 0, "no shadowable node with a successor")


CHECKS = {"L1.1": check_lemma_1_1, "1.1": check_theorem_1_1, "1.2": check_theorem_1_2,
          "1.3": check_theorem_1_3, "1.4": check_theorem_1_4, "A1": check_theorem_A1,
          "B1": check_theorem_B1, "L2.1": check_lemma_2_1}


def run_checks(sa: SystemAnalysis, theorems=None) -> list:
    """Run the selected checks; capacity overruns turn a check into ``partial``."""
    ids = list(THEOREMS) if not theorems or "all" in theorems else \
        [normalize_theorem_id(t) for t in theorems]
    out = []
    for tid in ids:
        fn = CHECKS[tid]
        try:
            if tid == "L2.1":
                chk = fn(sa, seed=sa.cfg.run.seed, pairs=sa.cfg.run.sample_pairs)
            else:
                chk = fn(sa)
        except CapacityError as exc:
            chk = sa.new_check(tid)
            chk.status = PARTIAL
            chk.notes.append(f"capacity: {exc}")
        out.append(chk)
    return out


def report_header(cfg: RunConfig) -> dict:
    return {"schema_version": SCHEMA_VERSION, "tool_version": __version__,
            "config_hash": cfg.digest()}


def summary_csv(checks, header: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# tool_version={header['tool_version']} config_hash={header['config_hash']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["system", "theorem", "status", "witnesses", "failed_hypothesis"])
    for c in checks:
        w.writerow([c.system, c.theorem, c.status, len(c.witnesses), c.failed_hypothesis or ""])
    return buf.getvalue()


def exit_status(checks) -> int:
    return 1 if any(c.status in (VIOLATED, PARTIAL) for c in checks) else 0


__all__ = ["CHECKS", "SystemAnalysis", "TheoremCheck", "THEOREMS", "run_checks", "summary_csv"]
