import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chainscope.chains import ChainDigraph, build_chain_digraph
from chainscope.entropy import (
    CertificateError,
    branch_separated_count,
    chain_separated_count,
    cover_entropy_two_sets,
    ent_rb_test,
    ent_up_test,
    entropy_certificate,
    entropy_point_test,
    entropy_slope,
    entropy_table,
    growth_slope,
    path_count,
    path_count_slope,
    separated_count,
    separated_set,
    spectral_chain_entropy,
)
from chainscope.model import (
    CapacityError,
    build_example31_model,
    build_grid_model,
    build_subshift_model,
    from_matrix,
)
from chainscope.pointwise import is_sensitive

import oracles

GOLDEN = math.log((1 + math.sqrt(5)) / 2)
# walks with 1..12 nodes on the two-state golden-mean digraph
GOLDEN_PATHS = [2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377]
# log spectral radius of the golden-mean window-1 chain digraph, from numpy eigvals
GOLDEN_SPECTRAL = 0.48121182505960347


def digraph(rows, dist=None):
    """Chain digraph with prescribed out-neighbour lists on an abstract model."""
    k = len(rows)
    dist = np.ones((k, k)) - np.eye(k) if dist is None else dist
    m = from_matrix(dist, list(range(k)))
    indptr = np.cumsum([0] + [len(r) for r in rows])
    indices = np.array([j for r in rows for j in sorted(r)], dtype=np.int64)
    return ChainDigraph(m, 0.0, indptr, indices)


# -- separated counts ------------------------------------------------------------


def test_single_point_count():
    m = build_grid_model("doubling", 1 / 16)
    assert all(separated_count(m, [3], n, 0.1) == 1 for n in range(1, 6))


def test_two_fixed_points_count(two_point):
    assert all(separated_count(two_point, [0, 1], n, 0.5) == 2 for n in range(1, 6))


def test_doubling_regression_count():
    m = build_grid_model("doubling", 2**-8)
    # greedy lower bound over the whole grid, pinned
    assert separated_count(m, np.arange(m.size), 6, 0.25, "greedy") == 85


def test_doubling_exact_against_frozen_oracle():
    m = build_grid_model("doubling", 1 / 16)
    got = [separated_count(m, range(6), n, 0.25) for n in range(1, 7)]
    assert got == [2, 2, 3, 6, 6, 6]


def test_north_south_exact_against_frozen_oracle():
    m = build_grid_model("north_south", 1 / 16, {"a": 0.5, "phase": 1 / 32})
    assert [separated_count(m, range(5), n, 0.125) for n in range(1, 9)] == [2] * 8


def test_exact_cap():
    m = build_grid_model("doubling", 1 / 64)
    with pytest.raises(CapacityError):
        separated_count(m, np.arange(m.size), 3, 0.25, "exact")


def test_separated_set_is_separated(doubling9):
    S = separated_set(doubling9, np.arange(0, 512, 3), 5, 0.25, "greedy")
    orbs = np.array([doubling9.orbit(int(s), 5) for s in S])
    for a in range(len(S)):
        for b in range(a + 1, len(S)):
            assert max(doubling9.dist(int(p), int(q)) for p, q in zip(orbs[a], orbs[b])) > 0.25


@pytest.mark.parametrize("n,r", [(2, 0.75), (3, 0.75), (3, 1.0), (4, 1.0)])
def test_branch_count_against_path_oracle(n, r):
    m = build_subshift_model("01", [], 1)
    D = oracles.dense(m)
    succ = lambda v: [int(w) for w in m.successors(v)]
    for x in range(m.size):
        K = list(np.flatnonzero(D[x] <= 0.6))[:2]
        got = branch_separated_count(m, K, n, r)
        assert 1 <= got <= oracles.max_separated_paths(D, succ, K, n, r)
        assert got >= separated_count(m, K, n, r, "greedy") or n == 1


def test_branch_count_sees_hidden_coordinates():
    m = build_subshift_model("01", [], 4)
    x = m.labels.index("0" * 9)
    ball = np.flatnonzero(m.pairwise(np.arange(m.size))[x] <= 0.1)
    assert ball.size == 4
    assert separated_count(m, ball, 64, 0.25) == 2
    assert branch_separated_count(m, ball, 64, 0.25, target=16) == 16
    with pytest.raises(CapacityError):
        branch_separated_count(m, ball, 64, 0.25, budget=100)


# -- slopes ------------------------------------------------------------------------


def test_full_shift_slope():
    m = build_subshift_model("01", [], 6)
    est = entropy_slope(m, np.arange(m.size), 0.5, range(1, 7), "greedy")
    assert est.value == pytest.approx(math.log(2), abs=0.05)
    assert [c for _, c in est.counts] == [2, 4, 8, 16, 32, 64]
    assert est.bound == "lower"


@pytest.mark.parametrize("name", ["identity", "rotation"])
def test_isometries_have_zero_slope(name):
    m = build_grid_model(name, 1 / 16)
    assert entropy_slope(m, np.arange(m.size), 0.1, range(1, 8)).value == 0.0


def test_slope_reports_saturation():
    fit = growth_slope([1, 2, 3, 4, 5], [2, 4, 8, 8, 8])
    assert fit["slope"] == pytest.approx(math.log(2))
    assert fit["saturation"] == 3
    assert fit["full_slope"] < fit["slope"]


def test_degenerate_n_range(two_point):
    with pytest.raises(ValueError):
        entropy_slope(two_point, [0, 1], 0.5, [3])


def test_entropy_table_rows(two_point):
    est = entropy_slope(two_point, [0, 1], 0.5, range(1, 4), region="X")
    rows = entropy_table([est]).splitlines()
    assert rows[0] == "n,r,delta,region,count,slope"
    assert rows[1:] == [f"{n},0.5,,X,2,0.000000" for n in (1, 2, 3)]


# -- chains and spectral entropy ---------------------------------------------------


def test_self_loop():
    G = digraph([[0]])
    m = G.model
    assert all(chain_separated_count(G, m, n, 0.5) == 1 for n in range(1, 6))
    assert spectral_chain_entropy(G).value == 0.0


def test_golden_mean_two_state_paths():
    G = digraph([[0, 1], [0]])
    assert [path_count(G, n) for n in range(1, 13)] == GOLDEN_PATHS
    assert path_count(G, 10) == oracles.fibonacci(12)
    assert chain_separated_count(G, G.model, 10, 0.5, "all-chains") == oracles.fibonacci(12)


def test_complete_digraph_spectral():
    for k in (2, 3, 5):
        G = digraph([list(range(k))] * k)
        assert spectral_chain_entropy(G).value == pytest.approx(math.log(k), abs=1e-9)


def test_golden_mean_spectral_matches_dp():
    m = build_subshift_model("01", ["11"], 1)
    G = build_chain_digraph(m, 1e-9)
    h = spectral_chain_entropy(G)
    assert h.value == pytest.approx(GOLDEN_SPECTRAL, abs=1e-9)
    assert h.value == pytest.approx(GOLDEN, abs=1e-9)
    assert abs(path_count_slope(G, 20) - h.value) < 1e-3


def test_full_shift_spectral():
    m = build_subshift_model("01", [], 3)
    G = build_chain_digraph(m, 1e-9)
    assert spectral_chain_entropy(G).value == pytest.approx(math.log(2), abs=1e-9)
    below = m.separation_floor() / 2
    for n in range(1, 5):
        assert chain_separated_count(G, m, n, below, "all-chains") == m.size * 2 ** (n - 1)
        assert chain_separated_count(G, m, n, below, "exact") == m.size * 2 ** (n - 1)


def test_reducible_digraph_takes_largest_block():
    # block {0,1} complete (log 2) feeding an isolated self-loop at 2
    G = digraph([[0, 1, 2], [0, 1], [2]])
    h = spectral_chain_entropy(G)
    assert h.value == pytest.approx(math.log(2), abs=1e-9)
    assert h.info["converged"]


def test_all_chains_mode_needs_fine_r(two_point):
    G = build_chain_digraph(two_point, 1.0)
    with pytest.raises(ValueError):
        chain_separated_count(G, two_point, 3, 2.0, "all-chains")


# -- entropy points ----------------------------------------------------------------


def test_identity_is_not_an_entropy_point():
    m = build_grid_model("identity", 1 / 16)
    for x in range(16):
        assert not entropy_point_test(m, x, 0.1, [0.25, 0.125], range(1, 8))
        assert not ent_rb_test(m, x, 0.1, 0.01, [0.25, 0.125], range(1, 8))


def test_full_shift_entropy_points():
    m = build_subshift_model("01", [], 4)
    for x in (0, 100, 511):
        assert entropy_point_test(m, x, 0.5, [0.5, 0.25], range(1, 8))
        assert ent_rb_test(m, x, 0.5, 0.5, [0.5, 0.25], range(1, 8))
        assert ent_up_test(m, x, [[0.5, 0.9], [0.5, 0.5]], [0.5, 0.25], range(1, 8)).witness == \
            (0.5, 0.5)


def test_north_south_entropy_points_away_from_repeller():
    h = 2.0**-7
    m = build_grid_model("north_south", h, {"a": 0.5, "phase": h / 2})
    radii = [1 / 8, 1 / 16, 1 / 32]
    # balls touching the repeller see pairs peel off it one at a time, a
    # linear count that the short-range fit reads as growth; elsewhere the
    # counts are bounded
    near = set(m.ball(0, max(radii)).tolist()) | set(m.ball(127, max(radii)).tolist())
    for x in range(0, m.size, 5):
        if x in near:
            continue
        assert not entropy_point_test(m, x, 0.25, radii, range(1, 13)), x


def test_example31_x_infinity_non_member_small():
    m = build_example31_model(2, 4, [0.9, 0.99])
    u = m.labels.index("(" + ",".join(["-1"] * 9) + ")")
    assert not ent_up_test(m, u, [[0.5, 0.5], [0.25, 0.5], [0.5, 1.0]], [0.5, 0.375, 0.25],
                           range(1, 11))


# -- certificate -------------------------------------------------------------------


def test_certificate_needs_sensitivity():
    m = build_grid_model("identity", 1 / 16)
    G = build_chain_digraph(m, 0.01)
    with pytest.raises(CertificateError):
        entropy_certificate(m, G, 3, 0.5, 0.25, 3)


def test_certificate_full_shift():
    m = build_subshift_model("01", [], 3)
    G = build_chain_digraph(m, 2**-5)
    cert = entropy_certificate(m, G, 0, 0.5, 0.25, 4)
    assert cert.chains.shape[0] == 16
    n = cert.block_length
    rows = cert.chains[:, : n * 4]
    for a in range(16):
        for b in range(a + 1, 16):
            assert max(m.dist(int(p), int(q)) for p, q in zip(rows[a], rows[b])) > 0.25
    assert cert.estimate.value == pytest.approx(math.log(2) / n)
    assert cert.estimate.bound == "lower"


def test_certificate_two_node_complete(two_point):
    G = build_chain_digraph(two_point, 1.0)
    cert = entropy_certificate(two_point, G, 0, 0.5, 0.25, 3)
    assert cert.block_length == 4
    assert cert.estimate.info == {"k": 1, "l": 1, "m": 1, "n": 4}
    assert cert.estimate.value == pytest.approx(math.log(2) / 4)
    assert len({tuple(r) for r in cert.chains}) == 8
    # words differing in bit j part at offset k + j*n
    for j in range(3):
        col = cert.chains[:, 1 + 4 * j]
        bits = [(u >> (2 - j)) & 1 for u in range(8)]
        assert all(col[u] != col[v] for u in range(8) for v in range(8) if bits[u] != bits[v])


def test_certificate_parameter_guard(two_point):
    G = build_chain_digraph(two_point, 1.0)
    with pytest.raises(ValueError):
        entropy_certificate(two_point, G, 0, 0.5, 0.25, 3, epsilon=0.2)


# -- cover entropy -----------------------------------------------------------------


def test_cover_entropy_invariant_pieces():
    m = build_grid_model("identity", 1 / 16)
    assert cover_entropy_two_sets(m, [1, 2], [10, 11], 6).value == 0.0


def test_cover_entropy_full_shift_cylinders():
    m = build_subshift_model("01", [], 3)
    A = [k for k, lab in enumerate(m.labels) if lab[3] == "0"]
    B = [k for k, lab in enumerate(m.labels) if lab[3] == "1"]
    est = cover_entropy_two_sets(m, A, B, 8)
    assert est.value == pytest.approx(math.log(2), abs=0.1)
    assert [c for _, c in est.counts][:4] == [2, 4, 8, 16]


def test_cover_entropy_example31_pair():
    m = build_example31_model(2, 4, [0.9, 0.99])
    u = m.labels.index("(" + ",".join(["-1"] * 9) + ")")
    v = m.labels.index("(" + ",".join(["-1"] * 4 + ["1"] + ["-1"] * 4) + ")")
    est = cover_entropy_two_sets(m, m.ball(u, 0.25), m.ball(v, 0.25), 10)
    assert est.value > 0
    assert est.value == pytest.approx(0.20794415416798356, abs=1e-9)


def test_cover_entropy_rejects_overlap(two_point):
    with pytest.raises(ValueError):
        cover_entropy_two_sets(two_point, [0], [0, 1], 4)


# -- properties ----------------------------------------------------------------------


def _random(seed, n):
    rng = np.random.default_rng(seed)
    D, image = oracles.random_matrix_model(rng, n)
    return from_matrix(D, image), D, image, rng


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 9))
def test_exact_count_matches_oracle(seed, n):
    m, D, image, rng = _random(seed, n)
    K = sorted(set(rng.integers(0, n, size=n).tolist()))
    r = float(rng.choice([0.1, 0.3, 0.6]))
    for steps in (1, 2, 4):
        exact = separated_count(m, K, steps, r)
        assert exact == oracles.max_separated(D, image, K, steps, r)
        assert separated_count(m, K, steps, r, "greedy") <= exact


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10))
def test_count_monotonicity(seed, n):
    m, _, _, rng = _random(seed, n)
    K = np.arange(n)
    sub = K[: max(1, n // 2)]
    for steps in (1, 3):
        for r1, r2 in ((0.1, 0.3), (0.3, 0.6)):
            assert separated_count(m, K, steps, r2) <= separated_count(m, K, steps, r1)
        assert separated_count(m, K, steps, 0.3) <= separated_count(m, K, steps + 2, 0.3)
        assert separated_count(m, sub, steps, 0.3) <= separated_count(m, K, steps, 0.3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7), st.sampled_from([0.05, 0.2]))
def test_orbits_never_beat_chains(seed, n, delta):
    m, *_ = _random(seed, n)
    G = build_chain_digraph(m, delta)
    for steps in (1, 2, 3):
        assert separated_count(m, np.arange(n), steps, 0.3) <= \
            chain_separated_count(G, m, steps, 0.3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 9))
def test_spectral_matches_eigvals(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.random((n, n)) < 0.4
    rows = [list(np.flatnonzero(a)) for a in A]
    h = spectral_chain_entropy(digraph(rows))
    assert h.value == pytest.approx(max(oracles.log_spectral_radius(A), 0.0), abs=1e-6)


@pytest.mark.parametrize("name", ["doubling", "rotation", "identity"])
def test_entropy_points_are_sensitive(name):
    m = build_grid_model(name, 1 / 64)
    radii = [1 / 8, 1 / 16]
    for x in range(0, m.size, 9):
        if entropy_point_test(m, x, 0.25, radii, range(1, 9)):
            assert is_sensitive(m, x, 0.25, radii)
