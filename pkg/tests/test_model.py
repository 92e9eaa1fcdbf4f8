import csv
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chainscope.model import (
    CapacityError,
    ModelError,
    ResolutionError,
    ResolutionSchedule,
    ValidationError,
    build_example31_model,
    build_grid_model,
    build_subshift_model,
    example31_admissible,
    example31_part,
    from_matrix,
    model_table,
    permutation_model,
    validate_model,
)

import oracles


# -- grid models -------------------------------------------------------------


def test_doubling_mesh_eighth():
    m = build_grid_model("doubling", 1 / 8)
    assert m.size == 8
    # centre 3/16 goes to 3/8, a tie between cells 2 and 3 broken downward
    assert m.image[1] == 2
    assert list(m.image) == [0, 2, 4, 6, 0, 2, 4, 6]


def test_identity_and_rotation():
    assert list(build_grid_model("identity", 1 / 4).image) == [0, 1, 2, 3]
    rot = build_grid_model("rotation", 1 / 4).image
    assert list(rot) == [2, 3, 0, 1]
    assert all(rot[rot[i]] == i and rot[i] != i for i in range(4))


@pytest.mark.parametrize("name", ["doubling", "tent", "logistic", "north_south", "rotation"])
def test_grid_projection_error_bound(name):
    m = build_grid_model(name, 1 / 64)
    fx = m.meta["true_image"][:, 0]
    if m.period:
        fx = np.mod(fx, 1.0)
    centres = m.coords[m.image, 0]
    gap = np.abs(fx - centres)
    if m.period:
        gap = np.minimum(gap, 1 - gap)
    assert gap.max() <= m.proj_error + 1e-12
    assert m.proj_error <= 1 / 64


def test_circle_metric_wraps():
    m = build_grid_model("rotation", 1 / 8)
    assert m.dist(0, 7) == pytest.approx(1 / 8)


def test_grid_errors():
    with pytest.raises(ModelError):
        build_grid_model("baker", 1 / 4)
    with pytest.raises(ModelError):
        build_grid_model("doubling", 0.3)
    with pytest.raises(CapacityError):
        build_grid_model("doubling", 2**-12, node_cap=1000)


# -- symbolic models ---------------------------------------------------------


def test_full_shift_window_two():
    m = build_subshift_model("01", [], 2)
    assert m.size == 32
    assert set(m.labels) == {"".join(w) for w in itertools.product("01", repeat=5)}


def test_golden_mean_count_and_metric():
    m = build_subshift_model("01", ["11"], 2)
    assert m.size == 13
    assert all("11" not in w for w in m.labels)
    full = build_subshift_model("01", [], 2)
    i, j = full.labels.index("00000"), full.labels.index("00001")
    assert full.dist(i, j) == pytest.approx(0.25)


def test_golden_mean_validates():
    rep = validate_model(build_subshift_model("01", ["11"], 2))
    assert rep.ok
    assert rep.separation_floor == pytest.approx(0.25)


def test_shift_branches_are_exact():
    m = build_subshift_model("01", ["11"], 3)
    for i, word in enumerate(m.labels):
        succ = {m.labels[b] for b in m.successors(i)}
        expected = {word[1:] + c for c in "01" if "11" not in word[1:] + c}
        assert succ == expected
        assert m.labels[m.image[i]] == min(expected)


def test_subshift_errors():
    with pytest.raises(ModelError):
        build_subshift_model([], [], 2)
    with pytest.raises(ModelError):
        build_subshift_model("01", ["0000000"], 2)


def test_example31_small_windows():
    m = build_example31_model(1, 1, [0.5])
    assert "(-1,-1,-1)" in m.labels
    assert not any("1,1" in lab.replace("-1", "x") for lab in m.labels)
    assert "(0.5,-0.5,-0.5)" in m.labels
    assert example31_admissible((0.5, -0.5, -0.5), [0.5])
    assert not example31_admissible((-1, 1, 1), [0.5])


def test_example31_words_satisfy_rules():
    s = [0.5, 0.75]
    m = build_example31_model(2, 2, s)
    vals = m.meta["values"]
    for w in m.meta["words"]:
        assert example31_admissible([vals[c] for c in w], s)
    # exhaustive: no admissible window is missing
    count = sum(example31_admissible(w, s) for w in itertools.product(vals, repeat=5))
    assert count == m.size


def test_example31_window_truncation():
    s = [0.5, 0.75]
    small = set(build_example31_model(2, 1, s).labels)
    big = build_example31_model(2, 2, s)
    vals = big.meta["values"]
    for w in big.meta["words"]:
        inner = "(" + ",".join(f"{vals[c]:g}" for c in w[1:-1]) + ")"
        assert inner in small


def test_example31_parts():
    m = build_example31_model(2, 2, [0.5, 0.75])
    part = example31_part(m)
    lab = dict(zip(m.labels, part))
    assert lab["(-1,-1,-1,-1,-1)"] == 3
    assert lab["(-0.5,-0.5,-0.5,-0.5,-0.5)"] == 1
    assert lab["(-0.5,-0.5,-0.75,-0.75,-0.75)"] == 0


def test_example31_parameter_errors():
    with pytest.raises(ModelError):
        build_example31_model(2, 2, [0.75, 0.5])
    with pytest.raises(ModelError):
        build_example31_model(1, 2, [1.0])


# -- validation, schedules, export -------------------------------------------


def test_validate_identity():
    rep = validate_model(build_grid_model("identity", 1 / 4))
    assert rep.ok and rep.separation_floor == pytest.approx(0.25)


def test_triangle_failure_witness():
    bad = from_matrix([[0, 1, 3], [1, 0, 1], [3, 1, 0]], [0, 1, 2])
    rep = validate_model(bad, raise_on_failure=False)
    assert not rep.ok
    assert rep.witness == (0, 1, 2)
    with pytest.raises(ValidationError):
        validate_model(bad)


def test_asymmetry_detected():
    bad = from_matrix([[0, 1], [2, 0]], [1, 0])
    assert validate_model(bad, raise_on_failure=False).failure == "asymmetric distance"


def test_non_total_image():
    bad = from_matrix([[0, 1], [1, 0]], [0, 5])
    assert validate_model(bad, raise_on_failure=False).failure == "image not total"


def test_schedule_invariants():
    with pytest.raises(ResolutionError):
        ResolutionSchedule((), (0.1,), (0.1,))
    with pytest.raises(ResolutionError):
        ResolutionSchedule((0.1, 0.2), (0.1,), (0.1,))
    with pytest.raises(ResolutionError):
        ResolutionSchedule((0.1, -0.1), (0.1,), (0.1,))
    m = build_grid_model("doubling", 1 / 8)
    with pytest.raises(ResolutionError):
        ResolutionSchedule((0.1,), (0.1,), (0.5,)).check(m)
    ResolutionSchedule((0.5, 0.25), (0.1, 0.0625), (0.25,)).check(m)


def test_model_table_stable():
    m = permutation_model([1, 2, 0])
    table = model_table(m)
    assert table == model_table(permutation_model([1, 2, 0]))
    rows = list(csv.reader(ln for ln in table.splitlines() if not ln.startswith("#")))
    assert rows[-3:] == [["0", "0", "1"], ["1", "1", "2"], ["2", "2", "0"]]


def test_dist_matches_dense_oracle(doubling9):
    idx = np.arange(0, doubling9.size, 37)
    P = doubling9.pairwise(idx)
    for a, i in enumerate(idx):
        for b, j in enumerate(idx):
            assert P[a, b] == pytest.approx(doubling9.dist(int(i), int(j)))


def test_far_pair_agrees_with_scan(rng):
    m = build_grid_model("cat", 1 / 16)
    for _ in range(20):
        idx = rng.choice(m.size, 12, replace=False)
        r = float(rng.uniform(0.05, 0.6))
        P = m.pairwise(idx)
        got = m.far_pair(idx, r)
        if (P > r + 1e-12).any():
            a, b = got
            assert m.dist(int(idx[a]), int(idx[b])) > r
        else:
            assert got is None


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.integers(0, 2**32 - 1))
def test_random_matrix_models_validate(n, seed):
    D, image = oracles.random_matrix_model(np.random.default_rng(seed), n)
    rep = validate_model(from_matrix(D, image))
    assert rep.ok
    assert rep.separation_floor == pytest.approx(D[~np.eye(n, dtype=bool)].min())
