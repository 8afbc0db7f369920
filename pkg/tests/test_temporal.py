import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import epe_loop, temporal_smoothness_loop
from vfiqa.flow_io import MotionField
from vfiqa.temporal import epe, epe_map, epe_weight_map, temporal_smoothness, temporal_smoothness_map


def rand_field(rng, h, w, scale=2.0):
    return MotionField(rng.normal(0, scale, (h, w)), rng.normal(0, scale, (h, w)))


field_values = st.floats(-50, 50, allow_nan=False)


@st.composite
def field_pairs(draw, max_side=8):
    shape = draw(st.tuples(st.integers(1, max_side), st.integers(1, max_side)))
    grids = [draw(arrays(np.float64, shape, elements=field_values)) for _ in range(4)]
    return MotionField(grids[0], grids[1]), MotionField(grids[2], grids[3])


def test_epe_map_three_four_five():
    m = epe_map(MotionField.zeros(3, 4), MotionField.constant(3, 4, 3, 4))
    assert np.all(m == 5.0)


def test_epe_map_matches_loop(rng):
    a, b = rand_field(rng, 4, 4), rand_field(rng, 4, 4)
    m = epe_map(a, b)
    for y in range(4):
        for x in range(4):
            assert m[y, x] == pytest.approx(np.hypot(a.u[y, x] - b.u[y, x], a.v[y, x] - b.v[y, x]), abs=1e-12)


def test_epe_half_and_half():
    u = np.zeros((4, 4))
    u[:2] = 2.0
    assert epe(MotionField.zeros(4, 4), MotionField(u, np.zeros((4, 4)))) == 1.0


def test_epe_random_against_oracle(rng):
    a, b = rand_field(rng, 8, 8), rand_field(rng, 8, 8)
    assert epe(a, b) == pytest.approx(epe_loop(a.u.tolist(), a.v.tolist(), b.u.tolist(), b.v.tolist()), abs=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="differ"):
        epe(MotionField.zeros(2, 2), MotionField.zeros(2, 3))
    with pytest.raises(ValueError):
        temporal_smoothness(MotionField.zeros(2, 2), MotionField.zeros(3, 2))
    with pytest.raises(ValueError):
        epe_weight_map(MotionField.zeros(2, 2), MotionField.zeros(3, 2))


@settings(max_examples=50, deadline=None)
@given(field_pairs(), st.one_of(st.just(0.0), st.floats(1e-3, 8), st.floats(-8, -1e-3)))
def test_epe_properties(pair, a):
    f, g = pair
    assert epe(f, f) == 0.0
    assert epe(f, g) == epe(g, f)
    assert epe(f, g) >= 0.0
    assert epe(a * f, a * g) == pytest.approx(abs(a) * epe(f, g), rel=1e-9, abs=0)


def test_weight_map_single_pixel():
    u = np.zeros((3, 3))
    u[1, 2] = 7.0
    w = epe_weight_map(MotionField.zeros(3, 3), MotionField(u, np.zeros((3, 3))))
    expected = np.zeros((3, 3))
    expected[1, 2] = 1.0
    assert np.array_equal(w, expected)


def test_weight_map_uniform_and_degenerate():
    f = MotionField.zeros(4, 5)
    assert np.all(epe_weight_map(f, MotionField.constant(4, 5, 1, 1)) == pytest.approx(1 / 20))
    assert np.all(epe_weight_map(f, f) == 1 / 20)


@settings(max_examples=50, deadline=None)
@given(field_pairs())
def test_weight_map_sums_to_one(pair):
    w = epe_weight_map(*pair)
    assert np.all(w >= 0)
    assert abs(w.sum() - 1.0) <= 1e-9


def test_ts_constant_motion_is_zero(backend):
    f = MotionField.constant(6, 7, 2, 1)
    assert temporal_smoothness(f, f) == 0.0


def test_ts_lookup_lands_on_next_vector(backend):
    assert temporal_smoothness(MotionField.zeros(5, 5), MotionField.constant(5, 5, 3, 4)) == 5.0


def test_ts_excludes_out_of_frame(backend):
    u = np.zeros((4, 4))
    u[:, 3] = 1.0  # rightmost column leaves the frame
    values, valid = temporal_smoothness_map(MotionField(u, np.zeros((4, 4))), MotionField.zeros(4, 4))
    assert valid.sum() == 12
    assert not valid[:, 3].any()
    assert np.all(values[:, 3] == 0)


def test_ts_all_excluded_warns(backend):
    f = MotionField.constant(3, 3, 10, 0)
    with pytest.warns(RuntimeWarning, match="leaves the frame"):
        assert temporal_smoothness(f, f) == 0.0


@pytest.mark.parametrize("seed", range(20))
def test_ts_matches_loop_oracle(seed, backend):
    rng = np.random.default_rng(seed)
    a, b = rand_field(rng, 6, 6, 1.5), rand_field(rng, 6, 6, 1.5)
    expected, excluded = temporal_smoothness_loop(a.u, a.v, b.u, b.v)
    values, valid = temporal_smoothness_map(a, b)
    assert valid.size - valid.sum() == excluded
    if excluded < 36:
        assert temporal_smoothness(a, b) == pytest.approx(expected, abs=1e-9)


def test_ts_landing_on_last_row_and_column(backend):
    # trajectories ending exactly on the far border stay valid
    u = np.zeros((4, 4))
    v = np.zeros((4, 4))
    u[0, 0], v[0, 0] = 3.0, 3.0
    f = MotionField(u, v)
    nxt = MotionField(np.arange(16.0).reshape(4, 4), np.zeros((4, 4)))
    values, valid = temporal_smoothness_map(f, nxt)
    assert valid.all()
    assert values[0, 0] == pytest.approx(np.hypot(3 - 15, 3))
