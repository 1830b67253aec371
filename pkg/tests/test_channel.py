"""Steering vectors, multipath draws, and the layout."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmwcoex.channel import (draw_sv_channel, make_layout, steering,
                             steering_array, sv_second_moment, path_loss_db)
from mmwcoex.config import make_scenario


def test_steering_zero_angle():
    sv = steering(0.0, 4)
    np.testing.assert_allclose(sv.elements, np.full(4, 0.5), atol=1e-15)


def test_steering_endfire_two_elements():
    sv = steering(1.0, 2)
    want = np.array([1.0, -1.0]) / np.sqrt(2.0)
    np.testing.assert_allclose(sv.elements, want, atol=1e-15)


def test_steering_norm_and_phase_progression():
    sv = steering(0.37, 8).elements
    assert np.linalg.norm(sv) == pytest.approx(1.0, rel=1e-12)
    steps = sv[1:] * np.conj(sv[:-1])
    np.testing.assert_allclose(np.angle(steps), np.pi * 0.37, rtol=1e-12)


@given(psi=st.floats(-1.0, 1.0), m=st.integers(1, 32))
@settings(max_examples=60, deadline=None)
def test_steering_properties(psi, m):
    sv = steering_array(psi, m)
    assert np.linalg.norm(sv) == pytest.approx(1.0, rel=1e-12)
    if m > 1:
        steps = np.angle(sv[1:] * np.conj(sv[:-1]))
        np.testing.assert_allclose(steps, np.pi * psi, atol=1e-9)


def test_steering_rejects_bad_count():
    with pytest.raises(ValueError):
        steering(0.0, 0)


def test_los_only_draw_is_scaled_steering():
    sc = make_scenario("desk")
    rng = np.random.default_rng(3)
    h = draw_sv_channel(rng, np.array([0.0, 0.0]), np.array([3.0, 0.0]),
                        m_rx=8, sc=sc, n_nlos=0)
    # single path: constant element modulus and a uniform phase ramp
    mods = np.abs(h)
    np.testing.assert_allclose(mods, mods[0], rtol=1e-12)
    steps = np.angle(h[1:] * np.conj(h[:-1]))
    np.testing.assert_allclose(steps, steps[0], atol=1e-9)
    want_norm = np.sqrt(sv_second_moment(3.0, 0, sc))
    assert np.linalg.norm(h) == pytest.approx(want_norm, rel=1e-12)


def test_three_scattered_paths_give_rank_four_matrix():
    sc = make_scenario("desk")
    rng = np.random.default_rng(4)
    G = draw_sv_channel(rng, np.array([0.0, 0.0]), np.array([4.0, 1.0]),
                        m_rx=16, sc=sc, m_tx=8, n_nlos=3)
    s = np.linalg.svd(G, compute_uv=False)
    assert (s > s[0] * 1e-9).sum() <= 4


def test_zero_distance_rejected():
    sc = make_scenario("desk")
    rng = np.random.default_rng(5)
    with pytest.raises(ValueError):
        draw_sv_channel(rng, np.array([1.0, 1.0]), np.array([1.0, 1.0]), 4, sc)


def test_monte_carlo_norm_matches_second_moment():
    """Sample mean of ||h||^2 against the closed-form path-power sum."""
    sc = make_scenario("desk")
    rng = np.random.default_rng(6)
    d = 5.0
    tx, rx = np.array([0.0, 0.0]), np.array([d, 0.0])
    draws = np.array([
        np.linalg.norm(draw_sv_channel(rng, tx, rx, m_rx=4, sc=sc)) ** 2
        for _ in range(10_000)])
    want = sv_second_moment(d, sc.n_nlos, sc)
    assert draws.mean() == pytest.approx(want, rel=0.03)


def test_path_loss_floor_and_slope():
    assert path_loss_db(1.0, 68.0, 2.0) == pytest.approx(68.0)
    assert path_loss_db(10.0, 68.0, 2.0) == pytest.approx(88.0)
    assert path_loss_db(0.01, 68.0, 2.0) == pytest.approx(68.0)  # floored at d0


def test_layout_shapes_and_bounds():
    sc = make_scenario("desk")
    lay = make_layout(np.random.default_rng(7), sc)
    assert lay.nru_users.shape == (sc.n_users, 2)
    assert np.all((lay.nru_users >= 0) & (lay.nru_users <= sc.area_m))
    assert lay.wigig_assoc.shape == (sc.n_wigig_ap * sc.n_wigig_users_per_ap,)
