"""Idling-channel algebra checked against closed forms and the master equation."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roundopt.noise import (
    NoiseParams,
    depolarize1_probs,
    depolarize2_probs,
    idling_probs,
    lindblad_twirl_probs,
    readout_flip_prob,
    t2_from,
    tphi_from_t2,
)

times = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False)
durations = st.floats(min_value=0.0, max_value=1e3, allow_nan=False)


@given(t1=times, tphi=times, t=durations)
def test_idling_probs_is_a_distribution(t1, tphi, t):
    probs = idling_probs(t1, tphi, t)
    assert abs(sum(probs) - 1.0) < 1e-12
    assert probs.px == probs.py  # damping is symmetric between X and Y
    assert probs.pz >= 0.0
    assert probs.pi >= 0.0


@given(t1=times, tphi=times)
def test_idling_limits(t1, tphi):
    at_zero = idling_probs(t1, tphi, 0.0)
    assert at_zero == (1.0, 0.0, 0.0, 0.0)
    late = idling_probs(t1, tphi, 1e9 * max(t1, tphi))
    assert abs(late.px - 0.25) < 1e-9
    assert abs(late.pz - 0.25) < 1e-9


@given(t1=times, tphi=times)
def test_t2_ceiling_and_inverse(t1, tphi):
    t2 = t2_from(t1, tphi)
    assert 0.0 < t2 <= 2.0 * t1
    back = tphi_from_t2(t1, t2)
    if math.isinf(tphi) or tphi > 1e5 * t1:
        assert back > 1e4 * t1  # near the ceiling the inverse is ill-conditioned
    else:
        assert back == pytest.approx(tphi, rel=1e-6)


def test_tphi_from_t2_edges():
    assert math.isinf(tphi_from_t2(2.0, 4.0))
    with pytest.raises(ValueError):
        tphi_from_t2(2.0, 4.0 + 1e-6)
    with pytest.raises(ValueError):
        tphi_from_t2(2.0, 0.0)


def test_idling_probs_closed_form_point():
    # t = T1, Tphi = T1: 1/T2 = 1/(2 T1) + 1/T1 -> T2 = (2/3) T1
    probs = idling_probs(1.0, 1.0, 1.0)
    decay1 = 1.0 - math.exp(-1.0)
    decay2 = 1.0 - math.exp(-1.5)
    assert probs.px == pytest.approx(decay1 / 4.0, abs=1e-15)
    assert probs.pz == pytest.approx(decay2 / 2.0 - decay1 / 4.0, abs=1e-15)


def test_lindblad_cross_check_single_point():
    got = lindblad_twirl_probs(2.0, 12.0, 0.3)
    want = idling_probs(2.0, 12.0, 0.3)
    for g, w in zip(got, want):
        assert g == pytest.approx(w, abs=1e-7)


def test_lindblad_cross_check_no_dephasing():
    got = lindblad_twirl_probs(1.5, math.inf, 0.7)
    want = idling_probs(1.5, math.inf, 0.7)
    for g, w in zip(got, want):
        assert g == pytest.approx(w, abs=1e-7)


def test_depolarizing_distributions():
    p1 = depolarize1_probs(0.3)
    assert sum(p1) == pytest.approx(1.0, abs=1e-15)
    assert p1.px == p1.py == p1.pz == pytest.approx(0.1, abs=1e-15)
    p2 = depolarize2_probs(0.3)
    assert p2.shape == (16,)
    assert p2.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(p2[1:], 0.02, atol=1e-15)


def test_readout_flip_validation():
    assert readout_flip_prob(0.02) == 0.02
    with pytest.raises(ValueError):
        readout_flip_prob(0.6)
    with pytest.raises(ValueError):
        readout_flip_prob(-0.1)


def test_noise_params_validation():
    with pytest.raises(ValueError):
        NoiseParams(t1=0.0, tphi=1.0, p=0.0, q=0.0)
    with pytest.raises(ValueError):
        NoiseParams(t1=1.0, tphi=-1.0, p=0.0, q=0.0)
    with pytest.raises(ValueError):
        NoiseParams(t1=1.0, tphi=1.0, p=1.5, q=0.0)
    with pytest.raises(ValueError):
        NoiseParams(t1=1.0, tphi=1.0, p=0.0, q=0.7)
    params = NoiseParams(t1=2.0, tphi=12.0, p=0.006, q=0.02)
    assert params.t2 == pytest.approx(3.0, abs=1e-12)


@settings(max_examples=25)
@given(
    t1=st.floats(min_value=0.1, max_value=10.0),
    tphi=st.floats(min_value=0.1, max_value=100.0),
    t=st.floats(min_value=0.0, max_value=5.0),
    splits=st.integers(min_value=2, max_value=6),
)
def test_idling_error_subadditive_over_splits(t1, tphi, t, splits):
    # splitting an idle into n chunks never increases any flip probability
    whole = idling_probs(t1, tphi, t)
    part = idling_probs(t1, tphi, t / splits)
    assert part.px <= whole.px + 1e-15
    assert part.pz <= whole.pz + 1e-15
