import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rescert.distortion import DistortionParams, r_theta_eval
from rescert.errors import ArgumentError, DomainError
from rescert.potential import (
    PotentialModel,
    condition_long_range_check,
    q_complex,
    q_eval,
    q_theta_eval,
    q_theta_taylor,
)

POWER = PotentialModel("power-decay", kappa=0.1, rho=0.3, s=0.5)
LOG = PotentialModel("log-decay", kappa=0.1, rho=0.2, s=1.0)


def test_model_validation():
    with pytest.raises(ArgumentError):
        PotentialModel("power-decay", 0.1, 1.2, 0.5)
    with pytest.raises(ArgumentError):
        PotentialModel("power-decay", 0.1, 0.3, 1.0)
    with pytest.raises(ArgumentError):
        PotentialModel("log-decay", 0.1, 0.3, 0.5)
    with pytest.raises(ArgumentError):
        PotentialModel("tabulated")


def test_q_examples():
    assert q_eval(PotentialModel(s=0.5), 7.0) == 0
    assert q_eval(POWER, 0.0) == pytest.approx(0.1, rel=1e-15)
    h = 1e-5
    fd = (q_eval(POWER, 10 + h) - q_eval(POWER, 10 - h)) / (2 * h)
    assert q_eval(POWER, 10.0, 1) == pytest.approx(fd, rel=1e-7)


@pytest.mark.parametrize("m", [POWER, LOG, PotentialModel("quadratic", 0.3, s=1.0)])
def test_q_derivatives_match_finite_differences(m):
    r = np.linspace(0.2, 30, 50)
    h = 1e-5
    for k in range(3):
        fd = (q_eval(m, r + h, k) - q_eval(m, r - h, k)) / (2 * h)
        np.testing.assert_allclose(q_eval(m, r, k + 1), fd, rtol=1e-6, atol=1e-9)


def test_log_decay_closed_form():
    r = 4.0
    br = math.sqrt(1 + r * r)
    expect = 0.1 * (math.log(br) + 1) ** (-1.2) * br**2
    assert q_eval(LOG, r) == pytest.approx(expect, rel=1e-14)


def test_long_range_examples():
    rep = condition_long_range_check(PotentialModel(s=0.5), 3)
    assert rep.ok and rep.constants == [0, 0, 0, 0]
    rep = condition_long_range_check(POWER, 3)
    assert rep.ok and rep.constants[0] == pytest.approx(0.1, rel=1e-12)
    rep = condition_long_range_check(LOG, 1)
    assert rep.ok and np.isfinite(rep.constants[1]) and rep.constants[1] > 0


def test_long_range_flags_growing_model():
    # the quadratic test family grows like <r>^2, outside the s=1/2 envelope
    rep = condition_long_range_check(PotentialModel("quadratic", 0.5, s=0.5), 0)
    assert not rep.ok


def test_q_theta_examples():
    p = DistortionParams.create(theta=0.1j, s=0.5, R=1.0)
    assert q_theta_eval(PotentialModel(s=0.5), p, 3.0) == 0
    p0 = p.with_theta(0.0)
    assert q_theta_eval(POWER, p0, 3.0) == q_eval(POWER, 3.0)
    r = 5.0
    q0, first = q_theta_taylor(POWER, p, r)
    err = abs(q_theta_eval(POWER, p, r) - q0 - 0.1j * first)
    assert err <= 5 * 0.1**2 * abs(q0)


def test_q_theta_taylor_examples():
    p = DistortionParams.create(theta=0.1j, s=0.5, R=1.0)
    assert q_theta_taylor(PotentialModel(s=0.5), p, 4.0) == (0, 0)
    assert q_theta_taylor(POWER, p, 0.8)[1] == 0
    p1 = DistortionParams.create(theta=0.1j, s=1.0, R=1.0)
    _, first = q_theta_taylor(LOG, p1, 3.0)
    assert first == pytest.approx(math.log(3.0) / 3.0 * q_eval(LOG, 3.0, 1), rel=1e-14)


def test_q_theta_real_theta_is_composition():
    for m in (POWER, LOG):
        p = DistortionParams.create(theta=0.2, s=m.s, R=1.0)
        r = np.linspace(0.5, 12, 40)
        rt = r_theta_eval(p, r)[0].real
        np.testing.assert_allclose(q_theta_eval(m, p, r).real, q_eval(m, rt), rtol=1e-12)


def test_q_theta_taylor_uniform_first_order():
    for m in (POWER, LOG):
        p = DistortionParams.create(theta=0.05j, s=m.s, R=1.0)
        r = np.linspace(2.0, 10.0, 60)
        q0, first = q_theta_taylor(m, p, r)
        err = np.abs(q_theta_eval(m, p, r) - q0 - 0.05j * first)
        assert np.all(err <= 5 * 0.05**2 * np.maximum(np.abs(q0), 1e-300))


def test_q_theta_beta0_guard():
    m = PotentialModel("power-decay", 0.1, 0.3, 0.5, beta0=0.05)
    with pytest.raises(DomainError):
        q_theta_eval(m, DistortionParams.create(theta=0.1j, s=0.5), 3.0)


def test_q_complex_branch_guard():
    with pytest.raises(DomainError):
        q_complex(POWER, np.array([2.0j]))


def test_mismatched_exponent():
    with pytest.raises(ArgumentError):
        q_theta_eval(POWER, DistortionParams.create(theta=0.1j, s=1.0), 3.0)


@settings(max_examples=40, deadline=None)
@given(kappa=st.floats(-1, 1), rho=st.floats(0.05, 0.95), s=st.floats(0.1, 0.9), r=st.floats(0, 50))
def test_power_decay_envelope_constant_is_kappa(kappa, rho, s, r):
    m = PotentialModel("power-decay", kappa, rho, s)
    assert q_eval(m, r) == pytest.approx(kappa * (1 + r * r) ** ((2 * s - rho) / 2), rel=1e-12, abs=1e-300)
