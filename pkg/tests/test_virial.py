import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rescert.errors import ArgumentError
from rescert.potential import PotentialModel
from rescert.virial import (
    VirialWindow,
    WindowRejected,
    build_partition,
    forbidden_margin,
    free_case_window,
    mu_cap,
    tail_limit,
    validate_window,
    virial_margin,
)

FREE = {s: PotentialModel(s=s) for s in (0.1, 0.25, 0.4, 0.5, 0.75, 1.0)}


def test_forbidden_margin_examples():
    assert forbidden_margin(FREE[0.5], -1.0, 0.0) == pytest.approx(1.0)
    assert forbidden_margin(FREE[1.0], -1.0, math.sqrt(2)) == pytest.approx(0.0, abs=1e-15)
    assert forbidden_margin(FREE[0.5], -1.0, 4.0) == pytest.approx(-1.0)


def test_virial_margin_examples():
    assert virial_margin(FREE[0.5], -1.0, 0.2, 7.3) == pytest.approx(0.3)
    assert virial_margin(FREE[1.0], -4.0, 0.5, math.e) == pytest.approx(0.5, abs=1e-15)
    assert virial_margin(FREE[0.25], -1.0, 0.1, 2.0) == pytest.approx(0.75 - 2**-0.5 - 0.1, rel=1e-12)
    assert virial_margin(FREE[0.25], -1.0, 0.1, 2.0) == pytest.approx(-0.05711, abs=1e-5)


def test_virial_margin_constant_for_half():
    r = np.geomspace(1e-3, 1e3, 50)
    np.testing.assert_allclose(virial_margin(FREE[0.5], -2.3, 0.1, r), 0.4, rtol=1e-14)
    with pytest.raises(ArgumentError):
        virial_margin(FREE[0.5], -1.0, 0.1, 0.0)


def test_free_window_half_mid_choices():
    w = free_case_window(0.5, -1.0)
    assert (w.mu, w.gamma, w.alpha) == (0.25, 0.125, 0.5)
    assert 0 < w.mu < 0.5 and 0 < w.gamma < 0.5 - w.mu and 0 < w.alpha < 1
    cert = validate_window(FREE[0.5], w)
    assert cert.passed
    assert cert.margins["forbidden_min"] == pytest.approx(w.alpha, rel=1e-12)


def test_free_window_s1_examples():
    w = free_case_window(1.0, -1.0)
    assert 0 < w.mu < 0.5 * math.log(2)
    with pytest.raises(WindowRejected):
        free_case_window(1.0, -0.4)
    w4 = free_case_window(1.0, -4.0)
    assert w4.mu == 0.5
    assert validate_window(FREE[1.0], w4).passed


def test_s1_mu_above_cap_fails_virial():
    base = free_case_window(1.0, -1.0)
    w = VirialWindow(**{**base.to_dict(), "mu": 0.4, "notes": ()})
    cert = validate_window(FREE[1.0], w)
    assert not cert.checks["virial"]


@pytest.mark.parametrize("s", [0.1, 0.25, 0.5, 0.75])
def test_rejection_boundary_s_below_one(s):
    with pytest.raises(WindowRejected):
        free_case_window(s, 0.0)
    with pytest.raises(WindowRejected):
        free_case_window(s, 0.3)
    free_case_window(s, -1e-9)


def test_rejection_boundary_s1():
    with pytest.raises(WindowRejected):
        free_case_window(1.0, -0.5)
    free_case_window(1.0, -0.5 - 1e-9)


def test_mu_cap_at_minus_one():
    assert mu_cap(1.0, -1.0) == pytest.approx(0.5 * math.log(2))
    assert free_case_window(1.0, -1.0, mu=0.3).mu == 0.3
    with pytest.raises(WindowRejected):
        free_case_window(1.0, -1.0, mu=0.4)
    with pytest.raises(WindowRejected):
        free_case_window(0.5, -1.0, mu=0.5)


def test_s1_band_fails_only_support_clauses():
    # below -e/2 no window can keep r_inner >= sqrt(e) inside the forbidden region
    for E in (-0.55, -0.8, -1.0, -1.3):
        cert = validate_window(FREE[1.0], free_case_window(1.0, E))
        assert not cert.passed
        assert set(cert.failed()) <= {"support_sqrt_e", "chi_R_saturated"}
        assert "support_sqrt_e" in cert.failed()
        assert cert.checks["virial"] and cert.checks["forbidden_region"]


def test_partition_identities():
    w = free_case_window(0.5, -1.0)
    r = np.linspace(0, 3, 3001)
    chi, chit, dchi = build_partition(w, r)
    assert np.all(chi[r <= w.r_inner] == 1) and np.all(chit[r <= w.r_inner] == 0)
    assert np.all(chi[r >= w.r_outer] == 0) and np.all(chit[r >= w.r_outer] == 1)
    assert np.max(np.abs(chi**2 + chit**2 - 1)) <= 4e-16
    h = 1e-6
    mid = 0.5 * (w.r_inner + w.r_outer)
    fd = (build_partition(w, mid + h)[0] - build_partition(w, mid - h)[0]) / (2 * h)
    assert build_partition(w, mid)[2] == pytest.approx(fd, rel=1e-6)
    with pytest.raises(ArgumentError):
        build_partition(VirialWindow(-1, 0.1, 0.1, 0.1, 1.0, 1.0, 0.5, 0.5), r)


def test_tail_limits():
    assert tail_limit(FREE[0.5], -1.0, 0.25) == pytest.approx(0.25)
    assert tail_limit(FREE[1.0], -3.0, 0.5) == pytest.approx(0.5)
    pd = PotentialModel("power-decay", 0.2, 0.3, 0.5)
    assert tail_limit(pd, -1.0, 0.25) == pytest.approx(0.25)


def test_certificate_serializes():
    cert = validate_window(FREE[0.5], free_case_window(0.5, -1.0))
    d = cert.to_dict()
    assert d["passed"] is True
    assert d["window"]["alpha"] == 0.5


@settings(max_examples=25, deadline=None)
@given(E=st.floats(-20.0, -0.01), s=st.sampled_from([0.1, 0.25, 0.4, 0.5, 0.75]))
def test_auto_windows_validate_below_one(E, s):
    w = free_case_window(s, E)
    cert = validate_window(FREE[s], w)
    assert cert.passed, cert.failed()


@settings(max_examples=25, deadline=None)
@given(E=st.floats(-30.0, -math.e / 2 - 1e-6))
def test_auto_windows_validate_s1_outside_band(E):
    cert = validate_window(FREE[1.0], free_case_window(1.0, E))
    assert cert.passed, cert.failed()
