"""Unit tests for pulse schemes, validation, and frequency certificates."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chirpsim import pulse, slowfn

_v0 = st.floats(min_value=-0.9, max_value=-0.1)
_v1 = st.floats(min_value=0.1, max_value=0.9)


# -- schemes --

def test_default_scheme_closed_forms():
    u, delta = pulse.default_scheme(-0.5, 0.5)
    s = np.linspace(0, 1, 101)
    np.testing.assert_allclose(u.eval(s), 1 - np.cos(np.pi * s), atol=1e-14)
    np.testing.assert_allclose(delta.eval(s), (-1 / np.pi) * np.sin(np.pi * s),
                               atol=1e-14)


@given(_v0, _v1)
def test_default_scheme_chirp_endpoints(v0, v1):
    _, delta = pulse.default_scheme(v0, v1)
    dd = delta.derivative()
    assert dd.eval(0.0) == pytest.approx(2 * v0, abs=1e-12)
    assert dd.eval(1.0) == pytest.approx(2 * v1, abs=1e-12)


def test_default_scheme_phase_curvature_at_half():
    _, delta = pulse.default_scheme(-0.5, 0.5)
    d2 = delta.derivative().derivative()
    assert d2.eval(0.5) == pytest.approx(np.pi, abs=1e-12)


def test_default_scheme_rejects_bad_order():
    with pytest.raises(ValueError):
        pulse.default_scheme(0.1, 0.5)
    with pytest.raises(ValueError):
        pulse.default_scheme(-0.5, -0.1)


def test_variant_schemes_share_phase_and_vanish_at_endpoints():
    for scheme_fn in (pulse.s0_scheme, pulse.s1_scheme):
        u, delta = scheme_fn(-0.5, 0.5)
        _, delta_ref = pulse.default_scheme(-0.5, 0.5)
        s = np.linspace(0, 1, 51)
        np.testing.assert_allclose(delta.eval(s), delta_ref.eval(s), atol=1e-14)
        assert abs(u.eval(0.0)) < 1e-12
        assert abs(u.eval(1.0)) < 1e-12
        assert np.all(u.eval(s[1:-1]) > 0.0)


def test_make_spec_rejects_unknown_scheme():
    with pytest.raises(ValueError):
        pulse.make_spec(1, -0.5, 0.5, 0.5, 0.1, scheme="nope")
    with pytest.raises(ValueError):
        pulse.make_spec(1, -0.5, 0.5, 0.5, 0.1, scheme="custom")


# -- validation --

def test_validate_baseline_boundary_condition(sec3_spec):
    rep = pulse.validate(sec3_spec)
    assert rep.theorem_condition  # 3(E+v0) = E+v1 boundary accepted
    assert rep.ok
    assert not rep.envelope_final_zero  # u(1) = 2 for this scheme
    assert not rep.theorem_ok


def test_validate_variant_schemes_fully_compliant(s0_spec, s1_spec):
    assert pulse.validate(s0_spec).theorem_ok
    assert pulse.validate(s1_spec).theorem_ok


def test_validate_low_energy_fails_condition():
    spec = pulse.make_spec(0.75, -0.5, 0.5, 0.5, 0.1)
    rep = pulse.validate(spec)
    assert not rep.theorem_condition
    assert rep.messages


def test_validate_pointwise_condition_sign_of_alpha():
    bad = pulse.make_spec(0.75, -0.5, 0.5, 1.0, 0.1, alpha=0.25)
    good = pulse.make_spec(0.75, -0.5, 0.5, 1.0, 0.1, alpha=-0.25)
    assert not pulse.validate(bad).pointwise_condition
    assert pulse.validate(good).pointwise_condition


def test_validate_energy_condition():
    spec = pulse.make_spec(1.0, -0.5, 0.5, 0.5, 0.1, alpha=-1.5)
    assert not pulse.validate(spec).energy
    assert not pulse.validate(spec).ok


# -- pulses --

def test_real_pulse_vanishes_at_zero(sec3_spec):
    assert pulse.real_pulse(sec3_spec)(0.0) == pytest.approx(0.0, abs=1e-12)


def test_real_pulse_closed_form():
    spec = pulse.make_spec(1.0, -0.5, 0.5, 0.1, 0.1)
    t = 0.5 / (0.1 * 0.1)
    expect = 0.2 * (1 - np.cos(np.pi / 2)) * np.cos(100 - 100 / np.pi)
    assert pulse.real_pulse(spec)(t) == pytest.approx(expect, abs=1e-10)


def test_real_pulse_amplitude_bound(sec3_spec):
    w = pulse.real_pulse(sec3_spec)
    t = np.linspace(0, sec3_spec.horizon, 4001)
    assert np.abs(w(t)).max() <= 2 * sec3_spec.eps1 * sec3_spec.u.inf_norm() + 1e-12


def test_complex_pulse_modulus(sec3_spec):
    w = pulse.complex_pulse(sec3_spec)
    t = np.linspace(0, sec3_spec.horizon, 101)
    expect = sec3_spec.eps1 * sec3_spec.u.eval(sec3_spec.s_of_t(t))
    np.testing.assert_allclose(np.abs(w(t)), expect, atol=1e-12)


@given(st.floats(min_value=0.0, max_value=1.0))
def test_real_pulse_is_twice_real_part_of_complex(frac):
    spec = pulse.make_spec(1.0, -0.5, 0.5, 0.5, 0.1)
    t = frac * spec.horizon
    wr = pulse.real_pulse(spec)(t)
    wc = pulse.complex_pulse(spec)(t)
    assert wr == pytest.approx(2 * np.real(wc), abs=1e-12)


def test_pulse_rejects_time_outside_horizon(sec3_spec):
    with pytest.raises(slowfn.DomainError):
        pulse.real_pulse(sec3_spec)(sec3_spec.horizon * 1.5)


def test_prop1_pulses_consistency():
    u, delta = pulse.default_scheme(-0.5, 0.5)
    wr, wc = pulse.prop1_pulses(1.0, u, delta, 0.1)
    t = np.linspace(0, 10.0, 201)
    np.testing.assert_allclose(wr(t), 2 * np.real(wc(t)), atol=1e-12)
    np.testing.assert_allclose(np.abs(wc(t)), 0.1 * u.eval(0.1 * t), atol=1e-12)


# -- frequencies --

def test_frequencies_initial_values(sec3_spec):
    fs = pulse.frequencies(sec3_spec)
    assert fs.f1.eval(0.0) == pytest.approx(1.0, abs=1e-12)
    assert fs.f2.eval(0.0) == pytest.approx(3.0, abs=1e-12)


def test_lattice_index_arithmetic(sec3_spec):
    fs = pulse.frequencies(sec3_spec)
    t = np.linspace(0, sec3_spec.horizon, 31)
    np.testing.assert_allclose(fs.Lambda(0, t), fs.E1(t), atol=1e-9)
    np.testing.assert_allclose(fs.Lambda(-1, t), fs.E2(t), atol=1e-9)
    np.testing.assert_allclose(fs.Phi(0, t), 0.0, atol=1e-15)


@given(st.integers(min_value=-6, max_value=6).filter(lambda j: j != 0))
def test_lambda_sign_pattern(j):
    spec = pulse.make_spec(1.0, -0.5, 0.5, 0.5, 0.1)
    fs = pulse.frequencies(spec)
    vals = fs.lambda_fn(j).eval(np.linspace(0, 1, 401))
    if j > 0:
        assert np.all(vals < 0.0)
    else:
        assert np.all(vals > 0.0)


def test_chirp_rate_nondecreasing(sec3_spec):
    dd = sec3_spec.dDelta.eval(np.linspace(0, 1, 1001))
    assert np.all(np.diff(dd) >= -1e-12)


def test_certificate_baseline(sec3_spec):
    cert = pulse.certify_frequencies(pulse.frequencies(sec3_spec))
    assert cert.ok and cert.omega_ok
    assert cert.min_abs_f1_minus_f2 >= 2.0 - 1e-9
    assert 0 not in cert.min_lambda and 0 not in cert.min_phi


def test_certificate_fails_out_of_range():
    spec = pulse.make_spec(0.75, -0.5, 0.5, 1.0, 0.1, alpha=0.25)
    cert = pulse.certify_frequencies(pulse.frequencies(spec))
    assert not cert.omega_ok
    assert not cert.ok


# -- serialization --

def test_config_round_trip(sec3_spec):
    text = pulse.spec_to_config(sec3_spec, N0=3, scheme="remark5")
    cfg = pulse.parse_config(text)
    spec2, n0 = pulse.spec_from_config(cfg)
    assert n0 == 3
    assert (spec2.E, spec2.v0, spec2.v1) == (1.0, -0.5, 0.5)
    assert (spec2.eps1, spec2.eps2, spec2.alpha) == (0.5, 0.1, 0.0)
    s = np.linspace(0, 1, 17)
    np.testing.assert_allclose(spec2.u.eval(s), sec3_spec.u.eval(s), atol=0)


def test_parse_config_comments_and_errors():
    cfg = pulse.parse_config("# hello\nE = 1  # trailing\n\nv0=-0.5\n")
    assert cfg == {"E": "1", "v0": "-0.5"}
    with pytest.raises(ValueError):
        pulse.parse_config("garbage line\n")
