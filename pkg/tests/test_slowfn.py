"""Unit tests for the slow-function expression algebra."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chirpsim import pulse, slowfn
from chirpsim.slowfn import CertificateError, DomainError

# small random expression trees over the supported grammar
_scalars = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


def _trees(depth: int = 3):
    leaf = st.one_of(_scalars.map(slowfn.Const), st.just(slowfn.S))
    return st.recursive(
        leaf,
        lambda sub: st.one_of(
            st.tuples(sub, sub).map(lambda fg: slowfn.add(*fg)),
            st.tuples(sub, sub).map(lambda fg: slowfn.mul(*fg)),
            sub.map(slowfn.sin),
            sub.map(slowfn.cos),
        ),
        max_leaves=8,
    )


def _fd(f, s, h=1e-6):
    return (f.eval(min(s + h, 1.0)) - f.eval(max(s - h, 0.0))) / (
        min(s + h, 1.0) - max(s - h, 0.0))


# -- evaluation --

def test_eval_constant():
    assert slowfn.Const(3.0).eval(0.7) == 3.0


def test_eval_scheme_chirp_rate_at_zero():
    _, delta = pulse.default_scheme(-0.5, 0.5)
    assert delta.derivative().eval(0.0) == pytest.approx(-1.0, abs=1e-12)


def test_eval_envelope_at_one():
    u, _ = pulse.default_scheme(-0.5, 0.5)
    assert u.eval(1.0) == pytest.approx(2.0, abs=1e-12)


def test_eval_vectorized_matches_scalar():
    u, _ = pulse.default_scheme(-0.5, 0.5)
    s = np.linspace(0.0, 1.0, 7)
    np.testing.assert_allclose(u.eval(s), [u.eval(float(x)) for x in s],
                               atol=1e-15)


def test_eval_outside_domain_raises():
    with pytest.raises(DomainError):
        slowfn.S.eval(1.5)
    with pytest.raises(DomainError):
        slowfn.S.eval(-0.2)


# -- differentiation --

def test_derivative_of_constant_is_zero():
    d = slowfn.Const(4.2).derivative()
    assert slowfn.is_zero(d)


def test_derivative_of_phase_at_one():
    _, delta = pulse.default_scheme(-0.3, 0.7)
    assert delta.derivative().eval(1.0) == pytest.approx(2 * 0.7, abs=1e-12)


def test_derivative_of_sin_pi_s_at_zero():
    f = slowfn.sin(slowfn.mul(np.pi, slowfn.S))
    assert f.derivative().eval(0.0) == pytest.approx(np.pi, abs=1e-12)


def test_derivative_cache_is_idempotent():
    f = slowfn.sin(slowfn.S)
    assert f.derivative() is f.derivative()


@given(_trees(), _trees(), st.floats(min_value=0.05, max_value=0.95))
def test_product_rule_matches_finite_differences(f, g, s):
    prod = slowfn.mul(f, g)
    exact = prod.derivative().eval(s)
    approx = _fd(prod, s)
    assert exact == pytest.approx(approx, rel=1e-5, abs=1e-4)


# -- arithmetic identities --

def test_add_zero_identity():
    u, _ = pulse.default_scheme(-0.5, 0.5)
    assert slowfn.add(u, slowfn.ZERO) is u


def test_mul_zero_absorbing():
    u, _ = pulse.default_scheme(-0.5, 0.5)
    assert slowfn.is_zero(slowfn.mul(u, slowfn.ZERO))


def test_mul_envelope_square_at_half():
    u, _ = pulse.default_scheme(-0.5, 0.5)
    assert slowfn.mul(u, u).eval(0.5) == pytest.approx(1.0, abs=1e-12)


@given(_trees(), st.floats(min_value=0.0, max_value=1.0))
def test_div_then_mul_recovers_numerator(f, s):
    g = slowfn.add(2.0, slowfn.cos(slowfn.S))  # nonvanishing denominator
    q = slowfn.div(f, g)
    assert slowfn.mul(q, g).eval(s) == pytest.approx(f.eval(s), abs=1e-12)


def test_div_by_vanishing_function_rejected():
    with pytest.raises(CertificateError):
        slowfn.div(slowfn.ONE, slowfn.sin(slowfn.mul(np.pi, slowfn.S)))


def test_div_by_zero_constant_rejected():
    with pytest.raises(CertificateError):
        slowfn.div(slowfn.S, 0.0)


def test_div_by_one_is_numerator():
    f = slowfn.sin(slowfn.S)
    q = slowfn.div(f, slowfn.ONE)
    s = np.linspace(0, 1, 11)
    np.testing.assert_allclose(q.eval(s), f.eval(s), atol=1e-15)


def test_div_by_f2_certified(sec3_spec):
    fs = pulse.frequencies(sec3_spec)
    q = slowfn.div(sec3_spec.u, fs.f2)
    assert fs.f2.certified_min_abs() >= 2.0 - 1e-6
    assert np.isfinite(q.eval(0.3))


def test_lambda1_strictly_negative(sec3_spec):
    fs = pulse.frequencies(sec3_spec)
    lam1 = fs.lambda_fn(1)
    assert lam1.eval(np.linspace(0, 1, 501)).max() < 0.0
    assert np.isfinite(slowfn.div(slowfn.ONE, lam1).eval(0.5))


# -- norms --

def test_inf_norm_of_envelope():
    u, _ = pulse.default_scheme(-0.5, 0.5)
    assert u.inf_norm() == pytest.approx(2.0, rel=1e-8)


def test_min_abs_of_negative_constant():
    assert slowfn.Const(-3.0).min_abs() == 3.0


def test_inf_norm_of_zero():
    assert slowfn.ZERO.inf_norm() == 0.0


@given(_trees(), _trees())
def test_inf_norm_submultiplicative(f, g):
    assert (slowfn.mul(f, g).inf_norm()
            <= f.inf_norm() * g.inf_norm() + 1e-8)


# -- sqrt --

def test_sqrt_eval_and_derivative():
    f = slowfn.add(1.0, slowfn.mul(slowfn.S, slowfn.S))
    r = slowfn.sqrt(f)
    s = np.linspace(0, 1, 21)
    np.testing.assert_allclose(r.eval(s), np.sqrt(1 + s * s), atol=1e-14)
    # closed-form derivative s / sqrt(1 + s^2)
    np.testing.assert_allclose(r.derivative().eval(s), s / np.sqrt(1 + s * s),
                               atol=1e-12)


def test_sqrt_of_vanishing_function_rejected():
    with pytest.raises(CertificateError):
        slowfn.sqrt(slowfn.mul(slowfn.S, slowfn.S))


def test_balanced_sum_matches_sequential():
    parts = [slowfn.mul(float(k), slowfn.sin(slowfn.mul(float(k), slowfn.S)))
             for k in range(1, 9)]
    tot = slowfn.balanced_sum(parts)
    s = np.linspace(0, 1, 13)
    expect = sum(p.eval(s) for p in parts)
    np.testing.assert_allclose(tot.eval(s), expect, atol=1e-13)


def test_flat_aliases():
    f = slowfn.sin(slowfn.S)
    assert slowfn.sf_eval(f, 0.5) == f.eval(0.5)
    assert slowfn.sf_inf_norm(slowfn.Const(-2.0)) == 2.0
    assert slowfn.sf_min_abs(slowfn.Const(-2.0)) == 2.0
    assert slowfn.sf_add(f, slowfn.ZERO) is f
    assert slowfn.sf_derivative(f) is f.derivative()
    assert slowfn.sf_mul(f, slowfn.ONE) is f
    assert np.isfinite(slowfn.sf_div(f, slowfn.Const(2.0)).eval(0.1))
