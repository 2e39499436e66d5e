"""Spectral analysis of the slow effective Hamiltonian.

H_slow(s) = cx(s) sigma_x + cy(s) sigma_y + cz(s) sigma_z has gap
omega = |c| and negative-eigenvalue projector P = (I - n.sigma)/2 with
n = c/omega.  All derivatives of P are taken analytically on the Bloch unit
vector (symbolic quotient rule over the certified-positive gap), which removes
eigenvector phase ambiguity and keeps repeated differentiation exact.  Operator
norms of P', P'' and H_slow' reduce to Euclidean norms of real 3-vectors
(a.sigma has norm |a|), so the adiabatic error bound is a scalar quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import slowfn
from .slowfn import SlowFn
from .pulse import PulseSpec

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
P_E1 = np.diag([1.0, 0.0]).astype(complex)
P_E2 = np.diag([0.0, 1.0]).astype(complex)

QUAD_TOL = 1e-9
# endpoint refinement: the integrand peaks in an eps1-wide layer near the
# resonance crossing and at the interval ends
QUAD_POINTS = (0.0, 1e-4, 1e-2, 0.1, 0.5, 0.9, 0.99, 0.9999, 1.0)


@dataclass(frozen=True)
class SlowHamiltonian:
    """Pauli coefficients of H_slow at fixed (eps1, eps2, alpha)."""

    cx: SlowFn
    cy: SlowFn
    cz: SlowFn
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # -- gap and Bloch vector --

    def gap(self) -> SlowFn:
        """omega(s) = sqrt(cx^2 + cy^2 + cz^2), positivity certified."""
        if "gap" not in self._cache:
            w2 = slowfn.balanced_sum([slowfn.mul(c, c)
                                      for c in (self.cx, self.cy, self.cz)])
            self._cache["gap"] = slowfn.sqrt(w2)  # raises CertificateError on closure
        return self._cache["gap"]

    def bloch(self):
        """Unit Bloch vector components n = (cx, cy, cz)/omega as SlowFns."""
        if "bloch" not in self._cache:
            w = self.gap()
            cert = np.sqrt(w.cert) if isinstance(w, slowfn.Sqrt) else None
            self._cache["bloch"] = tuple(
                slowfn.div(c, w, cert=cert) for c in (self.cx, self.cy, self.cz))
        return self._cache["bloch"]

    def _bloch_d(self, order: int):
        key = ("bloch_d", order)
        if key not in self._cache:
            comps = self.bloch() if order == 1 else self._bloch_d(order - 1)
            self._cache[key] = tuple(c.derivative() for c in comps)
        return self._cache[key]

    # -- numeric fields on [0, 1] --

    def omega(self, s):
        return self.gap().eval(s)

    def _vec(self, comps, s):
        s = np.asarray(s, dtype=float)
        return np.stack([np.broadcast_to(c.eval(s), s.shape) for c in comps], axis=-1)

    def dP_norm(self, s):
        """Operator norm |P'(s)| = |n'(s)|/2."""
        return 0.5 * np.linalg.norm(self._vec(self._bloch_d(1), s), axis=-1)

    def d2P_norm(self, s):
        return 0.5 * np.linalg.norm(self._vec(self._bloch_d(2), s), axis=-1)

    def dH_norm(self, s):
        """Operator norm |H_slow'(s)| = |(cx', cy', cz')(s)|."""
        comps = tuple(c.derivative() for c in (self.cx, self.cy, self.cz))
        return np.linalg.norm(self._vec(comps, s), axis=-1)

    def theta(self, s):
        """Polar angle of the Bloch vector, arccos(cz/omega)."""
        nz = self.bloch()[2].eval(s)
        return np.arccos(np.clip(nz, -1.0, 1.0))


def build_slow_hamiltonian(hrwa, spec: PulseSpec) -> SlowHamiltonian:
    """Pauli coefficients of the rotated effective Hamiltonian.

    The diagonal rotation with (1,1) phase e^{-i E1/2} maps A(E1) to sigma_x
    and B(E1) to sigma_y and contributes (alpha - Delta'/2) sigma_z, giving
    cx = eps1 h1, cy = eps1^2 h2, cz = alpha - Delta'/2 + eps1^2 h3.
    """
    e1 = spec.eps1
    cx = slowfn.mul(e1, hrwa.component_total(1))
    cy = slowfn.mul(e1 ** 2, hrwa.component_total(2))
    cz = slowfn.add(slowfn.add(spec.alpha, slowfn.mul(-0.5, spec.dDelta)),
                    slowfn.mul(e1 ** 2, hrwa.component_total(3)))
    return SlowHamiltonian(cx=cx, cy=cy, cz=cz)


def tilde_slow_hamiltonian(spec: PulseSpec) -> SlowHamiltonian:
    """First-order model eps1 u sigma_x + (alpha - Delta'/2) sigma_z."""
    cx = slowfn.mul(spec.eps1, spec.u)
    cz = slowfn.add(spec.alpha, slowfn.mul(-0.5, spec.dDelta))
    return SlowHamiltonian(cx=cx, cy=slowfn.ZERO, cz=cz)


def gap(sh: SlowHamiltonian) -> SlowFn:
    return sh.gap()


def _pauli(vec):
    return vec[0] * SIGMA_X + vec[1] * SIGMA_Y + vec[2] * SIGMA_Z


def projector(sh: SlowHamiltonian, s: float):
    """Rank-one projector on the negative eigenvalue, (I - n.sigma)/2."""
    n = sh._vec(sh.bloch(), s)
    return 0.5 * (np.eye(2, dtype=complex) - _pauli(n))


def projector_d1(sh: SlowHamiltonian, s: float):
    return -0.5 * _pauli(sh._vec(sh._bloch_d(1), s))


def projector_d2(sh: SlowHamiltonian, s: float):
    return -0.5 * _pauli(sh._vec(sh._bloch_d(2), s))


@dataclass(frozen=True)
class EndpointReport:
    P0: np.ndarray
    P1: np.ndarray
    dist0_e1: float
    dist0_e2: float
    dist1_e1: float
    dist1_e2: float


def endpoint_projectors(sh: SlowHamiltonian) -> EndpointReport:
    """Endpoint projectors with operator-norm distances to the basis ones."""
    P0 = projector(sh, 0.0)
    P1 = projector(sh, 1.0)
    d = lambda A, B: float(np.linalg.norm(A - B, ord=2))
    return EndpointReport(P0=P0, P1=P1,
                          dist0_e1=d(P0, P_E1), dist0_e2=d(P0, P_E2),
                          dist1_e1=d(P1, P_E1), dist1_e2=d(P1, P_E2))


def bound_integrand(sh: SlowHamiltonian, s):
    """2|P'|^2/omega + |P''|/omega + |P'||H_slow'|/(2 omega^2)."""
    w = sh.omega(s)
    dp = sh.dP_norm(s)
    return (2.0 * dp * dp / w + sh.d2P_norm(s) / w
            + dp * sh.dH_norm(s) / (2.0 * w * w))


def adiabatic_bound(sh: SlowHamiltonian, spec: PulseSpec) -> float:
    """Adiabatic estimate on the endpoint orbit distance of the slow system."""
    integral, err = quad(lambda s: float(bound_integrand(sh, s)), 0.0, 1.0,
                         epsabs=QUAD_TOL, limit=400, points=QUAD_POINTS[1:-1])
    if not np.isfinite(integral):
        raise ArithmeticError("adiabatic-bound quadrature did not converge")
    boundary = (sh.dP_norm(1.0) / sh.omega(1.0)
                + sh.dP_norm(0.0) / sh.omega(0.0))
    return float(spec.eps1 * spec.eps2 * (boundary + integral))


@dataclass(frozen=True)
class EstimateReport:
    int_dP_sq: float
    int_d2P: float
    int_dP_dH_over_w2: float
    tilde_int_dP_sq: float
    tilde_int_d2P: float
    tilde_int_dP_dH_over_w2: float
    theta_tilde_monotone: bool


def _integrate(f) -> float:
    val, _ = quad(lambda s: float(f(s)), 0.0, 1.0, epsabs=QUAD_TOL,
                  limit=400, points=QUAD_POINTS[1:-1])
    return float(val)


def estimate_suite(sh: SlowHamiltonian, spec: PulseSpec) -> EstimateReport:
    """Integral estimates behind the adiabatic bound, with the first-order
    (tilde) counterparts via theta~ = arccos((alpha - Delta'/2)/omega~)."""
    tilde = tilde_slow_hamiltonian(spec)
    grid = np.linspace(0.0, 1.0, 2001)
    theta_t = tilde.theta(grid)
    monotone = bool(np.all(np.diff(theta_t) >= -1e-10))
    return EstimateReport(
        int_dP_sq=_integrate(lambda s: sh.dP_norm(s) ** 2),
        int_d2P=_integrate(sh.d2P_norm),
        int_dP_dH_over_w2=_integrate(
            lambda s: sh.dP_norm(s) * sh.dH_norm(s) / sh.omega(s) ** 2),
        tilde_int_dP_sq=_integrate(lambda s: tilde.dP_norm(s) ** 2),
        tilde_int_d2P=_integrate(tilde.d2P_norm),
        tilde_int_dP_dH_over_w2=_integrate(
            lambda s: tilde.dP_norm(s) * tilde.dH_norm(s) / tilde.omega(s) ** 2),
        theta_tilde_monotone=monotone,
    )


def report_rows(sh: SlowHamiltonian, n: int = 501):
    """Diagnostic rows `s, omega, theta, dP_norm, d2P_norm, integrand`."""
    s = np.linspace(0.0, 1.0, n)
    return np.column_stack([s, sh.omega(s), sh.theta(s), sh.dP_norm(s),
                            sh.d2P_norm(s), bound_integrand(sh, s)])


def eigendirection_field(u_vals, dDelta_vals, alpha: float = 0.0):
    """Bloch direction of the negative-eigenvalue eigenstate of
    u sigma_x + (alpha - Delta'/2) sigma_z over a (u, Delta') grid.

    Rows `u, dDelta, nx, nz` with (nx, nz) the unit eigendirection."""
    rows = []
    for u in np.asarray(u_vals, dtype=float):
        for dD in np.asarray(dDelta_vals, dtype=float):
            cx, cz = u, alpha - 0.5 * dD
            w = np.hypot(cx, cz)
            if w == 0.0:
                rows.append((u, dD, np.nan, np.nan))
            else:
                rows.append((u, dD, -cx / w, -cz / w))
    return np.asarray(rows)
