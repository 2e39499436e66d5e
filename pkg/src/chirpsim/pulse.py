"""Chirped pulse schemes, hypothesis validation, and characteristic frequencies.

The driving field is w(t) = 2*eps1*u(s)*cos(2Et + Delta(s)/(eps1*eps2)) with
s = eps1*eps2*t in [0, 1]; the complex companion keeps only the co-rotating
phase.  Characteristic frequencies f1, f2 and the lattice lambda_j, phi_j
control which oscillating terms the averaging engine may eliminate; the
non-overlap certificate checks they stay away from zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import slowfn
from .slowfn import SlowFn, CertificateError

TOL = 1e-12

#: exact serialization keys for experiment reproducibility
CONFIG_KEYS = ("E", "v0", "v1", "eps1", "eps2", "alpha", "scheme", "N0")


def default_scheme(v0: float, v1: float):
    """Trigonometric pulse scheme: Delta(s) = ((v0-v1)/pi) sin(pi s) + (v0+v1)s,
    u(s) = 1 - cos(pi s).  Requires v0 < 0 < v1."""
    if not (v0 < 0.0 < v1):
        raise ValueError(f"need v0 < 0 < v1, got v0={v0}, v1={v1}")
    s = slowfn.S
    pi = np.pi
    u = 1.0 - slowfn.cos(slowfn.mul(pi, s))
    delta = slowfn.add(
        slowfn.mul((v0 - v1) / pi, slowfn.sin(slowfn.mul(pi, s))),
        slowfn.mul(v0 + v1, s),
    )
    return u, delta


def s0_scheme(v0: float, v1: float):
    """Variant scheme whose envelope vanishes at both endpoints:
    u(s) = 1 - cos(2 pi s), same Delta as the default scheme.  Satisfies every
    transfer-theorem hypothesis including the final-endpoint envelope zero."""
    _, delta = default_scheme(v0, v1)
    u = 1.0 - slowfn.cos(slowfn.mul(2.0 * np.pi, slowfn.S))
    return u, delta


def s1_scheme(v0: float, v1: float):
    """Variant scheme with u(s) = (1 - cos(pi s)) sin(pi s), same Delta as the
    default.  The envelope vanishes at both endpoints but with a nonzero final
    slope, so the adiabatic error of the slow dynamics is genuinely Theta of
    the slowness parameter (useful for halving measurements)."""
    _, delta = default_scheme(v0, v1)
    pis = slowfn.mul(np.pi, slowfn.S)
    u = slowfn.mul(slowfn.add(1.0, slowfn.mul(-1.0, slowfn.cos(pis))),
                   slowfn.sin(pis))
    return u, delta


@dataclass(frozen=True)
class PulseSpec:
    """One experiment: chirp endpoints, envelope/phase functions and small
    parameters.  Immutable; all derived operations are pure."""

    E: float
    v0: float
    v1: float
    u: SlowFn
    Delta: SlowFn
    eps1: float
    eps2: float
    alpha: float = 0.0

    @property
    def horizon(self) -> float:
        return 1.0 / (self.eps1 * self.eps2)

    def s_of_t(self, t):
        return np.asarray(t, dtype=float) * (self.eps1 * self.eps2)

    @property
    def dDelta(self) -> SlowFn:
        return self.Delta.derivative()

    def fastest_frequency(self) -> float:
        return 4.0 * self.E + self.dDelta.inf_norm() + 2.0 * abs(self.alpha)

    def basic_valid(self) -> bool:
        return (
            self.v0 < 0.0 < self.v1
            and 0.0 < self.eps1 <= 1.0
            and 0.0 < self.eps2 <= 1.0
            and self.E + self.alpha > 0.0
        )


def make_spec(E, v0, v1, eps1, eps2, alpha=0.0, scheme="remark5",
              u=None, Delta=None) -> PulseSpec:
    if scheme == "remark5":
        u, Delta = default_scheme(v0, v1)
    elif scheme == "s0":
        u, Delta = s0_scheme(v0, v1)
    elif scheme == "s1":
        u, Delta = s1_scheme(v0, v1)
    elif scheme == "custom":
        if u is None or Delta is None:
            raise ValueError("custom scheme requires u and Delta")
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return PulseSpec(E=E, v0=v0, v1=v1, u=u, Delta=Delta,
                     eps1=eps1, eps2=eps2, alpha=alpha)


@dataclass(frozen=True)
class ValidationReport:
    """Hypothesis report.  `ok` gates whether the machinery may run at all;
    `theorem_ok` additionally requires every hypothesis of the transfer
    theorem, including the final-endpoint envelope zero u(1)=0 that the
    default trigonometric scheme does not satisfy (u(1)=2)."""

    chirp_order: bool           # v0 < 0 < v1
    endpoints: bool             # u(0)=0, Delta'(0)=2v0, Delta'(1)=2v1
    envelope_final_zero: bool   # u(1)=0 (S0 membership of the envelope)
    interior_positive: bool     # u > 0 on (0,1)
    convexity: bool             # Delta'' >= 0 on (0,1)
    theorem_condition: bool     # 3(E+v0) >= E+v1
    pointwise_condition: bool   # 4E + 3 Delta'(s) - 2 alpha > 0 on [0,1]
    energy: bool                # E + alpha > 0
    alpha_in_range: bool        # alpha strictly inside (v0, v1)
    eps_ok: bool                # eps1, eps2 in (0, 1]
    messages: tuple = ()

    @property
    def ok(self) -> bool:
        return all((self.chirp_order, self.endpoints, self.interior_positive,
                    self.convexity, self.energy, self.eps_ok))

    @property
    def theorem_ok(self) -> bool:
        return self.ok and all((self.envelope_final_zero,
                                self.theorem_condition,
                                self.pointwise_condition,
                                self.alpha_in_range))


def validate(spec: PulseSpec, tol=1e-9) -> ValidationReport:
    msgs = []
    dD = spec.dDelta
    ddD = dD.derivative()

    chirp_order = spec.v0 < 0.0 < spec.v1
    endpoints = (
        abs(spec.u.eval(0.0)) < tol
        and abs(dD.eval(0.0) - 2.0 * spec.v0) < tol
        and abs(dD.eval(1.0) - 2.0 * spec.v1) < tol
    )
    envelope_final_zero = abs(spec.u.eval(1.0)) < tol
    grid = np.linspace(0.0, 1.0, 2001)[1:-1]
    interior_positive = bool(np.all(spec.u.eval(grid) > 0.0))
    convexity = bool(np.all(ddD.eval(grid) >= -tol))
    theorem_condition = 3.0 * (spec.E + spec.v0) >= spec.E + spec.v1 - tol
    pointwise = 4.0 * spec.E + 3.0 * dD - 2.0 * spec.alpha
    pointwise_condition = bool(np.min(pointwise.eval(np.linspace(0, 1, 2001))) > 0.0)
    energy = spec.E + spec.alpha > 0.0
    alpha_in_range = spec.v0 < spec.alpha < spec.v1
    eps_ok = 0.0 < spec.eps1 <= 1.0 and 0.0 < spec.eps2 <= 1.0

    if not theorem_condition:
        msgs.append(f"3(E+v0)={3 * (spec.E + spec.v0):g} < E+v1={spec.E + spec.v1:g}")
    if not pointwise_condition:
        msgs.append("4E + 3*Delta'(s) - 2*alpha <= 0 somewhere on [0,1]")
    return ValidationReport(chirp_order, endpoints, envelope_final_zero,
                            interior_positive, convexity, theorem_condition,
                            pointwise_condition, energy, alpha_in_range,
                            eps_ok, tuple(msgs))


# -- pulses --

def _phase(spec: PulseSpec, t):
    t = np.asarray(t, dtype=float)
    s = spec.s_of_t(t)
    return 2.0 * spec.E * t + spec.Delta.eval(s) / (spec.eps1 * spec.eps2)


def _check_horizon(spec, t):
    t = np.asarray(t, dtype=float)
    if t.size and (t.min() < -TOL or t.max() > spec.horizon * (1 + 1e-12) + TOL):
        raise slowfn.DomainError(
            f"t outside [0, {spec.horizon:g}]: range [{t.min()}, {t.max()}]")
    return t


def real_pulse(spec: PulseSpec):
    """w(t) = 2 eps1 u(s) cos(2Et + Delta(s)/(eps1 eps2))."""

    def w(t):
        t = _check_horizon(spec, t)
        return 2.0 * spec.eps1 * spec.u.eval(spec.s_of_t(t)) * np.cos(_phase(spec, t))

    return w


def complex_pulse(spec: PulseSpec):
    """Co-rotating companion: w(t) = eps1 u(s) e^{-i(2Et + Delta(s)/(eps1 eps2))},
    used as the top-right Hamiltonian entry; real_pulse = 2*Re(complex_pulse)."""

    def w(t):
        t = _check_horizon(spec, t)
        return spec.eps1 * spec.u.eval(spec.s_of_t(t)) * np.exp(-1j * _phase(spec, t))

    return w


def prop1_pulses(E, u: SlowFn, Delta: SlowFn, eps: float):
    """Single-parameter comparison pair w(t) = 2 eps u(eps t) cos(2Et + Delta(eps t))
    and its complex companion, on the horizon [0, 1/eps]."""

    def w_real(t):
        t = np.asarray(t, dtype=float)
        s = eps * t
        return 2.0 * eps * u.eval(s) * np.cos(2.0 * E * t + Delta.eval(s))

    def w_cplx(t):
        t = np.asarray(t, dtype=float)
        s = eps * t
        return eps * u.eval(s) * np.exp(-1j * (2.0 * E * t + Delta.eval(s)))

    return w_real, w_cplx


# -- characteristic frequencies --

@dataclass
class FrequencySet:
    """Instantaneous frequencies in reduced time and the index lattice
    lambda_j = (j+1) f1 - j f2, phi_j = j (f1 - f2), plus fast-phase accessors."""

    spec: PulseSpec
    J: int
    f1: SlowFn
    f2: SlowFn
    lam: dict = field(default_factory=dict)
    phi: dict = field(default_factory=dict)

    def lambda_fn(self, j: int) -> SlowFn:
        if j not in self.lam:
            self.lam[j] = slowfn.add(slowfn.mul(j + 1, self.f1),
                                     slowfn.mul(-j, self.f2))
        return self.lam[j]

    def phi_fn(self, j: int) -> SlowFn:
        if j not in self.phi:
            self.phi[j] = slowfn.mul(j, slowfn.add(self.f1, slowfn.mul(-1, self.f2)))
        return self.phi[j]

    # fast phases (functions of t on [0, 1/(eps1 eps2)])
    def E1(self, t):
        t = np.asarray(t, dtype=float)
        s = self.spec.s_of_t(t)
        return 2.0 * self.spec.alpha * t - self.spec.Delta.eval(s) / (
            self.spec.eps1 * self.spec.eps2)

    def E2(self, t):
        t = np.asarray(t, dtype=float)
        s = self.spec.s_of_t(t)
        return (4.0 * self.spec.E + 2.0 * self.spec.alpha) * t + self.spec.Delta.eval(s) / (
            self.spec.eps1 * self.spec.eps2)

    def Lambda(self, p: int, t):
        return (p + 1) * self.E1(t) - p * self.E2(t)

    def Phi(self, p: int, t):
        return p * (self.E1(t) - self.E2(t))


def frequencies(spec: PulseSpec, J: int = 10) -> FrequencySet:
    dD = spec.dDelta
    f1 = slowfn.add(2.0 * spec.alpha, slowfn.mul(-1.0, dD))
    f2 = slowfn.add(4.0 * spec.E + 2.0 * spec.alpha, dD)
    fs = FrequencySet(spec=spec, J=J, f1=f1, f2=f2)
    for j in range(-J, J + 1):
        fs.lambda_fn(j)
        if j != 0:
            fs.phi_fn(j)
    return fs


@dataclass(frozen=True)
class Certificate:
    J: int
    min_lambda: dict          # j -> min_s |lambda_j|, 1 <= |j| <= J
    min_phi: dict             # j -> min_s |phi_j|, 1 <= |j| <= J
    min_f2_minus_2f1: float   # min_s (f2 - 2 f1); positive iff Eq. (Omega)
    min_abs_f1_minus_f2: float

    @property
    def omega_ok(self) -> bool:
        return self.min_f2_minus_2f1 > 0.0

    @property
    def ok(self) -> bool:
        return (self.omega_ok
                and all(v > 0.0 for v in self.min_lambda.values())
                and all(v > 0.0 for v in self.min_phi.values()))


def certify_frequencies(fs: FrequencySet, J: int | None = None) -> Certificate:
    if J is None:
        J = fs.J
    min_lambda, min_phi = {}, {}
    for j in range(-J, J + 1):
        if j == 0:
            continue  # phi_0 is identically zero, lambda_0 = f1 may vanish
        min_lambda[j] = fs.lambda_fn(j).min_abs()
        min_phi[j] = fs.phi_fn(j).min_abs()
    gap = slowfn.add(fs.f2, slowfn.mul(-2.0, fs.f1))
    grid = np.linspace(0.0, 1.0, 4001)
    diff = fs.f1 - fs.f2
    return Certificate(J=J, min_lambda=min_lambda, min_phi=min_phi,
                       min_f2_minus_2f1=float(gap.eval(grid).min()),
                       min_abs_f1_minus_f2=diff.min_abs())


# -- flat key=value serialization --

def spec_to_config(spec: PulseSpec, N0: int = 3, scheme: str = "remark5") -> str:
    lines = [
        f"E = {spec.E:.17g}",
        f"v0 = {spec.v0:.17g}",
        f"v1 = {spec.v1:.17g}",
        f"eps1 = {spec.eps1:.17g}",
        f"eps2 = {spec.eps2:.17g}",
        f"alpha = {spec.alpha:.17g}",
        f"scheme = {scheme}",
        f"N0 = {N0}",
    ]
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> dict:
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        out[key] = val
    return out


def spec_from_config(cfg: dict) -> tuple[PulseSpec, int]:
    scheme = cfg.get("scheme", "remark5")
    spec = make_spec(
        E=float(cfg["E"]), v0=float(cfg["v0"]), v1=float(cfg["v1"]),
        eps1=float(cfg["eps1"]), eps2=float(cfg["eps2"]),
        alpha=float(cfg.get("alpha", 0.0)), scheme=scheme,
    )
    return spec, int(cfg.get("N0", 3))
