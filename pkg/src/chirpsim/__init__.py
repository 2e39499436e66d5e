"""Robust population transfer in driven two-level systems.

Modules:
  slowfn    -- closed algebra of smooth functions of the reduced time
  pulse     -- chirped-pulse specifications, validation, frequency certificates
  algebra   -- operator series over the oscillating family and the averaging
               (elimination/cleaning) engine producing effective Hamiltonians
  propagate -- exact-unitary Magnus steppers for all frames
  adiabatic -- spectral projectors, gap certificates, adiabatic error bounds
  harness   -- experiment recipes, deterministic CSV sweeps, CLI backend
"""

from . import adiabatic, algebra, harness, propagate, pulse, slowfn  # noqa: F401

__version__ = "0.1.0"
