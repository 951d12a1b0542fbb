"""Single-photon transmission/reflection coefficients and probabilities.

The emitter behaves identically for the 3-level and 4-level variants in the
one-photon sector (it takes two quanta to reach level 4), so nothing here
branches on the atom kind.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import QuadratureSpec, integrate_1d
from .params import SystemParams, Wavepacket


@dataclass(frozen=True)
class SinglePhotonAmplitudes:
    """tbar, and the right/left amplitudes t = (tbar+1)/2, r = (tbar-1)/2."""

    tbar: complex
    t: complex
    r: complex


def tbar(params: SystemParams, k):
    """Even-mode transmission coefficient tbar_k (vectorized over k).

    A decoupled emitter (gamma_wg = 0) returns exactly 1; the driven-off
    case (omega_rabi = 0) uses the algebraically cancelled two-level form so
    the k = eps2 - delta_ctrl point is not a 0/0.
    """
    k = np.asarray(k, dtype=float)
    g = params.gamma_wg
    if g == 0.0:
        return np.ones(k.shape, dtype=complex) if k.shape else 1.0 + 0.0j
    kk = k - params.eps2
    if params.omega_rabi == 0.0:
        # Level 3 decouples; the (k - eps2 + delta + i gamma3/2) factor
        # cancels exactly between numerator and denominator.
        num = kk + 0.5j * (params.gamma2 - g)
        den = kk + 0.5j * (params.gamma2 + g)
    else:
        first = kk + params.delta_ctrl + 0.5j * params.gamma3
        num = first * (kk + 0.5j * (params.gamma2 - g)) \
            - 0.25 * params.omega_rabi**2
        den = first * (kk + 0.5j * (params.gamma2 + g)) \
            - 0.25 * params.omega_rabi**2
    out = num / den
    return out if out.shape else complex(out)


def amplitudes(params: SystemParams, k) -> SinglePhotonAmplitudes:
    tb = tbar(params, k)
    return SinglePhotonAmplitudes(tbar=tb, t=0.5 * (tb + 1.0),
                                  r=0.5 * (tb - 1.0))


def t_amp(params: SystemParams, k):
    """Transmission amplitude t_k = (tbar_k + 1) / 2 (vectorized)."""
    return 0.5 * (tbar(params, k) + 1.0)


def r_amp(params: SystemParams, k):
    """Reflection amplitude r_k = (tbar_k - 1) / 2 (vectorized)."""
    return 0.5 * (tbar(params, k) - 1.0)


@dataclass(frozen=True)
class SinglePhotonReport:
    t_prob: float
    r_prob: float
    loss: float
    quad_err: float


def transmission_reflection(params: SystemParams, wp: Wavepacket,
                            spec: QuadratureSpec = QuadratureSpec()
                            ) -> SinglePhotonReport:
    """Wavepacket-averaged T, R and loss = 1 - T - R.

    Integrates over omega0 +/- window*sigma; the Gaussian tail beyond the
    default 8 sigma contributes < 1e-13.
    """
    lo = wp.omega0 - spec.window * wp.sigma
    hi = wp.omega0 + spec.window * wp.sigma

    def f_t(k):
        return wp.amplitude(k) ** 2 * np.abs(t_amp(params, k)) ** 2

    def f_r(k):
        return wp.amplitude(k) ** 2 * np.abs(r_amp(params, k)) ** 2

    t_val, t_err = integrate_1d(f_t, lo, hi, spec)
    r_val, r_err = integrate_1d(f_r, lo, hi, spec)
    t_val = float(np.real(t_val))
    r_val = float(np.real(r_val))
    return SinglePhotonReport(t_prob=t_val, r_prob=r_val,
                              loss=1.0 - t_val - r_val,
                              quad_err=float(t_err + r_err))
