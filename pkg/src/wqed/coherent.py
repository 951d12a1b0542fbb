"""Weak-coherent-state observables: transmitted photon-number statistics
and the normalized second-order correlation g2(tau).

Both are assembled from the one-, two-, and three-photon scattering
results; the input field enters only through the Poisson number weights
(statistics) or the overall weak-drive limit (g2, which is intensity
independent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .coeffs import spectral_constants
from .errors import InvalidParameterError
from .numerics import QmcSpec, QuadratureSpec, integrate_1d, sweep
from .params import AtomKind, SystemParams, Wavepacket, build_params
from .single_photon import r_amp, t_amp, transmission_reflection
from .three_photon import three_photon_probabilities
from .two_photon import BoundStateTable, build_bound_state_table, \
    two_photon_probabilities

_MAX_N = 3


@dataclass(frozen=True)
class NumberStatsReport:
    """Transmitted-count distribution for a weak coherent input.

    ``p_n[n]`` is the joint probability of n transmitted photons with the
    input containing at most three; ``truncated_mass`` is the input
    probability of more than three photons (outside the model), and
    ``loss_mass`` the probability routed into emitter loss channels, so
    sum(p_n) + loss_mass + truncated_mass == 1 exactly.

    ``ratio[n]`` compares the renormalized output distribution with the
    Poisson distribution (truncated to n <= 3) whose truncated mean matches
    the output mean; it is exactly 1 for a decoupled emitter.
    """

    nbar: float
    p_n: np.ndarray
    loss_mass: float
    truncated_mass: float
    ratio: np.ndarray
    mu_matched: float
    mc_err: float


def _truncated_poisson(mu: float) -> np.ndarray:
    w = np.array([mu**n / math.factorial(n) for n in range(_MAX_N + 1)])
    return w / w.sum()


def number_statistics(params: SystemParams, wp: Wavepacket, nbar: float,
                      qmc: QmcSpec = QmcSpec()) -> NumberStatsReport:
    """Photon-number statistics of the transmitted field for mean input
    photon number ``nbar``, truncating the input expansion at 3 photons."""
    if nbar <= 0:
        raise InvalidParameterError("nbar must be > 0")
    weights = np.array([math.exp(-nbar) * nbar**m / math.factorial(m)
                        for m in range(_MAX_N + 1)])
    truncated = 1.0 - weights.sum()

    single = transmission_reflection(params, wp)
    two = two_photon_probabilities(params, wp)
    three = three_photon_probabilities(params, wp, qmc=qmc)

    # q[m][n]: probability that n of m input photons exit transmitted.
    q = [
        [1.0],
        [single.r_prob, single.t_prob],
        [two.ll.total, two.rl.total, two.rr.total],
        [three.lll.total, three.rll.total, three.rrl.total, three.rrr.total],
    ]
    p_n = np.zeros(_MAX_N + 1)
    for m in range(_MAX_N + 1):
        for n in range(m + 1):
            p_n[n] += weights[m] * q[m][n]
    loss_mass = 1.0 - p_n.sum() - truncated

    norm = p_n.sum()
    out_dist = p_n / norm
    n_out = float(np.dot(np.arange(_MAX_N + 1), out_dist))

    def mean_gap(mu):
        w = _truncated_poisson(mu)
        return float(np.dot(np.arange(_MAX_N + 1), w)) - n_out

    if n_out <= 0:
        mu = 0.0
        ratio = np.full(_MAX_N + 1, np.nan)
        ratio[0] = 1.0
    else:
        mu = brentq(mean_gap, 1e-12, 1e3, xtol=1e-14, rtol=1e-14)
        ratio = out_dist / _truncated_poisson(mu)
    return NumberStatsReport(nbar=nbar, p_n=p_n, loss_mass=loss_mass,
                             truncated_mass=truncated, ratio=ratio,
                             mu_matched=mu, mc_err=three.mc_err)


def _time_amplitude(params, wp, tau, spec=None):
    """a(tau) = integral dk alpha(k) t(k) exp(-i k tau)."""
    if spec is None:
        spec = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9,
                              max_subdivisions=8000)
    lo = wp.omega0 - spec.window * wp.sigma
    hi = wp.omega0 + spec.window * wp.sigma

    def f(k):
        return wp.amplitude(k) * t_amp(params, k) * np.exp(-1j * k * tau)

    val, _ = integrate_1d(f, lo, hi, spec)
    return complex(val)


def _spectral_mean(params, wp, amp_func):
    spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-10)
    lo = wp.omega0 - spec.window * wp.sigma
    hi = wp.omega0 + spec.window * wp.sigma
    val, _ = integrate_1d(lambda k: wp.amplitude(k) * amp_func(params, k),
                          lo, hi, spec)
    return complex(val)


@dataclass(frozen=True)
class G2Report:
    taus: np.ndarray
    values: np.ndarray
    g2_zero: float


def g2(params: SystemParams, wp: Wavepacket,
       taus, table: BoundStateTable | None = None) -> G2Report:
    """Weak-drive g2(tau) on a grid of delays.

    The two-photon detection amplitude at delay tau splits into the
    product of single-photon time amplitudes plus the bound-state part,
    whose delay dependence is exactly exponential in the two binding
    constants with tau-independent weights

        K_j = integral ds I_j(s).

    Delays where the uncorrelated intensity vanishes yield NaN.
    """
    taus = np.asarray(taus, dtype=float)
    if np.any(taus < 0):
        raise InvalidParameterError("taus must be >= 0")
    if table is None:
        table = build_bound_state_table(params, wp)
    consts = table.consts
    k1c, k2c = table.k_constants()
    a0 = _time_amplitude(params, wp, 0.0)

    values = np.empty(taus.shape)
    for i, tau in enumerate(taus):
        a_tau = _time_amplitude(params, wp, float(tau))
        pw = 2.0 * a_tau * a0
        bs = np.pi * (k1c * np.exp(-consts.gamma1 * tau)
                      + k2c * np.exp(-consts.gamma2_bs * tau))
        denom = abs(pw) ** 2
        values[i] = abs(pw + bs) ** 2 / denom if denom > 1e-30 else np.nan
    zero = g2_zero(params, wp, table=table)
    return G2Report(taus=taus, values=values, g2_zero=zero)


def g2_zero(params: SystemParams, wp: Wavepacket,
            table: BoundStateTable | None = None) -> float:
    """g2(0) through the full bound-state weights K_1, K_2."""
    if table is None:
        table = build_bound_state_table(params, wp)
    k1c, k2c = table.k_constants()
    a0 = _time_amplitude(params, wp, 0.0)
    pw = 2.0 * a0 * a0
    denom = abs(pw) ** 2
    if denom <= 1e-30:
        return np.nan
    return abs(pw + np.pi * (k1c + k2c)) ** 2 / denom


def g2_zero_reflected_identity(params: SystemParams, wp: Wavepacket) -> float:
    """g2(0) via the closed identity pi (K1 + K2) = -2 rbar0^2 with
    rbar0 = integral alpha r; cross-check for the tabulated route."""
    a0 = _spectral_mean(params, wp, t_amp)
    r0 = _spectral_mean(params, wp, r_amp)
    denom = abs(a0**2) ** 2
    if denom <= 1e-30:
        return np.nan
    return abs(a0**2 - r0**2) ** 2 / denom


@dataclass(frozen=True)
class G2MapReport:
    """log10 g2(0) over a (omega_rabi, purcell) grid; failures are NaN."""

    omega_rabi: np.ndarray
    purcell: np.ndarray
    log10_g2: np.ndarray
    n_failures: int


class _G2Cell:
    def __init__(self, sigma, delta_omega, kind, gamma3, gamma4):
        self.sigma = sigma
        self.delta_omega = delta_omega
        self.kind = kind
        self.gamma3 = gamma3
        self.gamma4 = gamma4

    def __call__(self, point):
        omega_rabi, purcell = point
        params = build_params(self.kind, purcell=purcell,
                              omega_rabi=omega_rabi,
                              gamma3=self.gamma3, gamma4=self.gamma4)
        wp = Wavepacket(sigma=self.sigma,
                        omega0=params.eps2 + self.delta_omega)
        return g2_zero(params, wp)


def g2_zero_map(omega_rabis, purcells, *, sigma, delta_omega=0.0,
                kind=AtomKind.LAMBDA3LS, gamma3=0.0, gamma4=1.0,
                workers: int = 1) -> G2MapReport:
    """log10 g2(0) over the outer product of drive strengths and Purcell
    factors.  Cells that fail numerically become NaN and are counted."""
    omega_rabis = np.asarray(omega_rabis, dtype=float)
    purcells = np.asarray(purcells, dtype=float)
    points = [(float(o), float(p)) for o in omega_rabis for p in purcells]
    cell = _G2Cell(sigma, delta_omega, kind, gamma3, gamma4)
    results = sweep(points, cell, workers=workers)
    grid = np.full((omega_rabis.size, purcells.size), np.nan)
    failures = 0
    for idx, res in enumerate(results):
        i, j = divmod(idx, purcells.size)
        if isinstance(res, float) or isinstance(res, (int, np.floating)):
            val = float(res)
            grid[i, j] = math.log10(val) if val > 0 else -np.inf
        else:
            failures += 1
    return G2MapReport(omega_rabi=omega_rabis, purcell=purcells,
                       log10_g2=grid, n_failures=failures)
