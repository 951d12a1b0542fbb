"""Bound-state spectral constants and momentum-dependent coefficients.

This module is pure closed-form algebra: the complex binding constants
(gamma1, gamma2_bs), the roots (lambda1, lambda2) of the bound-state linear
system, and the two- and three-photon coefficient functions C1, C2 and
D1..D4 for both emitter kinds.  Everything is vectorized over momenta.

Sign convention: with the principal (non-negative) square roots for xi and
eta, the binding constants are

    c gamma_1 = (G + G2 + G3)/4 - xi + i (Delta/2 + eps2 - eta)
    c gamma_2 = (G + G2 + G3)/4 + xi + i (Delta/2 + eps2 + eta)

i.e. gamma_1 = lambda_2 + G3/2 + i eps2 and gamma_2 = lambda_1 + G3/2 +
i eps2 (the constants pair across indices but share the (-xi, -eta) /
(+xi, +eta) branch), so each coefficient C_j multiplies the binding
constant carrying the same dressed-state branch.
This pairing is validated against an independent discretized time-evolution
oracle in the test-suite (the opposite eta sign fits the lattice output
with I_1 and I_2 exchanged).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRootsError
from .params import AtomKind, SystemParams
from .single_photon import tbar


@dataclass(frozen=True)
class SpectralConstants:
    """Momentum-independent constants of the bound states."""

    gamma1: complex  # binding constant c*gamma_1
    gamma2_bs: complex  # binding constant c*gamma_2
    lambda1: complex
    lambda2: complex
    xi: float
    eta: float
    chi: float
    gamma_prime: float


def spectral_constants(params: SystemParams) -> SpectralConstants:
    g = params.gamma_wg
    g2 = params.gamma2
    g3 = params.gamma3
    delta = params.delta_ctrl
    omega = params.omega_rabi

    gamma_prime = 0.5 * (g + g2 - g3)
    chi = delta**2 + omega**2 - gamma_prime**2
    # Radicands of xi and eta are sqrt(chi^2 + 4 d^2 G'^2) -/+ chi; evaluate
    # the cancellation-prone one through the product identity
    # (R - chi)(R + chi) = 4 d^2 G'^2 to stay accurate near delta = 0.
    cross = 2.0 * abs(delta) * gamma_prime
    radius = math.hypot(chi, cross)
    if radius == 0.0:
        rad_xi = rad_eta = 0.0
    elif chi >= 0.0:
        rad_xi = cross**2 / (radius + chi)
        rad_eta = radius + chi
    else:
        rad_xi = radius - chi
        rad_eta = cross**2 / (radius - chi)
    # Single sqrt per constant so the undriven limit (rad_xi = 2 (2 xi)^2)
    # cancels exactly in floating point: gamma_1 and lambda_2 must hit zero
    # identically there, or their vanishing residues fabricate a spurious
    # pole on the real momentum axis.
    xi = 0.25 * math.sqrt(2.0 * rad_xi)
    eta = 0.25 * math.sqrt(2.0 * rad_eta)

    quarter = 0.25 * (g + g2 + g3)
    gamma1 = complex(quarter - xi, 0.5 * delta + params.eps2 - eta)
    gamma2_bs = complex(quarter + xi, 0.5 * delta + params.eps2 + eta)
    lam_quarter = 0.25 * (g + g2 - g3)
    lambda1 = complex(lam_quarter + xi, 0.5 * delta + eta)
    lambda2 = complex(lam_quarter - xi, 0.5 * delta - eta)
    return SpectralConstants(gamma1=gamma1, gamma2_bs=gamma2_bs,
                             lambda1=lambda1, lambda2=lambda2,
                             xi=xi, eta=eta, chi=chi,
                             gamma_prime=gamma_prime)


def _check_roots(params: SystemParams, consts: SpectralConstants):
    scale = max(params.gamma2, params.gamma_wg, params.omega_rabi, 1e-300)
    if abs(consts.lambda1 - consts.lambda2) < 1e-12 * scale:
        raise DegenerateRootsError(
            "lambda1 == lambda2; nudge omega_rabi by ~1e-9 and retry")


def rho(params: SystemParams, k):
    """rho_k, the denominator polynomial of tbar_k (vectorized)."""
    k = np.asarray(k, dtype=float)
    kk = k - params.eps2
    return (kk + params.delta_ctrl + 0.5j * params.gamma3) \
        * (kk + 0.5j * (params.gamma2 + params.gamma_wg)) \
        - 0.25 * params.omega_rabi**2


def alpha2(params: SystemParams, k1, k2):
    """alpha(k1, k2) = -(tbar_k1 - 1)(tbar_k2 - 1) / (2 pi)."""
    return -(tbar(params, k1) - 1.0) * (tbar(params, k2) - 1.0) / (2.0 * np.pi)


def nu_factor(params: SystemParams, k1, k2):
    """nu(k1, k2) for the 4-level emitter; -> 1 as eps4 - E >> Gamma."""
    e_tot = np.asarray(k1, dtype=float) + np.asarray(k2, dtype=float)
    num = params.eps4 - e_tot - 0.5j * (params.gamma4 - params.gamma_wg)
    den = params.eps4 - e_tot - 0.5j * (params.gamma4 + params.gamma_wg)
    return num / den


def beta2(params: SystemParams, k1, k2):
    """beta(k1, k2), branching on the emitter kind."""
    g = params.gamma_wg
    omega = params.omega_rabi
    if omega == 0.0:
        # Undriven emitter: the drive-mediated term is identically zero.
        # Evaluating the general form would hit 0 * (1 / rho) = nan at the
        # real root of rho.
        shape = np.broadcast(np.asarray(k1), np.asarray(k2)).shape
        return np.zeros(shape, dtype=complex)
    tb1 = tbar(params, k1)
    tb2 = tbar(params, k2)
    if params.kind is AtomKind.N4LS:
        nu = nu_factor(params, k1, k2)
    else:
        nu = 1.0
    pref = g * omega**2 / (16.0 * np.pi)
    return pref * ((tb1 - nu) / rho(params, k2) + (tb2 - nu) / rho(params, k1))


@dataclass(frozen=True)
class TwoPhotonCoeffs:
    """C1, C2 (complex, possibly arrays)."""

    c1: object
    c2: object


def two_photon_coeffs(params: SystemParams, consts: SpectralConstants,
                      k1, k2) -> TwoPhotonCoeffs:
    """C1(k1,k2), C2(k1,k2); closure C1 + C2 = alpha(k1,k2) holds exactly."""
    if params.gamma_wg == 0.0:
        zero = np.zeros(np.broadcast(np.asarray(k1), np.asarray(k2)).shape,
                        dtype=complex)
        return TwoPhotonCoeffs(c1=zero, c2=zero.copy())
    _check_roots(params, consts)
    a = alpha2(params, k1, k2)
    b = beta2(params, k1, k2)
    dl = consts.lambda1 - consts.lambda2
    c1 = (b - a * consts.lambda2) / dl
    c2 = (-b + a * consts.lambda1) / dl
    return TwoPhotonCoeffs(c1=c1, c2=c2)


def alpha13(params: SystemParams, k):
    """alpha_13(k) = alpha_24(k) = -2 (tbar_k - 1) / sqrt(2 pi)."""
    return -2.0 * (tbar(params, k) - 1.0) / np.sqrt(2.0 * np.pi)


def mu_factors(params: SystemParams, consts: SpectralConstants, k):
    """mu_1(k), mu_2(k) for the 4-level emitter; -> 1 as eps4 -> infinity."""
    k = np.asarray(k, dtype=float)
    base = params.eps4 - 0.5j * params.gamma4 - k
    mu1 = (base + 0.5j * params.gamma_wg + 1j * consts.gamma1) \
        / (base - 0.5j * params.gamma_wg + 1j * consts.gamma1)
    mu2 = (base + 0.5j * params.gamma_wg + 1j * consts.gamma2_bs) \
        / (base - 0.5j * params.gamma_wg + 1j * consts.gamma2_bs)
    return mu1, mu2


def beta13_24(params: SystemParams, consts: SpectralConstants, k):
    """beta_13(k) and beta_24(k), branching on the emitter kind."""
    tb = tbar(params, k)
    if params.omega_rabi == 0.0:
        # See beta2: the drive term vanishes identically when undriven.
        drive = np.zeros(np.asarray(k, dtype=float).shape)
    else:
        drive = params.gamma_wg * params.omega_rabi**2 / (4.0 * rho(params, k))
    if params.kind is AtomKind.N4LS:
        mu1, mu2 = mu_factors(params, consts, k)
    else:
        mu1 = mu2 = 1.0
    pref = 1.0 / np.sqrt(2.0 * np.pi)
    b13 = pref * (drive - (tb - mu1) * consts.lambda1)
    b24 = pref * (drive - (tb - mu2) * consts.lambda2)
    return b13, b24


def three_photon_prefactors(params: SystemParams, consts: SpectralConstants,
                            k):
    """The four single-momentum factors G1..G4 with D_i = G_i(k1) C_j(k2,k3).

    G1, G3 multiply C1 (binding constant gamma_1 pairing); G2, G4 multiply
    C2.  Shared by the coefficient assembly and the bound-state momentum
    kernels.
    """
    if params.gamma_wg == 0.0:
        zero = np.zeros(np.asarray(k, dtype=float).shape, dtype=complex)
        return zero, zero.copy(), zero.copy(), zero.copy()
    _check_roots(params, consts)
    a13 = alpha13(params, k)
    b13, b24 = beta13_24(params, consts, k)
    dl = consts.lambda1 - consts.lambda2
    g1 = (b13 - a13 * consts.lambda2) / dl
    g2 = (-b24 + a13 * consts.lambda1) / dl
    g3 = (-b13 + a13 * consts.lambda1) / dl
    g4 = (b24 - a13 * consts.lambda2) / dl
    return g1, g2, g3, g4


@dataclass(frozen=True)
class ThreePhotonCoeffs:
    """D1..D4 (complex, possibly arrays)."""

    d1: object
    d2: object
    d3: object
    d4: object


def three_photon_coeffs(params: SystemParams, consts: SpectralConstants,
                        k1, k2, k3) -> ThreePhotonCoeffs:
    g1, g2, g3, g4 = three_photon_prefactors(params, consts, k1)
    c = two_photon_coeffs(params, consts, k2, k3)
    return ThreePhotonCoeffs(d1=g1 * c.c1, d2=g2 * c.c2,
                             d3=g3 * c.c1, d4=g4 * c.c2)
