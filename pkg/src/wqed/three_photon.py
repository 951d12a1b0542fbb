"""Three-photon output probabilities and the tunneling metric P31.

The three-photon amplitude for an output direction pattern (c1, c2, c3),
with c in {t, r} per slot, is

    M(p) = aaa(p) c1 c2 c3
         + a(p1) c1 B~(p2,p3) + a(p2) c2 B~(p1,p3) + a(p3) c3 B~(p1,p2)
         + W~(p)

where B~ is the two-photon bound-state amplitude and W~ the irreducible
three-photon one.  W~ factorizes through the same pair integrals I_j(s)
as B~ plus four single-momentum profile functions:

    W~(p)        = (1/8) sum over ordered pairs (f, t) of V(p_f, p_t; P)
    V(kf, kt; P) = -(2 pi)^(-1/2) sum_i U_i(P, kt) / (kf + i ga_i)
    U_i(P, kt)   = integral ds I_{j_i}(s) (alpha G_i)(P - s) / (s - kt + i gb_i)

with (ga_i), (gb_i) drawn from the two binding constants and G_i the four
single-momentum prefactors.  U_i is tabulated on a (total momentum P) x
(arctan-warped kt) grid; P is Gaussian-confined while the kt dependence has
Lorentzian tails that the warp renders piecewise-linear.

The 9D-looking channel integrals collapse to 3D and are evaluated by
importance-sampled quasi-Monte-Carlo in rotated coordinates
(g, y, z) -> (p1, p2, p3) = omega0 + g/3 + (y, z, -y-z), unit Jacobian:
g is Gaussian-confined, y and z carry the Lorentzian tails (the integrand
decays like distance^-4 along every escape direction, so Cauchy-tailed
proposals keep the importance weights bounded).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc as _qmc

from .coeffs import (SpectralConstants, spectral_constants,
                     three_photon_prefactors)
from .numerics import QmcSpec, QuadratureSpec, gauss_legendre, integrate_1d
from .params import SystemParams, Wavepacket
from .single_photon import r_amp, t_amp, transmission_reflection
from .two_photon import (_S_HALF_WIDTH, BoundStateTable, ChannelSplit,
                         build_bound_state_table)

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_AG_HALF_WIDTH = 10.0  # support half-width of alpha*G_i in units of sigma

# Term table: (index into (I1, I2), gamma_a selector, gamma_b selector).
# Selector 0 -> gamma1, 1 -> gamma2_bs; G_i comes from
# three_photon_prefactors in the same order.
_TERMS = ((0, 0, 0), (1, 1, 1), (0, 1, 0), (1, 0, 1))


def _gammas(consts: SpectralConstants):
    return (consts.gamma1, consts.gamma2_bs)


@dataclass
class ThreePhotonTables:
    """Pretabulated U_i(P, kt) plus the shared pair-integral table."""

    params: SystemParams
    wp: Wavepacket
    consts: SpectralConstants
    pair_table: BoundStateTable
    active: tuple
    p_lo: float
    p_hi: float
    n_p: int
    warp_center: float
    warp_scale: float
    n_theta: int
    u_tables: np.ndarray  # (4, n_p, n_theta) complex

    def _u_interp(self, i, p_tot, kt):
        """Bilinear interpolation of U_i; zero outside the P support."""
        table = self.u_tables[i]
        hp = (self.p_hi - self.p_lo) / (self.n_p - 1)
        theta = np.arctan((kt - self.warp_center) / self.warp_scale)
        ht = np.pi / (self.n_theta - 1)

        fp = (p_tot - self.p_lo) / hp
        inside = (fp >= 0.0) & (fp <= self.n_p - 1)
        fp = np.clip(fp, 0.0, self.n_p - 1.000001)
        ip = np.minimum(fp.astype(int), self.n_p - 2)
        wp_ = fp - ip

        ft = (theta + 0.5 * np.pi) / ht
        it = np.minimum(ft.astype(int), self.n_theta - 2)
        wt = ft - it

        v = ((1 - wp_) * (1 - wt) * table[ip, it]
             + (1 - wp_) * wt * table[ip, it + 1]
             + wp_ * (1 - wt) * table[ip + 1, it]
             + wp_ * wt * table[ip + 1, it + 1])
        return np.where(inside, v, 0.0)

    def w_tilde(self, k1, k2, k3):
        """Irreducible three-photon bound-state amplitude (vectorized)."""
        k = [np.asarray(k1, float), np.asarray(k2, float),
             np.asarray(k3, float)]
        p_tot = k[0] + k[1] + k[2]
        gam = _gammas(self.consts)
        shape = np.broadcast(*k).shape
        # u_at[i][t] = U_i(P, k_t) for the three possible third slots.
        u_at = [[self._u_interp(i, p_tot, k[t]) if self.active[i] else 0.0
                 for t in range(3)] for i in range(4)]
        out = np.zeros(shape, dtype=complex)
        for f in range(3):
            for t in range(3):
                if f == t:
                    continue
                v = np.zeros(shape, dtype=complex)
                for i, (_, ia, _ib) in enumerate(_TERMS):
                    if not self.active[i]:
                        continue
                    v += u_at[i][t] / (k[f] + 1j * gam[ia])
                out += v
        return -out / (8.0 * _SQRT_2PI)


def _alpha_g(params, consts, wp, y):
    """(alpha(y) G_1..4(y)) as a list of four arrays."""
    gs = three_photon_prefactors(params, consts, y)
    a = wp.amplitude(y)
    return [a * g for g in gs]


def _u_integrand_window(wp, p_tot):
    """s-window for U at total momentum p_tot: intersection of the pair
    support with the translated single-photon support."""
    lo = max(2.0 * wp.omega0 - _S_HALF_WIDTH * wp.sigma,
             p_tot - wp.omega0 - _AG_HALF_WIDTH * wp.sigma)
    hi = min(2.0 * wp.omega0 + _S_HALF_WIDTH * wp.sigma,
             p_tot - wp.omega0 + _AG_HALF_WIDTH * wp.sigma)
    return lo, hi


def build_three_photon_tables(params: SystemParams, wp: Wavepacket,
                              pair_table: BoundStateTable | None = None,
                              n_p: int = 321, n_theta: int = 1537,
                              n_panel: int = 24) -> ThreePhotonTables:
    """Tabulate the four profile functions U_i(P, kt).

    The s-quadrature splits panels at the (off-axis) pole s = kt so the
    Gauss-Legendre edge clustering resolves it even when the smaller
    binding width is much narrower than the window.
    """
    consts = spectral_constants(params)
    if pair_table is None:
        pair_table = build_bound_state_table(params, wp, consts=consts)
    gam = _gammas(consts)
    i_tabs = (pair_table.i1, pair_table.i2)

    # Quick activity probe: skip terms whose I_j or G_i vanish identically.
    probe = np.linspace(wp.omega0 - 3 * wp.sigma, wp.omega0 + 3 * wp.sigma, 7)
    g_probe = three_photon_prefactors(params, consts, probe)
    active = tuple(
        np.max(np.abs(i_tabs[ij])) > 0 and np.max(np.abs(g_probe[i])) > 0
        for i, (ij, _, _) in enumerate(_TERMS))

    p_half = (_S_HALF_WIDTH + _AG_HALF_WIDTH + 2.0) * wp.sigma
    p_lo = 3.0 * wp.omega0 - p_half
    p_hi = 3.0 * wp.omega0 + p_half
    p_grid = np.linspace(p_lo, p_hi, n_p)

    warp_center = 2.0 * wp.omega0
    warp_scale = max(8.0 * wp.sigma, 1.0)
    theta = np.linspace(-0.5 * np.pi, 0.5 * np.pi, n_theta)
    kt = warp_center + warp_scale * np.tan(theta[1:-1])

    gb_real = [gam[ib].real for i, (_, _, ib) in enumerate(_TERMS)
               if active[i]]
    gb_min = min((g for g in gb_real if g > 0), default=0.0)

    xg, wg = gauss_legendre(n_panel)
    u_tables = np.zeros((4, n_p, n_theta), dtype=complex)
    if not any(active):
        return ThreePhotonTables(params=params, wp=wp, consts=consts,
                                 pair_table=pair_table, active=active,
                                 p_lo=p_lo, p_hi=p_hi, n_p=n_p,
                                 warp_center=warp_center,
                                 warp_scale=warp_scale, n_theta=n_theta,
                                 u_tables=u_tables)

    s_grid = pair_table.s_grid
    for ip, p_tot in enumerate(p_grid):
        lo, hi = _u_integrand_window(wp, p_tot)
        if lo >= hi:
            continue
        split = max(2.0 * gb_min, 0.02 * (hi - lo)) if gb_min > 0 \
            else 0.25 * (hi - lo)
        breaks = np.stack([
            np.full_like(kt, lo),
            np.clip(kt - split, lo, hi),
            np.clip(kt, lo, hi),
            np.clip(kt + split, lo, hi),
            np.full_like(kt, hi),
        ], axis=1)  # (n_theta-2, 5), nondecreasing rows
        mid = 0.5 * (breaks[:, 1:] + breaks[:, :-1])  # (nt, 4)
        half = 0.5 * (breaks[:, 1:] - breaks[:, :-1])
        s = mid[:, :, None] + half[:, :, None] * xg  # (nt, 4, n_panel)
        w = half[:, :, None] * wg
        flat = s.reshape(s.shape[0], -1)
        wflat = w.reshape(w.shape[0], -1)

        i_here = [np.interp(flat, s_grid, tab.real)
                  + 1j * np.interp(flat, s_grid, tab.imag)
                  for tab in i_tabs]
        ag_here = _alpha_g(params, consts, wp, p_tot - flat)
        for i, (ij, _, ib) in enumerate(_TERMS):
            if not active[i]:
                continue
            f = i_here[ij] * ag_here[i] / (flat - kt[:, None] + 1j * gam[ib])
            u_tables[i, ip, 1:-1] = np.sum(wflat * f, axis=1)
    return ThreePhotonTables(params=params, wp=wp, consts=consts,
                             pair_table=pair_table, active=active,
                             p_lo=p_lo, p_hi=p_hi, n_p=n_p,
                             warp_center=warp_center, warp_scale=warp_scale,
                             n_theta=n_theta, u_tables=u_tables)


def w_tilde_direct(tables: ThreePhotonTables, k1: float, k2: float,
                   k3: float) -> complex:
    """W~ at one point with the s-integral done adaptively (no U table).

    Test utility: quantifies the U-table discretization error.
    """
    params, wp, consts = tables.params, tables.wp, tables.consts
    gam = _gammas(consts)
    s_grid = tables.pair_table.s_grid
    i_tabs = (tables.pair_table.i1, tables.pair_table.i2)
    spec = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-7)
    k = (float(k1), float(k2), float(k3))
    p_tot = sum(k)
    lo, hi = _u_integrand_window(wp, p_tot)
    out = 0.0 + 0.0j
    for f in range(3):
        for t in range(3):
            if f == t or lo >= hi:
                continue
            for i, (ij, ia, ib) in enumerate(_TERMS):
                if not tables.active[i]:
                    continue

                def integrand(s, _ij=ij, _i=i, _ib=ib, _kt=k[t]):
                    tab = i_tabs[_ij]
                    iv = np.interp(s, s_grid, tab.real) \
                        + 1j * np.interp(s, s_grid, tab.imag)
                    ag = _alpha_g(params, consts, wp, p_tot - s)[_i]
                    return iv * ag / (s - _kt + 1j * gam[_ib])

                u_val, _ = integrate_1d(integrand, lo, hi, spec)
                out += u_val / (k[f] + 1j * gam[ia])
    return complex(-out / (8.0 * _SQRT_2PI))


class _TruncatedMixture:
    """Truncated Gaussian + Cauchy mixture sampled through a tabulated
    piecewise-linear quantile function.

    The reported density is that of the piecewise-linear sampler itself
    (constant per segment), so importance weights are exactly unbiased no
    matter the table resolution.
    """

    def __init__(self, w_gauss, sigma_gauss, gamma_cauchy, x_max,
                 n_core=4097, n_tail=4097):
        core = np.linspace(-8 * sigma_gauss, 8 * sigma_gauss, n_core)
        th_max = math.atan(x_max / gamma_cauchy)
        tail = gamma_cauchy * np.tan(np.linspace(-th_max, th_max, n_tail))
        x = np.unique(np.concatenate([core, tail, [-x_max, x_max]]))
        x = x[(x >= -x_max) & (x <= x_max)]
        from scipy.stats import norm
        cdf = (w_gauss * norm.cdf(x / sigma_gauss)
               + (1 - w_gauss) * (0.5 + np.arctan(x / gamma_cauchy) / np.pi))
        cdf = (cdf - cdf[0]) / (cdf[-1] - cdf[0])
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        self.u_grid = cdf[keep]
        self.x_grid = x[keep]
        self.seg_density = np.diff(self.u_grid) / np.diff(self.x_grid)

    def sample(self, u):
        """Map uniforms to samples; returns (x, density-at-x)."""
        idx = np.clip(np.searchsorted(self.u_grid, u) - 1, 0,
                      len(self.seg_density) - 1)
        frac = (u - self.u_grid[idx]) / (self.u_grid[idx + 1]
                                         - self.u_grid[idx])
        x = self.x_grid[idx] + frac * (self.x_grid[idx + 1]
                                       - self.x_grid[idx])
        return x, self.seg_density[idx]


_CHANNELS = ("rrr", "rrl", "rll", "lll")
_MULTIPLICITY = {"rrr": 1.0, "rrl": 3.0, "rll": 3.0, "lll": 1.0}


@dataclass(frozen=True)
class ThreePhotonReport:
    """Directional three-photon probabilities with PW/BS split and P31."""

    rrr: ChannelSplit
    rrl: ChannelSplit
    rll: ChannelSplit
    lll: ChannelSplit
    loss3: float
    p31: float
    t_single: float
    mc_err: float

    @property
    def p_rrr(self):
        return self.rrr.total


def _channel_pass(params, wp, tables, n_samples, seed):
    """One scrambled-sequence replicate: returns dict of channel totals and
    plane-wave parts."""
    consts = tables.consts
    sigma = wp.sigma
    g_mix = _TruncatedMixture(0.9, 4.0 * sigma, 4.0 * sigma,
                              (_S_HALF_WIDTH + _AG_HALF_WIDTH + 2.0) * sigma)
    gam2 = consts.gamma2_bs.real
    y_scale = max(1.5, gam2 + 1.0)
    y_max = 64.0 * (8.0 * sigma + 6.0 * max(gam2, 1.0))
    y_mix = _TruncatedMixture(0.55, 1.5 * sigma, y_scale, y_max)

    sampler = _qmc.Sobol(d=3, scramble=True, seed=seed)
    u = sampler.random(n_samples)
    g, qg = g_mix.sample(u[:, 0])
    y, qy = y_mix.sample(u[:, 1])
    z, qz = y_mix.sample(u[:, 2])
    q = qg * qy * qz

    p1 = wp.omega0 + g / 3.0 + y
    p2 = wp.omega0 + g / 3.0 + z
    p3 = wp.omega0 + g / 3.0 - y - z
    pk = (p1, p2, p3)

    a = [wp.amplitude(p) for p in pk]
    t = [t_amp(params, p) for p in pk]
    r = [r_amp(params, p) for p in pk]
    b23 = tables.pair_table.b_tilde(p2, p3)
    b13 = tables.pair_table.b_tilde(p1, p3)
    b12 = tables.pair_table.b_tilde(p1, p2)
    w3 = tables.w_tilde(p1, p2, p3)
    aaa = a[0] * a[1] * a[2]

    out = {}
    for ch in _CHANNELS:
        # Channel letters name output directions: 'r' (right-moving) is the
        # transmitted amplitude, 'l' the reflected one.
        c = [t[j] if ch[j] == "r" else r[j] for j in range(3)]
        pw = aaa * c[0] * c[1] * c[2]
        amp = (pw + a[0] * c[0] * b23 + a[1] * c[1] * b13
               + a[2] * c[2] * b12 + w3)
        mult = _MULTIPLICITY[ch]
        out[ch] = mult * float(np.mean(np.abs(amp) ** 2 / q))
        out[ch + "_pw"] = mult * float(np.mean(np.abs(pw) ** 2 / q))
    return out


def three_photon_probabilities(params: SystemParams, wp: Wavepacket,
                               qmc: QmcSpec = QmcSpec(),
                               tables: ThreePhotonTables | None = None
                               ) -> ThreePhotonReport:
    """Channel probabilities P_RRR, P_RRL, P_RLL, P_LLL with the
    plane-wave/bound-state split and P31 = P_RRR / T^3.

    All four channels share one sampling pass per replicate; mc_err is the
    largest replicate standard error over the channel totals.
    """
    single = transmission_reflection(params, wp)
    t3 = single.t_prob
    if params.gamma_wg == 0.0:
        one = ChannelSplit(1.0, 1.0, 0.0)
        zero = ChannelSplit(0.0, 0.0, 0.0)
        return ThreePhotonReport(rrr=one, rrl=zero, rll=zero, lll=zero,
                                 loss3=0.0, p31=1.0, t_single=t3, mc_err=0.0)
    if tables is None:
        tables = build_three_photon_tables(params, wp)
    n_rep = qmc.replicates
    # Round up to a power of two so the Sobol balance properties hold.
    per_rep = 1 << (max(qmc.budget // n_rep, 1) - 1).bit_length()
    reps = [_channel_pass(params, wp, tables, per_rep, qmc.seed + i)
            for i in range(n_rep)]
    keys = reps[0].keys()
    mean = {k: float(np.mean([r[k] for r in reps])) for k in keys}
    err = {k: float(np.std([r[k] for r in reps], ddof=1) / np.sqrt(n_rep))
           for k in keys}

    splits = {ch: ChannelSplit(mean[ch], mean[ch + "_pw"],
                               mean[ch] - mean[ch + "_pw"])
              for ch in _CHANNELS}
    total = sum(mean[ch] for ch in _CHANNELS)
    p31 = mean["rrr"] / t3**3 if t3 > 0 else np.nan
    return ThreePhotonReport(rrr=splits["rrr"], rrl=splits["rrl"],
                             rll=splits["rll"], lll=splits["lll"],
                             loss3=1.0 - total, p31=p31, t_single=t3,
                             mc_err=max(err[ch] for ch in _CHANNELS))
