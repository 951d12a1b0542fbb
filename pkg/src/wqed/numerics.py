"""Shared integration and sweep infrastructure.

All integrands handled here are smooth Gaussian x Lorentzian products in
momentum space, so a plain adaptive Gauss-Kronrod rule (1D), an iterated
version of it (2D), and seeded quasi-Monte-Carlo (3D and up) cover every
integral in the library.  Everything is deterministic for fixed inputs.
"""

from __future__ import annotations

import concurrent.futures
import heapq
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc as _qmc

from .errors import QuadratureError

# ---------------------------------------------------------------------------
# Gauss-Kronrod 15(7) nodes/weights on [-1, 1]


_GK_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])

_GK_WEIGHTS = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])

# Embedded 7-point Gauss weights (nonzero at every other Kronrod node).
_G7_WEIGHTS = np.array([
    0.0, 0.129484966168870, 0.0, 0.279705391489277, 0.0,
    0.381830050505119, 0.0, 0.417959183673469, 0.0,
    0.381830050505119, 0.0, 0.279705391489277, 0.0,
    0.129484966168870, 0.0,
])


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budget for adaptive quadrature.

    ``window`` is the half-width of integration windows in units of the
    wavepacket sigma, used by callers that build intervals from wavepackets.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    window: float = 8.0

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be > 0")
        if self.window < 6.0:
            raise ValueError("window must be >= 6 sigma")


@dataclass(frozen=True)
class QmcSpec:
    """Budget and seeding for quasi-Monte-Carlo integration."""

    budget: int = 1_000_000
    seed: int = 12345
    sequence: str = "sobol"
    replicates: int = 8

    def __post_init__(self):
        if self.budget < 1000:
            raise ValueError("budget must be >= 1000")
        if self.sequence != "sobol":
            raise ValueError(f"unknown low-discrepancy sequence "
                             f"{self.sequence!r}")


def _gk_panel(f, a, b):
    """One Gauss-Kronrod 15(7) evaluation on [a, b].

    Returns (kronrod_value, error_estimate).  ``f`` must accept an ndarray.
    """
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fx = np.asarray(f(mid + half * _GK_NODES))
    k15 = half * np.sum(_GK_WEIGHTS * fx)
    g7 = half * np.sum(_G7_WEIGHTS * fx)
    # |K15 - G7| is a (typically generous) bound on the K15 error; keep a
    # roundoff floor so converged panels do not report exactly zero.
    err = abs(k15 - g7) + 1e-16 * half * float(np.sum(np.abs(fx)))
    return k15, err


def integrate_1d(f, a, b, spec: QuadratureSpec = QuadratureSpec()):
    """Adaptive complex-valued quadrature of ``f`` on [a, b].

    ``f`` must accept an ndarray of points and return an ndarray of values
    (real or complex).  Returns (value, error_estimate).  Raises
    QuadratureError (carrying the best estimate) if the subdivision budget
    is exhausted before tolerances are met.
    """
    value, err = _gk_panel(f, a, b)
    heap = [(-err, 0, a, b, value, err)]
    total = value
    total_err = err
    counter = 1
    for _ in range(spec.max_subdivisions):
        if total_err <= max(spec.abs_tol, spec.rel_tol * abs(total)):
            return total, total_err
        neg_err, _, pa, pb, pval, perr = heapq.heappop(heap)
        pm = 0.5 * (pa + pb)
        lv, le = _gk_panel(f, pa, pm)
        rv, re = _gk_panel(f, pm, pb)
        total += (lv + rv) - pval
        total_err += (le + re) - perr
        heapq.heappush(heap, (-le, counter, pa, pm, lv, le))
        counter += 1
        heapq.heappush(heap, (-re, counter, pm, pb, rv, re))
        counter += 1
    if total_err <= max(spec.abs_tol, spec.rel_tol * abs(total)):
        return total, total_err
    raise QuadratureError(
        f"integrate_1d: tolerance not reached after "
        f"{spec.max_subdivisions} subdivisions "
        f"(achieved {total_err:.3e})",
        estimate=total, achieved_error=total_err)


def integrate_2d(f, ax, bx, ay, by, spec: QuadratureSpec = QuadratureSpec()):
    """Iterated adaptive quadrature over [ax,bx] x [ay,by].

    ``f(x, y)`` must broadcast over ndarray arguments.  The inner (y)
    integral runs at a tighter tolerance so the outer error estimate
    dominates.
    """
    inner_spec = QuadratureSpec(abs_tol=0.1 * spec.abs_tol,
                                rel_tol=0.1 * spec.rel_tol,
                                max_subdivisions=spec.max_subdivisions,
                                window=spec.window)

    def outer(xs):
        xs = np.atleast_1d(xs)
        out = np.empty(xs.shape, dtype=complex)
        for i, x in enumerate(xs):
            out[i], _ = integrate_1d(lambda y: f(x, y), ay, by, inner_spec)
        return out

    return integrate_1d(outer, ax, bx, spec)


def qmc_integrate(f, box, spec: QmcSpec = QmcSpec(), workers: int = 1):
    """Quasi-Monte-Carlo integral of ``f`` over a rectangular box.

    ``box`` is a sequence of (lo, hi) pairs; ``f`` receives an (n, d) array
    and must return n values.  The budget is split over scrambled-sequence
    replicates; the returned stderr is the replicate standard error.
    Deterministic for fixed (spec, workers).
    """
    box = np.asarray(box, dtype=float)
    d = box.shape[0]
    lo, hi = box[:, 0], box[:, 1]
    volume = float(np.prod(hi - lo))
    n_rep = spec.replicates
    # Round up to a power of two so the Sobol balance properties hold.
    per_rep = 1 << (max(spec.budget // n_rep, 1) - 1).bit_length()
    means = np.empty(n_rep)
    for i in range(n_rep):
        sampler = _qmc.Sobol(d=d, scramble=True, seed=spec.seed + i)
        u = sampler.random(per_rep)
        pts = lo + u * (hi - lo)
        vals = np.asarray(f(pts), dtype=float)
        means[i] = vals.mean() * volume
    value = float(means.mean())
    stderr = float(means.std(ddof=1) / np.sqrt(n_rep))
    return value, stderr


@dataclass
class SweepError:
    """Captured per-point failure from ``sweep``."""

    index: int
    point: object
    message: str
    error: BaseException = field(repr=False, default=None)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("WQED_WORKERS", "1")))
    except ValueError:
        return 1


def sweep(points, task, workers: int = 1):
    """Apply ``task`` to each point, preserving input order.

    Per-point exceptions become SweepError records; other points are
    unaffected.  With workers > 1 a process pool is used; ``task`` and the
    points must then be picklable.  Output is identical regardless of
    worker count.
    """
    points = list(points)
    results = [None] * len(points)
    guarded = _SweepTask(task)
    if workers > 1 and len(points) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            outs = list(ex.map(guarded, enumerate(points)))
    else:
        outs = [guarded(ip) for ip in enumerate(points)]

    for idx, value, exc in outs:
        if exc is None:
            results[idx] = value
        else:
            results[idx] = SweepError(index=idx, point=points[idx],
                                      message=str(exc), error=exc)
    return results


class _SweepTask:
    """Picklable wrapper so sweep() can run tasks in a process pool."""

    def __init__(self, task):
        self.task = task

    def __call__(self, idx_point):
        idx, point = idx_point
        try:
            return idx, self.task(point), None
        except BaseException as exc:  # noqa: BLE001
            return idx, None, exc


def gauss_legendre(n: int):
    """Cached Gauss-Legendre nodes/weights on [-1, 1]."""
    key = int(n)
    if key not in _GL_CACHE:
        _GL_CACHE[key] = np.polynomial.legendre.leggauss(key)
    return _GL_CACHE[key]


_GL_CACHE: dict = {}


def panel_nodes(panels, n_per_panel):
    """Composite Gauss-Legendre nodes/weights over contiguous panels.

    ``panels`` is an increasing sequence of breakpoints.  Returns flat
    (nodes, weights) arrays.
    """
    x, w = gauss_legendre(n_per_panel)
    nodes = []
    weights = []
    for a, b in zip(panels[:-1], panels[1:]):
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        nodes.append(mid + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)
