"""Physical parameters, unit conventions, and the incident wavepacket.

Conventions used throughout the library:

* The loss rate of level 2 is the frequency unit (gamma2 = 1 by default).
* Frame: all momenta/frequencies are detunings from the 1<->2 transition,
  i.e. eps2 = 0, and the group velocity is c = 1 so momentum = frequency
  and position = time.  All closed-form expressions are evaluated verbatim
  in this frame.
* omega43 (the 3<->4 transition frequency entering eps4) is likewise stored
  as an offset from the 1<->2 transition frequency; 0 means the two
  transitions are degenerate, the only case exercised by validated data.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError


class AtomKind(enum.Enum):
    """Level structure of the emitter."""

    LAMBDA3LS = "lambda"
    N4LS = "n"


_KIND_ALIASES = {
    "lambda": AtomKind.LAMBDA3LS,
    "lambda3ls": AtomKind.LAMBDA3LS,
    "3ls": AtomKind.LAMBDA3LS,
    "l": AtomKind.LAMBDA3LS,
    "n": AtomKind.N4LS,
    "n4ls": AtomKind.N4LS,
    "4ls": AtomKind.N4LS,
}


def parse_kind(text: str | AtomKind) -> AtomKind:
    if isinstance(text, AtomKind):
        return text
    try:
        return _KIND_ALIASES[text.strip().lower()]
    except KeyError:
        raise InvalidParameterError(f"unknown atom kind {text!r}") from None


@dataclass(frozen=True)
class SystemParams:
    """All physical rates and level energies of the waveguide-emitter system.

    Immutable after construction; safe to share between workers.
    """

    kind: AtomKind
    gamma2: float  # loss rate of level 2 (the frequency unit)
    gamma3: float  # loss rate of level 3
    gamma4: float  # loss rate of level 4 (ignored for LAMBDA3LS)
    gamma_wg: float  # waveguide decay rate Gamma = 2 V^2 / c
    purcell: float  # Gamma / gamma2, stored for reporting
    omega_rabi: float  # control-field Rabi frequency
    delta_ctrl: float  # control-field detuning
    eps2: float  # level-2 energy in the rotating frame (0 by convention)
    eps3: float  # eps2 - delta_ctrl
    eps4: float  # eps3 + omega43 offset

    def __post_init__(self):
        if self.gamma2 <= 0:
            raise InvalidParameterError("gamma2 must be > 0 (it is the unit)")
        for name in ("gamma3", "gamma4", "gamma_wg", "omega_rabi"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be >= 0")
        if not math.isclose(self.purcell, self.gamma_wg / self.gamma2,
                            rel_tol=1e-12, abs_tol=1e-300):
            raise InvalidParameterError(
                "purcell must equal gamma_wg / gamma2 to machine precision")
        if not math.isclose(self.eps3, self.eps2 - self.delta_ctrl,
                            rel_tol=1e-12, abs_tol=1e-300):
            raise InvalidParameterError("eps3 must equal eps2 - delta_ctrl")


@dataclass(frozen=True)
class Wavepacket:
    """Gaussian spectral amplitude of the incident photon(s).

    amplitude(w) = (2 pi sigma^2)^(-1/4) exp[-(w - omega0)^2 / (4 sigma^2)],
    real and normalized so that the integral of amplitude^2 is 1.
    """

    sigma: float
    omega0: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise InvalidParameterError("sigma must be > 0")

    def amplitude(self, omega):
        omega = np.asarray(omega, dtype=float)
        norm = (2.0 * np.pi * self.sigma**2) ** (-0.25)
        return norm * np.exp(-((omega - self.omega0) ** 2)
                             / (4.0 * self.sigma**2))


def build_params(kind=AtomKind.LAMBDA3LS, *, purcell, omega_rabi,
                 gamma2=1.0, gamma3=0.0, gamma4=1.0, delta_ctrl=0.0,
                 omega43=0.0) -> SystemParams:
    """Construct SystemParams from the reporting variables.

    ``omega43`` is the offset of the 3<->4 transition from the 1<->2
    transition; the default 0 is the degenerate case used everywhere in the
    validated regime.
    """
    if purcell < 0:
        raise InvalidParameterError("purcell must be >= 0")
    eps2 = 0.0
    eps3 = eps2 - delta_ctrl
    eps4 = eps3 + omega43
    return SystemParams(
        kind=parse_kind(kind),
        gamma2=gamma2,
        gamma3=gamma3,
        gamma4=gamma4,
        gamma_wg=purcell * gamma2,
        purcell=purcell,
        omega_rabi=omega_rabi,
        delta_ctrl=delta_ctrl,
        eps2=eps2,
        eps3=eps3,
        eps4=eps4,
    )


def make_paper_defaults(purcell, omega_rabi, sigma, delta_omega,
                        kind=AtomKind.LAMBDA3LS):
    """Default configuration: gamma2 = gamma4 = 1, gamma3 = 0, delta_ctrl = 0,
    degenerate transitions, wavepacket centered at detuning delta_omega."""
    if sigma <= 0:
        raise InvalidParameterError("sigma must be > 0")
    params = build_params(kind, purcell=purcell, omega_rabi=omega_rabi,
                          gamma2=1.0, gamma3=0.0, gamma4=1.0,
                          delta_ctrl=0.0, omega43=0.0)
    wp = Wavepacket(sigma=sigma, omega0=params.eps2 + delta_omega)
    return params, wp


# Keys accepted in the flat key=value config file and as CLI flags.
CONFIG_KEYS = ("kind", "purcell", "omega_rabi", "sigma", "delta_omega",
               "gamma3", "gamma4", "delta_ctrl")


def load_config(path) -> dict:
    """Parse a flat ``key = value`` config file.

    Blank lines and lines starting with '#' are ignored.  Unknown keys raise
    InvalidParameterError so typos cannot silently change a run.
    """
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidParameterError(
                    f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in CONFIG_KEYS:
                raise InvalidParameterError(
                    f"{path}:{lineno}: unknown config key {key!r}")
            if key == "kind":
                values[key] = parse_kind(val)
            else:
                try:
                    values[key] = float(val)
                except ValueError:
                    raise InvalidParameterError(
                        f"{path}:{lineno}: {key} must be a number, "
                        f"got {val!r}") from None
    return values
