"""Convex energy profiles Psi and their growth diagnostics.

Built-ins: linear Psi(t)=t, power Psi(t)=t^p (p >= 1), exponential
Psi(t)=e^{pt} (p > 0). Selectable by spec string "linear" | "power:p" |
"exp:p".
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class ConvexProfile:
    """Psi with first and second derivatives, vectorized over numpy arrays.

    ``dpsi_scalar``, when present, is a pure-float fast path for Psi' used
    in the ODE solver's bisection inner loop.
    """

    name: str
    psi: callable
    dpsi: callable
    d2psi: callable
    dpsi_scalar: callable = None

    def __call__(self, t):
        return self.psi(t)


def linear_profile():
    return ConvexProfile("linear",
                         lambda t: np.asarray(t, dtype=float) + 0.0,
                         lambda t: np.ones_like(np.asarray(t, dtype=float)),
                         lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                         dpsi_scalar=lambda t: 1.0)


def power_profile(p):
    if p < 1:
        raise ConfigurationError(f"power profile needs p >= 1, got {p}")
    return ConvexProfile(f"power:{p:g}",
                         lambda t: np.power(t, p),
                         lambda t: p * np.power(t, p - 1),
                         lambda t: p * (p - 1) * np.power(t, p - 2),
                         dpsi_scalar=lambda t: p * t ** (p - 1))


def exp_profile(p):
    if p <= 0:
        raise ConfigurationError(f"exp profile needs p > 0, got {p}")
    def _dps(t):
        try:
            return p * math.exp(p * t)
        except OverflowError:
            return math.inf
    return ConvexProfile(f"exp:{p:g}",
                         lambda t: np.exp(p * np.asarray(t, dtype=float)),
                         lambda t: p * np.exp(p * np.asarray(t, dtype=float)),
                         lambda t: p * p * np.exp(p * np.asarray(t, dtype=float)),
                         dpsi_scalar=_dps)


def parse_profile(spec):
    """Parse "linear" | "power:p" | "exp:p" into a ConvexProfile."""
    name, _, arg = spec.partition(":")
    name = name.strip()
    try:
        if name == "linear":
            if arg:
                raise ConfigurationError(f"linear profile takes no parameter, got {spec!r}")
            return linear_profile()
        if name == "power":
            return power_profile(float(arg))
        if name == "exp":
            return exp_profile(float(arg))
    except ValueError as e:
        raise ConfigurationError(f"bad profile parameter in {spec!r}: {e}") from None
    raise ConfigurationError(f"unknown profile {spec!r}")


def validate_profile(profile, rng=None, t_max=1e3, samples=256):
    """Check the convex-profile contract on samples of [1, t_max].

    Returns a dict of booleans: psi(1) >= 1, psi(t) >= t, secant midpoint
    convexity on random pairs, and positivity of psi'.
    """
    rng = rng or np.random.default_rng(0)
    ts = np.geomspace(1.0, t_max, samples)
    a = rng.uniform(1.0, t_max, samples)
    b = rng.uniform(1.0, t_max, samples)
    mid = profile.psi((a + b) / 2)
    sec = (profile.psi(a) + profile.psi(b)) / 2
    return {
        "psi_at_1_geq_1": bool(profile.psi(np.asarray(1.0)) >= 1.0),
        "psi_geq_t": bool(np.all(profile.psi(ts) >= ts * (1 - 1e-12))),
        "secant_convexity": bool(np.all(mid <= sec * (1 + 1e-12) + 1e-12)),
        "dpsi_positive": bool(np.all(profile.dpsi(ts) > 0)),
    }


@dataclass(frozen=True)
class GrowthReport:
    ts: np.ndarray
    ratios: np.ndarray
    trend: str          # "bounded" | "unbounded"
    limit_estimate: float


def growth_diagnostic(profile, t_max=1e3, samples=200):
    """Sample t Psi'(t)/Psi(t) on [1, t_max] and classify its trend.

    The ratio tends to p for powers (bounded) and grows like p*t for
    exponentials (unbounded); it controls whether the Ahlfors-Hopf field
    of a finite-energy critical point is automatically integrable.
    """
    if t_max < 10:
        raise ConfigurationError(f"growth_diagnostic needs t_max >= 10, got {t_max}")
    ts = np.geomspace(1.0, t_max, samples)
    with np.errstate(over="ignore", invalid="ignore"):
        ratios = ts * profile.dpsi(ts) / profile.psi(ts)
    finite = np.isfinite(ratios)
    ts, ratios = ts[finite], ratios[finite]
    r_end = ratios[-1]
    r_mid = ratios[len(ratios) // 2]
    trend = "unbounded" if r_end > 1.5 * max(r_mid, 1e-300) else "bounded"
    return GrowthReport(ts, ratios, trend, float(r_end))
