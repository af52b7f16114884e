"""Exact extremal diffeomorphisms of the half-plane from a separable ODE.

For h(x+iy) = x + i u(y) the constant-Ahlfors-Hopf condition reads

    Psi'((1+u'^2)/(2u')) (1-u'^2) eta(u) = 4 lambda          (*)

Writing F(t) = Psi'((1+t^2)/(2t)) (1-t^2), strictly decreasing with
F(1) = 0, this is u' = G(u) = F^{-1}(4 lambda / eta(u)), u(0) = 0.
lambda > 0 forces the contracting branch u' in (0,1), lambda < 0 the
expanding branch u' > 1, lambda = 0 the identity.

The target constant is 4*lambda throughout, matching (*); the Hopf field
of the induced map equals lambda (conversion by the exact factor 4:
Phi = Psi'(K) h_z conj(h_zbar) eta = F(u') eta / 4).

Surjectivity follows the paper's divergence criterion for the separable
construction: the integral of t -> F^{-1}(4 lambda / eta(t)) over dyadic
blocks must keep growing (tail increment ratio >= 3/4). Note this is
deliberately not a growth test on the solved u itself: for Psi=t^2,
lambda>0 the autonomous solution grows like y^(1/3) yet the criterion
(and the verdict here) is non-surjective.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfigurationError, DomainValidationError, RangeError,
                     UnsupportedBranchError)

CONTRACTING = "contracting"   # u' in (0,1), lambda > 0
EXPANDING = "expanding"       # u' > 1,     lambda < 0
IDENTITY = "identity"         # lambda = 0

_M_INFINITE = 1e12


def F_eval(psi, t):
    """F(t) = Psi'((1+t^2)/(2t)) (1-t^2); sign matches sign of (1-t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainValidationError("F is defined for t > 0")
    with np.errstate(over="ignore"):
        out = psi.dpsi((1 + t * t) / (2 * t)) * (1 - t * t)
    return float(out) if out.ndim == 0 else out


def _F_scalar(psi, t):
    dps = psi.dpsi_scalar
    if dps is not None:
        return dps((1 + t * t) / (2 * t)) * (1 - t * t)
    return float(psi.dpsi((1 + t * t) / (2 * t)) * (1 - t * t))


def _bisect_scalar(psi, y, branch, M=math.inf):
    """Scalar F-inverse by bisection with early exit; None if y is out of range.

    On the contracting branch values within 1e-12 (relative) of M count as
    out of range: M itself is only resolved to that accuracy, and the ODE
    solver relies on this margin to detect branch exhaustion instead of
    creeping along the wall forever.
    """
    if y == 0.0:
        return 1.0
    if branch == CONTRACTING:
        if y < 0 or y >= M * (1 - 1e-12):
            return None
        lo = 0.5
        while _F_scalar(psi, lo) < y:
            lo *= 0.5
            if lo < 1e-300:
                return None
        hi = 1.0
    else:
        if y > 0:
            return None
        lo, hi = 1.0, 2.0
        while _F_scalar(psi, hi) > y:
            hi *= 2.0
            if hi > 1e300:
                return None
    eps = np.finfo(float).eps
    tol = 1e-15 * (1 + abs(y))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _F_scalar(psi, mid)
        if fm > y:
            lo = mid
        else:
            hi = mid
        if (hi - lo) <= 2 * eps * max(1.0, hi) or abs(fm - y) <= tol:
            break
    return 0.5 * (lo + hi)


def M_limit(psi):
    """lim_{a->0+} F(a) by monotone dyadic sampling; inf when it exceeds 1e12."""
    prev = None
    for k in range(1, 200):
        a = 2.0 ** -k
        val = F_eval(psi, a)
        if not np.isfinite(val) or val > _M_INFINITE:
            return math.inf
        if prev is not None and abs(val - prev) <= 1e-12 * max(1.0, abs(val)):
            return float(val)
        prev = val
    return float(prev)


def F_inverse(psi, y, branch, max_iter=200):
    """Invert F on a branch by bracketed bisection (no Newton).

    contracting: y in [0, M) -> t in (0, 1];  expanding: y <= 0 -> t >= 1.
    Stops when the bracket collapses to machine width or the residual
    drops below 1e-13 (1+|y|); y outside the branch range raises
    RangeError carrying M.
    """
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y).astype(float)
    t = np.empty_like(y)

    if branch == CONTRACTING:
        if np.any(y < 0):
            raise RangeError("contracting branch needs y >= 0")
        M = M_limit(psi)
        if np.any(y >= M):
            raise RangeError(f"y >= M = {M:g} is outside the contracting range", detail=M)
        lo = np.full_like(y, 0.5)
        for _ in range(2000):
            need = (F_eval(psi, lo) < y) & (y > 0)
            if not need.any():
                break
            lo[need] *= 0.5
            if np.any(lo < 1e-300):
                raise RangeError(f"y too close to M = {M:g}", detail=M)
        hi = np.ones_like(y)
    elif branch == EXPANDING:
        if np.any(y > 0):
            raise RangeError("expanding branch needs y <= 0")
        lo = np.ones_like(y)
        hi = np.full_like(y, 2.0)
        for _ in range(2000):
            need = F_eval(psi, hi) > y
            if not need.any():
                break
            hi[need] *= 2.0
            if np.any(hi > 1e300):
                raise RangeError("no bracket found on the expanding branch")
    else:
        raise ConfigurationError(f"unknown branch {branch!r}")

    tol = 1e-13 * (1 + np.abs(y))
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = F_eval(psi, mid)
        high = fm > y          # F decreasing: value above target -> move lo up
        lo = np.where(high, mid, lo)
        hi = np.where(high, hi, mid)
        if np.all((hi - lo) <= 4 * np.finfo(float).eps * np.maximum(1.0, hi)) \
           and np.all(np.abs(fm - y) <= tol):
            break
    t = 0.5 * (lo + hi)
    t[y == 0] = 1.0
    return float(t[0]) if scalar else t


@dataclass(frozen=True)
class OdeProfile:
    """A solved (or exact) profile: samples of u, u' over [0, y_end].

    branch         one of contracting/expanding/identity
    complete       False when integration stopped before y_max
    no_solution    True when the branch range was exhausted (lambda > 0,
                   finite M, decaying eta): the paper's no-solution case
    """

    psi: object
    eta_name: str
    eta: callable = field(repr=False)
    lam: float = 0.0
    branch: str = IDENTITY
    ys: np.ndarray = field(default=None, repr=False)
    us: np.ndarray = field(default=None, repr=False)
    ups: np.ndarray = field(default=None, repr=False)
    M: float = math.inf
    complete: bool = True
    no_solution: bool = False
    overflow: bool = False    # u left double range (expanding branch only)
    surjectivity: str = "undiagnosed"
    exact: callable = field(default=None, repr=False)   # closed form u(y) if known

    @property
    def y_end(self):
        return float(self.ys[-1])

    def u(self, y):
        """u at arbitrary y in [0, y_end] (cubic Hermite through the samples)."""
        y = np.asarray(y, dtype=float)
        if np.any(y < -1e-12) or np.any(y > self.y_end * (1 + 1e-12)):
            raise RangeError(f"y outside the solved range [0, {self.y_end:g}]")
        if self.exact is not None:
            return self.exact(y)
        from scipy.interpolate import CubicHermiteSpline
        sp = CubicHermiteSpline(self.ys, self.us, self.ups)
        return sp(np.clip(y, 0.0, self.y_end))

    def up(self, y):
        """u' at arbitrary y, re-solved from the ODE at the interpolated u."""
        if self.branch == IDENTITY:
            return np.ones(np.shape(y))
        u = self.u(y)
        return _G(self.psi, self.eta, self.lam, self.branch, self.M, u)[0]

    def K(self, y):
        up = self.up(y)
        return (1 + up ** 2) / (2 * up)

    def residuals(self):
        """|F(u') eta(u) - 4 lambda| at the samples (0 where eta overflows)."""
        if self.branch == IDENTITY:
            return np.zeros_like(self.ys)
        ev = self.eta(self.us)
        targets = _safe_div(4 * self.lam, ev)
        Fv = F_eval(self.psi, self.ups)
        with np.errstate(invalid="ignore", over="ignore"):
            res = np.abs(Fv - targets) * ev
        bad = ~np.isfinite(ev)
        res[bad] = np.abs(Fv[bad])
        return res


def _safe_div(a, b):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.isfinite(b) & (b != 0), a / np.where(b == 0, 1, b), 0.0)
    return out


def _G(psi, eta, lam, branch, M, u):
    """(G(u), exhausted): u' from the ODE, flagging branch-range exhaustion."""
    u = np.asarray(u, dtype=float)
    ev = eta(u)
    target = _safe_div(4 * lam, ev)
    if branch == CONTRACTING and np.isfinite(M):
        exhausted = target >= M * (1 - 1e-12)
        if np.any(exhausted):
            return np.zeros_like(u), True
    g = F_inverse(psi, target, branch)
    return np.asarray(g), False


def solve_profile(psi, eta, lam, y_max, rtol=1e-11, atol=1e-11,
                  max_steps=200_000, first_step=None):
    """Integrate u' = F^{-1}(4 lambda / eta(u)), u(0)=0, by adaptive RK4.

    Step-doubling error control with local error <= atol + rtol max(|u|,1)
    (defaults well inside the 1e-10 contract); accepted steps are
    Richardson-extrapolated. Steps are capped at y/8 so the sample set
    resolves every decade (log-log fits downstream).

    eta may be a WeightField (its height profile is used) or a plain
    callable s -> eta(s). Returns an OdeProfile; when the contracting
    branch exhausts its range the profile is partial with
    no_solution=True, mirroring the no-solution case of the theory.
    """
    eta_fn = eta.on_imag if hasattr(eta, "on_imag") else eta
    eta_name = getattr(eta, "kind", getattr(eta, "__name__", "custom"))
    if y_max <= 0:
        raise ConfigurationError(f"y_max must be positive, got {y_max}")

    if lam == 0:
        ys = np.linspace(0.0, y_max, 257)
        return OdeProfile(psi, eta_name, eta_fn, 0.0, IDENTITY,
                          ys, ys.copy(), np.ones_like(ys), M_limit(psi),
                          exact=lambda y: np.asarray(y, dtype=float) + 0.0)

    branch = CONTRACTING if lam > 0 else EXPANDING
    M = M_limit(psi)

    def rhs(u):
        """Scalar G(u); None marks branch-range exhaustion, inf an eta underflow."""
        ev = float(eta_fn(u))
        if not np.isfinite(ev):
            target = 0.0        # eta -> infinity (u near 0): u' -> 1
        elif ev == 0.0:
            # eta underflowed: |4 lam / eta| = inf, beyond any branch range
            return math.inf if branch == EXPANDING else None
        else:
            target = 4 * lam / ev
        return _bisect_scalar(psi, target, branch, M)

    y, u = 0.0, 0.0
    g0 = rhs(u)
    if g0 is None:
        raise RangeError("branch range exhausted already at u = 0", detail=M)
    ys, us, ups = [0.0], [0.0], [g0]
    h = first_step if first_step is not None else min(1e-3, y_max / 64)
    no_solution = False

    def rk4(u0, hh):
        k1 = rhs(u0)
        if k1 is None:
            return None
        k2 = rhs(u0 + 0.5 * hh * k1)
        if k2 is None:
            return None
        k3 = rhs(u0 + 0.5 * hh * k2)
        if k3 is None:
            return None
        k4 = rhs(u0 + hh * k3)
        if k4 is None:
            return None
        return u0 + hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    steps = 0
    stalled = 0
    overflow = False
    while y < y_max and steps < max_steps:
        steps += 1
        h = min(h, y_max - y, max(y / 8, 1e-3) if y > 0 else h)
        full = rk4(u, h)
        half = rk4(u, h / 2)
        two = rk4(half, h / 2) if half is not None else None
        bad = (full is None or two is None
               or not (np.isfinite(full) and np.isfinite(two)))
        if bad:
            if u > 1e150:
                # expanding branch left double range; growth already conclusive
                overflow = True
                break
            # stepping into the exhausted region: shrink, then give up to it
            if h > 1e-12 * max(1.0, y):
                h *= 0.25
                continue
            no_solution = True
            break
        err = abs(two - full) / 15
        scale = atol + rtol * max(abs(two), 1.0)
        if err <= scale:
            y += h
            u = two + (two - full) / 15
            if u > 1e150:
                overflow = True
                break
            g = rhs(u)
            if g is None:
                no_solution = True
                break
            ys.append(y)
            us.append(u)
            ups.append(g)
            # pinned against the branch wall: progress has effectively stopped
            stalled = stalled + 1 if h < 1e-7 * max(1.0, y) else 0
            if branch == CONTRACTING and np.isfinite(M) and stalled >= 25:
                no_solution = True
                break
        factor = 0.9 * (scale / err) ** 0.2 if err > 0 else 4.0
        h *= min(4.0, max(0.1, factor))

    profile = OdeProfile(psi, eta_name, eta_fn, float(lam), branch,
                         np.asarray(ys), np.asarray(us), np.asarray(ups), M,
                         complete=y >= y_max, no_solution=no_solution,
                         overflow=overflow)
    _check_branch(profile)
    return profile


def _check_branch(profile):
    ups = profile.ups
    if profile.branch == CONTRACTING:
        if np.any((ups <= 0) | (ups >= 1 + 1e-12)):
            raise RangeError("contracting branch left u' in (0,1)")
    elif profile.branch == EXPANDING:
        if np.any(ups < 1 - 1e-12):
            raise RangeError("expanding branch left u' >= 1")
    if np.any(np.diff(profile.us) < 0):
        raise RangeError("u is not increasing")


def linear_alpha_profile(psi, alpha, y_max=20.0):
    """The exact linear family u = alpha y with unit eta; lambda = F(alpha)/4."""
    if alpha <= 0:
        raise ConfigurationError(f"alpha must be positive, got {alpha}")
    lam = F_eval(psi, alpha) / 4.0
    branch = IDENTITY if alpha == 1 else (CONTRACTING if alpha < 1 else EXPANDING)
    ys = np.linspace(0.0, y_max, 257)
    eta = lambda s: np.ones(np.shape(s))
    return OdeProfile(psi, "unit", eta, lam, branch,
                      ys, alpha * ys, np.full_like(ys, float(alpha)), M_limit(psi),
                      exact=lambda y: alpha * np.asarray(y, dtype=float))


@dataclass(frozen=True)
class SurjectivityReport:
    verdict: str               # "surjective" | "not surjective"
    tail_ratio: float          # dyadic increment ratio of the direct integral
    u_end: float
    u_tail_slope: float        # log-log growth of the solved u itself
    liminf_proxy: float        # min of eta(s) Psi'(s) over the sampled tail
    no_solution: bool

    @property
    def surjective(self):
        return self.verdict == "surjective"


def surjectivity_diagnosis(profile, y_min_required=1e3):
    """Divergence verdict for the separable construction.

    Integrates t -> F^{-1}(4 lambda / eta(t)) over dyadic blocks [2^k, 2^{k+1}]
    and extrapolates the tail: increment ratios >= 3/4 mean the integral
    diverges (surjective); a geometric tail means it converges. Profiles
    that exhausted their branch are non-surjective outright.
    """
    if profile.branch == IDENTITY:
        return SurjectivityReport("surjective", 2.0, profile.y_end, 1.0,
                                  float(np.min(profile.eta(np.geomspace(1, 1e3, 64))
                                               * profile.psi.dpsi(np.geomspace(1, 1e3, 64)))),
                                  False)
    if profile.no_solution:
        s = np.geomspace(1.0, 1e3, 64)
        prox = float(np.min(profile.eta(s) * profile.psi.dpsi(s)))
        return SurjectivityReport("not surjective", 0.0, float(profile.us[-1]),
                                  0.0, prox, True)
    if profile.overflow:
        # u exceeded 1e150 before y_max: expanding-branch growth, conclusive
        s = np.geomspace(max(1.0, profile.y_end / 100), max(2.0, profile.y_end), 64)
        prox = float(np.min(profile.eta(s) * profile.psi.dpsi(s)))
        return SurjectivityReport("surjective", math.inf, float(profile.us[-1]),
                                  math.inf, prox, False)
    if profile.y_end < y_min_required:
        raise RangeError(f"profile solved only to y = {profile.y_end:g} < {y_min_required:g}")

    n_blocks = int(np.floor(np.log2(profile.y_end)))
    increments = []
    exhausted = False
    for k in range(n_blocks):
        a, b = 2.0 ** k, 2.0 ** (k + 1)
        t = np.linspace(a, b, 65)
        ev = profile.eta(t)
        target = _safe_div(4 * profile.lam, ev)
        if profile.branch == CONTRACTING and np.isfinite(profile.M) \
           and np.any(target >= profile.M * (1 - 1e-12)):
            exhausted = True
            break
        g = F_inverse(profile.psi, target, profile.branch)
        w = np.ones(65)
        w[1:-1:2], w[2:-1:2] = 4.0, 2.0
        increments.append(float(np.sum(w * g) * (b - a) / 64 / 3))

    if exhausted or len(increments) < 2:
        ratio = 0.0
    else:
        ratio = increments[-1] / increments[-2]
    verdict = "surjective" if (not exhausted and ratio >= 0.75) else "not surjective"

    tail = profile.ys >= profile.y_end / 10
    if tail.sum() >= 4 and profile.us[tail].min() > 0:
        slope = np.polyfit(np.log(profile.ys[tail]), np.log(profile.us[tail]), 1)[0]
    else:
        slope = float("nan")
    s = np.geomspace(max(1.0, profile.y_end / 100), profile.y_end, 64)
    prox = float(np.min(profile.eta(s) * profile.psi.dpsi(s)))
    return SurjectivityReport(verdict, float(ratio), float(profile.us[-1]),
                              float(slope), prox, False)


def build_half_plane_map(profile, grid):
    """h(x+iy) = x + i u(y) on a half-plane grid, with analytic derivatives.

    Returns (MappingField, WirtingerField) where the second carries the
    exact h_z = (1+u')/2, h_zbar = (1-u')/2 from the ODE itself.
    """
    from .fields import MappingField, WirtingerField
    if grid.kind != "half-plane":
        raise ConfigurationError("build_half_plane_map needs a half-plane grid")
    x0, x1, y0, y1 = grid.extents
    if y1 > profile.y_end * (1 + 1e-12) and profile.exact is None:
        raise RangeError(f"profile solved to y = {profile.y_end:g} < grid top {y1:g}")
    ys = grid.zz.imag
    u = profile.u(ys)
    up = profile.up(ys)
    fieldv = grid.zz.real + 1j * u
    h = MappingField.from_values(grid, fieldv)
    fz = (1 + up) / 2 + 0j
    fzb = (1 - up) / 2 + 0j
    W = WirtingerField.from_derivatives(grid, fz, fzb)
    return h, W


def ah_residual(h, psi, eta, lam, wirtinger=None, stencil_order=4):
    """max over nodes of |4 Psi'(K) h_z conj(h_zbar) eta(Im h) - 4 lambda|."""
    from .fields import distortion, wirtinger_derivatives
    W = wirtinger if wirtinger is not None else wirtinger_derivatives(h, stencil_order)
    D = distortion(W)
    eta_fn = eta.on_imag if hasattr(eta, "on_imag") else eta
    ok = D.valid
    ev = eta_fn(h.values.imag[ok])
    phi = psi.dpsi(D.K[ok]) * W.fz[ok] * np.conj(W.fzb[ok]) * ev
    return float(np.max(np.abs(4 * phi - 4 * lam)))


@dataclass(frozen=True)
class HarmonicClosedForm:
    """Closed forms for Psi = t, eta = Im^-2 (hyperbolic harmonic case).

    For lam < 0 the IVP u' = sqrt(1 - 4 lam u^2), u(0) = 0 integrates to
    u(y) = sinh(2 sqrt(|lam|) y) / (2 sqrt(|lam|)); the distortion along
    height is K(y) = (1 + u'(y)^2)/(2 u'(y)) with u' = cosh(2 sqrt(|lam|) y),
    equivalently K = (2|lam|s^2+1)/sqrt(4|lam|s^2+1) at image height s = u.
    (The arcsinh form seen in the source material is the inverse function
    y(u), and its K display reads lam as a magnitude; both verified against
    a high-precision IVP oracle.)
    """

    lam: float

    def u(self, y):
        y = np.asarray(y, dtype=float)
        if self.lam == 0:
            return y + 0.0
        m = math.sqrt(-self.lam)
        return np.sinh(2 * m * y) / (2 * m)

    def up(self, y):
        y = np.asarray(y, dtype=float)
        if self.lam == 0:
            return np.ones_like(y)
        m = math.sqrt(-self.lam)
        return np.cosh(2 * m * y)

    def K_of_y(self, y):
        up = self.up(y)
        return (1 + up ** 2) / (2 * up)

    def K_of_s(self, s):
        """Distortion as a function of the image height s = u(y)."""
        s = np.asarray(s, dtype=float)
        m = -self.lam
        return (2 * m * s ** 2 + 1) / np.sqrt(4 * m * s ** 2 + 1)


def harmonic_closed_form(lam):
    if lam > 0:
        raise UnsupportedBranchError("harmonic closed form exists for lambda <= 0 only")
    return HarmonicClosedForm(float(lam))


def power2_exponent(profile, s_range):
    """Least-squares slope of log u against log y over s_range.

    For Psi = t^2 with the hyperbolic eta this is 1/3 (lambda > 0) or 3
    (lambda < 0); exactly 1 for lambda = 0.
    """
    lo, hi = s_range
    if hi <= lo or lo <= 0:
        raise RangeError(f"bad s_range {s_range}")
    sel = (profile.ys >= lo) & (profile.ys <= hi)
    if sel.sum() < 10 or profile.ys[sel].max() < 4 * profile.ys[sel].min():
        raise RangeError(f"only {int(sel.sum())} samples in {s_range}; solve further")
    x = np.log(profile.ys[sel])
    y = np.log(profile.us[sel])
    return float(np.polyfit(x, y, 1)[0])
