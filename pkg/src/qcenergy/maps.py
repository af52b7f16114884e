"""Built-in analytic test maps and smooth bump fields.

These are the reusable ingredients of the verification batteries: linear
alpha-maps, radial stretches, disk Moebius automorphisms, the conjugated
half-plane family g_alpha, and compactly supported C^infinity bumps with
closed-form gradients (used both for random boundary-identity test maps
and as the inner-variation basis).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .fields import MappingField

# ---------------------------------------------------------------- analytic maps


def identity_map():
    return lambda z: np.asarray(z, dtype=complex) + 0.0


def alpha_map(alpha):
    """h(x+iy) = x + i alpha y; Beltrami coefficient (1-alpha)/(1+alpha)."""
    def fn(z):
        z = np.asarray(z, dtype=complex)
        return z.real + 1j * alpha * z.imag
    return fn


def radial_stretch(s):
    """f(z) = z |z|^s, a boundary-identity stretch of the disk (s > -1)."""
    def fn(z):
        z = np.asarray(z, dtype=complex)
        return z * np.abs(z) ** s
    return fn


def radial_stretch_inverse(s):
    return radial_stretch(1.0 / (1.0 + s) - 1.0)


def disk_mobius(a, theta=0.0):
    """psi(z) = e^{i theta} (z - a)/(1 - conj(a) z), an automorphism of the disk."""
    if abs(a) >= 1:
        raise ConfigurationError(f"|a| = {abs(a)} must be < 1")
    def fn(z):
        z = np.asarray(z, dtype=complex)
        return np.exp(1j * theta) * (z - a) / (1 - np.conj(a) * z)
    return fn


def g_alpha(alpha):
    """The conjugated linear family on the disk: psi^{-1} o (x+i alpha y) o psi.

    Identity on |w| = 1; its Hopf field for Psi = t and the cayley weight
    is the constant (1-alpha^2)/4 times (psi')^2.
    """
    def fn(w):
        w = np.asarray(w, dtype=complex)
        zeta = -1j * (w - 1) / (w + 1)
        hz = zeta.real + 1j * alpha * zeta.imag
        return (1j - hz) / (1j + hz)
    return fn


def squeeze_map(c=0.1):
    """H(z) = z + c (1-|z|^2) conj(z): boundary-identity, nonconformal inside."""
    def fn(z):
        z = np.asarray(z, dtype=complex)
        return z + c * (1 - np.abs(z) ** 2) * np.conj(z)
    return fn


# ---------------------------------------------------------------- smooth bumps


def _bump(x):
    """exp(1 - 1/(1-x^2)) on |x| < 1, extended by 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    xm = x[m]
    out[m] = np.exp(1.0 - 1.0 / (1.0 - xm * xm))
    return out


def _bump_d(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    xm = x[m]
    out[m] = np.exp(1.0 - 1.0 / (1.0 - xm * xm)) * (-2 * xm / (1 - xm * xm) ** 2)
    return out


@dataclass(frozen=True)
class BumpField:
    """A = amp * b((x-cx)/r) b((y-cy)/r) times a unit complex direction.

    value() and the exact gradient components are closed forms; the field
    vanishes identically outside the square of half-width r around the
    center, so boundary traces are untouched whenever the support fits
    strictly inside the domain.
    """

    center: complex
    r: float
    amp: float
    direction: complex  # 1 for a real bump, 1j for an imaginary one

    def value(self, z):
        z = np.asarray(z, dtype=complex)
        sx = (z.real - self.center.real) / self.r
        sy = (z.imag - self.center.imag) / self.r
        return self.amp * _bump(sx) * _bump(sy) * self.direction

    def grad(self, z):
        """(d/dx, d/dy) of value, each complex-valued."""
        z = np.asarray(z, dtype=complex)
        sx = (z.real - self.center.real) / self.r
        sy = (z.imag - self.center.imag) / self.r
        gx = self.amp / self.r * _bump_d(sx) * _bump(sy) * self.direction
        gy = self.amp / self.r * _bump(sx) * _bump_d(sy) * self.direction
        return gx, gy

    def wirtinger(self, z):
        gx, gy = self.grad(z)
        return (gx - 1j * gy) / 2, (gx + 1j * gy) / 2

    def grad_sup(self):
        """Sampled sup of |(d/dx, d/dy)| over the support."""
        s = np.linspace(-0.999, 0.999, 201)
        X, Y = np.meshgrid(s, s)
        zz = (self.center.real + self.r * X) + 1j * (self.center.imag + self.r * Y)
        gx, gy = self.grad(zz)
        return float(np.max(np.hypot(np.abs(gx), np.abs(gy))))


# peak of |b'(x) b(y)| for the unit bump, used to normalize gradients
_UNIT_BUMP_GRAD_SUP = None


def _unit_grad_sup():
    global _UNIT_BUMP_GRAD_SUP
    if _UNIT_BUMP_GRAD_SUP is None:
        _UNIT_BUMP_GRAD_SUP = BumpField(0j, 1.0, 1.0, 1.0).grad_sup()
    return _UNIT_BUMP_GRAD_SUP


def dyadic_bump_sites(levels=(1, 2, 3), domain="disk", margin=0.02,
                      extents=(-1.0, 1.0, -1.0, 1.0), staggered=True):
    """Centers and radii of dyadic subsquares whose bump support fits the domain.

    Each level also contributes the three half-step staggered lattices
    (offsets (r,0), (0,r), (r,r)): cyclic coordinate descent over the plain
    lattice alone stalls on deviation patterns that are odd around the
    unstaggered centers, to which every unstaggered bump is blind by
    symmetry, and the derivative signal of a bump decays within ~r/3 of
    its center, so site spacing r/2 is needed to keep every residual
    visible to some element.
    """
    x0, x1, y0, y1 = extents
    sites = []
    for lev in levels:
        m = 2 ** lev
        rx = (x1 - x0) / (2 * m)
        ry = (y1 - y0) / (2 * m)
        r = min(rx, ry)
        centers = [complex(x0 + (2 * i + 1) * rx, y0 + (2 * j + 1) * ry)
                   for j in range(m) for i in range(m)]
        if staggered:
            centers += [complex(x0 + (2 * i + 2) * rx, y0 + (2 * j + 2) * ry)
                        for j in range(m - 1) for i in range(m - 1)]
            centers += [complex(x0 + (2 * i + 2) * rx, y0 + (2 * j + 1) * ry)
                        for j in range(m) for i in range(m - 1)]
            centers += [complex(x0 + (2 * i + 1) * rx, y0 + (2 * j + 2) * ry)
                        for j in range(m - 1) for i in range(m)]
        for c in centers:
            if domain == "disk":
                if abs(c) + r * np.sqrt(2) <= 1.0 - margin:
                    sites.append((c, r))
            else:
                if (c.real - r >= x0 + margin and c.real + r <= x1 - margin
                        and c.imag - r >= y0 + margin and c.imag + r <= y1 - margin):
                    sites.append((c, r))
    return sites


def bump_basis(levels=(1, 2, 3), domain="disk", margin=0.02, grad_bound=0.9,
               staggered=True):
    """Two bump fields (real/imaginary direction) per dyadic site.

    Each element is normalized so its sampled sup-gradient equals
    grad_bound < 1, which keeps z + t phi a diffeomorphism for |t| < 1.
    """
    unit = _unit_grad_sup()
    out = []
    for c, r in dyadic_bump_sites(levels, domain, margin, staggered=staggered):
        amp = grad_bound * r / unit
        out.append(BumpField(c, r, amp, 1.0 + 0j))
        out.append(BumpField(c, r, amp, 1j))
    return out


@dataclass(frozen=True)
class PerturbationMap:
    """f = id + sum of bump fields, with exact Wirtinger data."""

    bumps: tuple

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = z.astype(complex).copy()
        for b in self.bumps:
            out = out + b.value(z)
        return out

    def wirtinger(self, z):
        z = np.asarray(z, dtype=complex)
        fz = np.ones(z.shape, dtype=complex)
        fzb = np.zeros(z.shape, dtype=complex)
        for b in self.bumps:
            bz, bzb = b.wirtinger(z)
            fz = fz + bz
            fzb = fzb + bzb
        return fz, fzb

    def min_jacobian(self, z):
        fz, fzb = self.wirtinger(z)
        return float(np.min(np.abs(fz) ** 2 - np.abs(fzb) ** 2))


def random_boundary_identity_map(grid, rng, n_bumps=4, amp_range=(0.1, 0.45),
                                 levels=(1, 2, 3), min_jacobian=0.1):
    """A random finite-distortion diffeomorphism with exact identity boundary.

    Draws bumps from the dyadic family with random complex coefficients
    and rescales them geometrically until min J >= min_jacobian on the
    grid nodes (computed from the exact bump gradients, so membership in
    the discrete-homeomorphism class is guaranteed, not sampled).
    """
    basis = bump_basis(levels, domain=grid.kind if grid.kind == "disk" else "rect")
    idx = rng.choice(len(basis), size=min(n_bumps, len(basis)), replace=False)
    bumps = []
    for k in idx:
        b = basis[int(k)]
        scale = rng.uniform(*amp_range)
        phase = np.exp(2j * np.pi * rng.uniform())
        bumps.append(BumpField(b.center, b.r, b.amp * scale, phase))
    f = PerturbationMap(tuple(bumps))
    pts = grid.zz[grid.inside]
    for _ in range(60):
        if f.min_jacobian(pts) >= min_jacobian:
            break
        bumps = [BumpField(b.center, b.r, 0.8 * b.amp, b.direction) for b in bumps]
        f = PerturbationMap(tuple(bumps))
    return f


def as_field(fn, grid):
    return MappingField.from_function(grid, fn)


_BUILTIN_MAPS = {
    "identity": lambda arg: identity_map(),
    "alpha": lambda arg: alpha_map(float(arg)),
    "radial": lambda arg: radial_stretch(float(arg)),
    "galpha": lambda arg: g_alpha(float(arg)),
    "squeeze": lambda arg: squeeze_map(float(arg) if arg else 0.1),
    "conj": lambda arg: (lambda z: np.conj(np.asarray(z, dtype=complex))),
    "mobius": lambda arg: disk_mobius(*[float(v) for v in arg.split(",")]),
}


def parse_map(spec):
    """Parse a builtin map spec "name" or "name:params"."""
    name, _, arg = spec.partition(":")
    name = name.strip()
    if name not in _BUILTIN_MAPS:
        raise ConfigurationError(f"unknown map {spec!r} (want one of {sorted(_BUILTIN_MAPS)})")
    try:
        return _BUILTIN_MAPS[name](arg)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"bad map parameter in {spec!r}: {e}") from None
