"""Positive area weights on the disk and half-plane.

Built-ins, selectable by spec string:
  "unit"      lambda(z) = 1
  "hyp-disk"  (1-|z|^2)^-2, the hyperbolic area element of the disk
  "hyp-half"  Im(z)^-2, the hyperbolic area element of the half-plane
  "cayley"    4/|z+1|^4, the pullback of the unit half-plane weight
              under the Cayley map

Weights are carried as analytic functions and sampled on grids on demand;
energies evaluate them analytically at image points rather than by
interpolation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class WeightField:
    """An analytic weight: positive function of a complex point."""

    kind: str
    fn: callable
    domain: callable      # z -> bool array, True where the weight is defined and finite

    def __call__(self, z):
        return self.fn(np.asarray(z))

    def on_grid(self, grid):
        """Samples on the grid's inside nodes (NaN outside)."""
        out = np.full(grid.zz.shape, np.nan)
        m = grid.inside
        out[m] = self.fn(grid.zz[m])
        return out

    def on_imag(self, s):
        """The weight as a function of height only: evaluated at i*s.

        Used by the half-plane ODE machinery where eta depends on Im z.
        """
        s = np.asarray(s, dtype=float)
        return self.fn(1j * s)


def unit_weight():
    return WeightField("unit",
                       lambda z: np.ones(np.shape(z)),
                       lambda z: np.ones(np.shape(z), dtype=bool))


def hyperbolic_disk_weight():
    def fn(z):
        with np.errstate(divide="ignore"):
            return (1.0 - np.abs(z) ** 2) ** -2.0
    return WeightField("hyp-disk", fn, lambda z: np.abs(z) < 1)


def hyperbolic_half_plane_weight():
    def fn(z):
        with np.errstate(divide="ignore"):
            return np.imag(z) ** -2.0
    return WeightField("hyp-half", fn, lambda z: np.imag(z) > 0)


def cayley_weight():
    def fn(z):
        with np.errstate(divide="ignore"):
            return 4.0 / np.abs(np.asarray(z) + 1.0) ** 4
    return WeightField("cayley", fn, lambda z: np.abs(np.asarray(z) + 1.0) > 0)


def custom_weight(fn, name="custom", domain=None):
    return WeightField(name, fn, domain or (lambda z: np.ones(np.shape(z), dtype=bool)))


_BUILTINS = {
    "unit": unit_weight,
    "hyp-disk": hyperbolic_disk_weight,
    "hyp-half": hyperbolic_half_plane_weight,
    "cayley": cayley_weight,
}


def parse_weight(spec):
    spec = spec.strip()
    if spec not in _BUILTINS:
        raise ConfigurationError(f"unknown weight {spec!r} (want one of {sorted(_BUILTINS)})")
    return _BUILTINS[spec]()


def weight_monotone_along_rays(weight, directions=8, radii=None):
    """Check that a disk weight is nondecreasing along rays toward |z|=1.

    Sampling diagnostic for the 'diverges toward the boundary' invariant of
    the hyperbolic kinds.
    """
    radii = radii if radii is not None else np.linspace(0.0, 0.95, 40)
    ok = True
    for k in range(directions):
        ray = radii * np.exp(2j * np.pi * k / directions)
        vals = weight(ray)
        ok &= bool(np.all(np.diff(vals) >= -1e-12))
    return ok
