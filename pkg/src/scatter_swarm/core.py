"""Complex 3-vector algebra, medium parameters, domain geometry and material samplers.

Everything here is immutable after construction and safe to share across
threads. Vectors are plain numpy arrays of shape (..., 3); complex fields use
dtype complex128 throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParameterError


# ---------------------------------------------------------------------------
# vector algebra
# ---------------------------------------------------------------------------

def cross(u, v):
    """Cross product u x v over the last axis (complex-safe, no conjugation)."""
    return np.cross(u, v)


def dot(u, v):
    """Bilinear dot product (u, v) over the last axis, without conjugation."""
    return np.sum(np.asarray(u) * np.asarray(v), axis=-1)


def tangential(E, N):
    """Tangential component E - N (E, N) of E relative to the unit vector N.

    Equals [N, [E, N]] for |N| = 1.
    """
    E = np.asarray(E)
    N = np.asarray(N)
    return E - N * dot(E, N)[..., np.newaxis]


def as_point(x):
    """Coerce to a float array of shape (3,) or (..., 3)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ParameterError(f"expected 3-vector(s), got shape {x.shape}")
    return x


def as_cvec(v):
    """Coerce to a complex array of shape (..., 3)."""
    v = np.asarray(v, dtype=complex)
    if v.shape[-1] != 3:
        raise ParameterError(f"expected 3-vector(s), got shape {v.shape}")
    return v


# ---------------------------------------------------------------------------
# medium
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MediumParams:
    """Ambient medium: permittivity, permeability, conductivity, frequency.

    Units are normalized (eps0 = mu0 = 1 by default) but all formulas carry
    omega and mu0 explicitly, so physical units work unchanged.
    """

    eps0: float = 1.0
    mu0: float = 1.0
    sigma0: float = 0.0
    omega: float = 1.0

    def __post_init__(self):
        if not (self.omega > 0.0):
            raise ParameterError(f"omega must be positive, got {self.omega}")
        if not (self.eps0 > 0.0):
            raise ParameterError(f"eps0 must be positive, got {self.eps0}")
        if not (self.mu0 > 0.0):
            raise ParameterError(f"mu0 must be positive, got {self.mu0}")
        if self.sigma0 < 0.0:
            raise ParameterError(f"sigma0 must be >= 0, got {self.sigma0}")

    @property
    def eps_eff(self) -> complex:
        """Effective permittivity eps0 + i sigma0 / omega of a conducting host."""
        return complex(self.eps0, self.sigma0 / self.omega)

    @property
    def k(self) -> complex:
        return wavenumber(self)


def wavenumber(medium: MediumParams) -> complex:
    """Principal wavenumber: k^2 = omega^2 (eps0 + i sigma0/omega) mu0, Im k >= 0."""
    if not (medium.omega > 0 and medium.eps0 > 0 and medium.mu0 > 0):
        raise ParameterError("omega, eps0 and mu0 must all be positive")
    k2 = medium.omega ** 2 * medium.eps_eff * medium.mu0
    k = complex(np.sqrt(complex(k2)))
    if k.imag < 0.0:
        k = -k
    return k


def moment_coupling(medium: MediumParams) -> complex:
    """Coupling constant 8 pi i / (3 omega mu0).

    Multiplies h(x) N(x) in the medium response Psi and multiplies
    a^(2-kappa) h(x_m) in the per-sphere induced moment; the 8 pi / 3 is the
    surface-normal second moment of a sphere.
    """
    return 8j * math.pi / (3.0 * medium.omega * medium.mu0)


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimDomain:
    """Axis-aligned box holding the scatterer distribution."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = as_point(self.lo).copy()
        hi = as_point(self.hi).copy()
        if not np.all(lo < hi):
            raise ParameterError(f"domain must have lo < hi componentwise, got {lo} !< {hi}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def extent(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def contains(self, x):
        """Boolean (or boolean array) marking points inside the closed box."""
        x = as_point(x)
        return np.all((x >= self.lo) & (x <= self.hi), axis=-1)


# ---------------------------------------------------------------------------
# material samplers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantField:
    """Spatially constant sampler."""

    value: complex

    def __call__(self, points):
        points = as_point(points)
        return np.full(points.shape[:-1], complex(self.value), dtype=complex)


@dataclass(frozen=True)
class GaussianBump:
    """Isotropic Gaussian bump: amplitude * exp(-|x - center|^2 / (2 width^2))."""

    amplitude: complex
    center: tuple = (0.0, 0.0, 0.0)
    width: float = 1.0

    def __post_init__(self):
        if not (self.width > 0):
            raise ParameterError(f"width must be positive, got {self.width}")

    def __call__(self, points):
        points = as_point(points)
        r2 = np.sum((points - np.asarray(self.center, dtype=float)) ** 2, axis=-1)
        return complex(self.amplitude) * np.exp(-r2 / (2.0 * self.width ** 2))


_MONOMIALS = {
    "1": (0, 0, 0),
    "x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1),
    "xx": (2, 0, 0), "yy": (0, 2, 0), "zz": (0, 0, 2),
    "xy": (1, 1, 0), "xz": (1, 0, 1), "yz": (0, 1, 1),
}


@dataclass(frozen=True)
class PolynomialField:
    """Trivariate polynomial up to total degree 2: {"1": c0, "x": c1, "xy": ...}."""

    coeffs: dict

    def __post_init__(self):
        for key in self.coeffs:
            if key not in _MONOMIALS:
                raise ParameterError(f"unknown monomial {key!r}; allowed: {sorted(_MONOMIALS)}")

    def __call__(self, points):
        points = as_point(points)
        out = np.zeros(points.shape[:-1], dtype=complex)
        x, y, z = points[..., 0], points[..., 1], points[..., 2]
        for key, c in self.coeffs.items():
            px, py, pz = _MONOMIALS[key]
            out = out + complex(c) * x ** px * y ** py * z ** pz
        return out


class VoxelGrid:
    """Node-centered voxel field with trilinear interpolation.

    Nodes sit at origin + index * spacing; queries outside the grid's box
    return 0. Serializes as {dims, origin, spacing, values: [[re, im], ...]}
    with values flattened in C order.
    """

    def __init__(self, origin, spacing, values):
        origin = as_point(origin).copy()
        spacing = np.asarray(spacing, dtype=float).copy()
        values = np.asarray(values, dtype=complex).copy()
        if spacing.shape != (3,) or np.any(spacing <= 0):
            raise ParameterError(f"spacing must be 3 positive steps, got {spacing}")
        if values.ndim != 3 or min(values.shape) < 2:
            raise ParameterError(f"values must be (nx, ny, nz) with all dims >= 2, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("voxel grid contains NaN or infinite entries")
        for arr in (origin, spacing, values):
            arr.setflags(write=False)
        self.origin = origin
        self.spacing = spacing
        self.values = values

    @property
    def dims(self):
        return self.values.shape

    @property
    def node_coords(self):
        return tuple(self.origin[i] + self.spacing[i] * np.arange(self.dims[i]) for i in range(3))

    def __call__(self, points):
        points = as_point(points)
        flat = points.reshape(-1, 3)
        t = (flat - self.origin) / self.spacing
        hi = np.asarray(self.dims, dtype=float) - 1.0
        inside = np.all((t >= -1e-12) & (t <= hi + 1e-12), axis=-1)
        t = np.clip(t, 0.0, hi)
        i0 = np.minimum(t.astype(int), (np.asarray(self.dims) - 2))
        f = t - i0
        out = np.zeros(flat.shape[0], dtype=complex)
        for dx in (0, 1):
            for dy in (0, 1):
                for dz in (0, 1):
                    w = (np.where(dx, f[:, 0], 1 - f[:, 0])
                         * np.where(dy, f[:, 1], 1 - f[:, 1])
                         * np.where(dz, f[:, 2], 1 - f[:, 2]))
                    out += w * self.values[i0[:, 0] + dx, i0[:, 1] + dy, i0[:, 2] + dz]
        out[~inside] = 0.0
        return out.reshape(points.shape[:-1])

    def to_json_dict(self):
        vals = self.values.reshape(-1)
        return {
            "dims": [int(n) for n in self.dims],
            "origin": [float(v) for v in self.origin],
            "spacing": [float(v) for v in self.spacing],
            "values": [[float(v.real), float(v.imag)] for v in vals],
        }

    @classmethod
    def from_json_dict(cls, d):
        dims = tuple(int(n) for n in d["dims"])
        vals = np.array([complex(re, im) for re, im in d["values"]], dtype=complex)
        if vals.size != dims[0] * dims[1] * dims[2]:
            raise DataError(f"voxel value count {vals.size} does not match dims {dims}")
        return cls(d["origin"], d["spacing"], vals.reshape(dims))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class MaterialFields:
    """Samplers for the impedance function h (complex, Re h >= 0) and the
    particle density N (real, >= 0) over a box domain; both vanish outside."""

    domain: SimDomain
    h: object = field(default_factory=lambda: ConstantField(0.0))
    N: object = field(default_factory=lambda: ConstantField(0.0))

    def sample(self, x):
        """Return (h(x), N(x)); both are zero outside the domain."""
        x = as_point(x)
        inside = self.domain.contains(x)
        h = np.asarray(self.h(x), dtype=complex)
        N = np.asarray(self.N(x))
        if np.iscomplexobj(N):
            if np.any(np.abs(N.imag) > 0):
                raise ParameterError("density N must be real-valued")
            N = N.real
        N = np.asarray(N, dtype=float)
        h = np.where(inside, h, 0.0)
        N = np.where(inside, N, 0.0)
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(N))):
            raise DataError("material sampler produced NaN or infinite values")
        if np.any(h.real < 0.0):
            raise ParameterError("impedance function must satisfy Re h >= 0")
        if np.any(N < 0.0):
            raise ParameterError("density N must be >= 0")
        if x.ndim == 1:
            return complex(h), float(N)
        return h, N


def sample_materials(fields: MaterialFields, x):
    """Sample (h, N) at a point (or batch of points); (0, 0) outside the domain."""
    return fields.sample(x)
