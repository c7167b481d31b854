"""Planar domains and grid-sampled scalar/vector fields.

Domains are described exactly (rectangle, disk, disk-with-holes); grids are
uniform Cartesian over a bounding box that strictly contains the domain
closure.  Off-node evaluation is bilinear.  Nodes of curved domains are
masked using the signed distance with a quarter-cell offset, which centers
the effective staircase boundary on the true one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

# inward offset (in units of h) applied when masking curved boundaries
CURVED_MASK_OFFSET = 0.25


@dataclass(frozen=True)
class Domain:
    """Exact geometry plus a uniform grid over its bounding box."""

    kind: str  # "square" | "disk" | "annular"
    h: float
    bbox: tuple  # (x_min, x_max, y_min, y_max), snapped to the grid
    rect: tuple | None = None  # (x0, x1, y0, y1) for kind == "square"
    center: tuple | None = None
    radius: float | None = None
    holes: tuple = ()  # ((cx, cy, r), ...)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def rectangle(x0, x1, y0, y1, h, pad=2):
        if h <= 0:
            raise ValueError("grid spacing must be positive")
        bbox = _snap_bbox(x0 - pad * h, x1 + pad * h, y0 - pad * h, y1 + pad * h, h)
        return Domain(kind="square", h=h, bbox=bbox, rect=(x0, x1, y0, y1))

    @staticmethod
    def square(side, h, origin=(0.0, 0.0), pad=2):
        x0, y0 = origin
        return Domain.rectangle(x0, x0 + side, y0, y0 + side, h, pad=pad)

    @staticmethod
    def disk(center, radius, h, pad=2):
        if h <= 0:
            raise ValueError("grid spacing must be positive")
        cx, cy = center
        r = radius
        bbox = _snap_bbox(cx - r - pad * h, cx + r + pad * h,
                          cy - r - pad * h, cy + r + pad * h, h)
        return Domain(kind="disk", h=h, bbox=bbox, center=(cx, cy), radius=r)

    @staticmethod
    def annulus(center, radius, holes, h, pad=2):
        """Disk with disjoint disk-shaped holes; holes as ((cx, cy, r), ...)."""
        cx, cy = center
        holes = tuple(tuple(map(float, hole)) for hole in holes)
        for hx, hy, hr in holes:
            if math.hypot(hx - cx, hy - cy) + hr >= radius:
                raise ValueError("hole not contained in the outer disk")
        for i, (ax, ay, ar) in enumerate(holes):
            for bx, by, br in holes[i + 1:]:
                if math.hypot(ax - bx, ay - by) <= ar + br:
                    raise ValueError("hole closures overlap")
        bbox = _snap_bbox(cx - radius - pad * h, cx + radius + pad * h,
                          cy - radius - pad * h, cy + radius + pad * h, h)
        return Domain(kind="annular", h=h, bbox=bbox, center=(cx, cy),
                      radius=radius, holes=holes)

    # -- grid ---------------------------------------------------------------

    @property
    def nx(self):
        x0, x1, _, _ = self.bbox
        return int(round((x1 - x0) / self.h)) + 1

    @property
    def ny(self):
        _, _, y0, y1 = self.bbox
        return int(round((y1 - y0) / self.h)) + 1

    def grid(self):
        x0, _, y0, _ = self.bbox
        xs = x0 + self.h * np.arange(self.nx)
        ys = y0 + self.h * np.arange(self.ny)
        return xs, ys

    def meshgrid(self):
        xs, ys = self.grid()
        return np.meshgrid(xs, ys, indexing="ij")

    # -- geometry -----------------------------------------------------------

    def signed_distance(self, X, Y):
        """Positive inside the domain, negative outside (exact geometry)."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if self.kind == "square":
            x0, x1, y0, y1 = self.rect
            return np.minimum.reduce([X - x0, x1 - X, Y - y0, y1 - Y])
        cx, cy = self.center
        d = self.radius - np.hypot(X - cx, Y - cy)
        for hx, hy, hr in self.holes:
            d = np.minimum(d, np.hypot(X - hx, Y - hy) - hr)
        return d

    def contains(self, X, Y):
        return self.signed_distance(X, Y) > 0

    @property
    def mask(self):
        X, Y = self.meshgrid()
        d = self.signed_distance(X, Y)
        if self.kind == "square":
            return d > 1e-12 * max(1.0, abs(self.rect[1]), abs(self.rect[3]))
        return d > CURVED_MASK_OFFSET * self.h

    @property
    def area(self):
        if self.kind == "square":
            x0, x1, y0, y1 = self.rect
            return (x1 - x0) * (y1 - y0)
        a = math.pi * self.radius**2
        for _, _, hr in self.holes:
            a -= math.pi * hr**2
        return a

    def outer(self):
        """The simply connected outer domain (holes filled in)."""
        if self.kind == "annular":
            return Domain(kind="disk", h=self.h, bbox=self.bbox,
                          center=self.center, radius=self.radius)
        return self

    def with_resolution(self, h):
        if self.kind == "square":
            x0, x1, y0, y1 = self.rect
            return Domain.rectangle(x0, x1, y0, y1, h)
        if self.kind == "disk":
            return Domain.disk(self.center, self.radius, h)
        return Domain.annulus(self.center, self.radius, self.holes, h)


def _snap_bbox(x0, x1, y0, y1, h):
    nx = int(math.ceil((x1 - x0) / h - 1e-12))
    ny = int(math.ceil((y1 - y0) / h - 1e-12))
    return (x0, x0 + nx * h, y0, y0 + ny * h)


@dataclass(frozen=True)
class Cell:
    """Open square (center, side) or open disk (center, radius)."""

    center: tuple
    size: float
    shape: str = "square"  # "square" | "disk"

    def __post_init__(self):
        if self.shape not in ("square", "disk"):
            raise ValueError(f"unknown cell shape {self.shape!r}")
        if self.size <= 0:
            raise ValueError("cell size must be positive")

    @property
    def diameter(self):
        return math.sqrt(2.0) * self.size if self.shape == "square" else 2.0 * self.size

    @property
    def area(self):
        return self.size**2 if self.shape == "square" else math.pi * self.size**2

    @property
    def halfwidth(self):
        return self.size / 2 if self.shape == "square" else self.size

    def contains(self, X, Y):
        cx, cy = self.center
        if self.shape == "square":
            r = self.size / 2
            return (np.abs(np.asarray(X) - cx) < r) & (np.abs(np.asarray(Y) - cy) < r)
        return np.hypot(np.asarray(X) - cx, np.asarray(Y) - cy) < self.size

    def midpoint_grid(self, n):
        """n x n midpoint quadrature nodes over the bounding square.

        Returns (X, Y, inside, dA); for square cells every node is inside.
        """
        cx, cy = self.center
        half = self.halfwidth
        step = 2 * half / n
        t = -half + step * (np.arange(n) + 0.5)
        X, Y = np.meshgrid(cx + t, cy + t, indexing="ij")
        if self.shape == "square":
            inside = np.ones_like(X, dtype=bool)
        else:
            inside = np.hypot(X - cx, Y - cy) < self.size
        return X, Y, inside, step * step


class _GridField:
    def __init__(self, domain: Domain, values: np.ndarray):
        self.domain = domain
        self.values = np.asarray(values, dtype=float)

    def interp(self, X, Y):
        """Bilinear interpolation at arbitrary points inside the bounding box."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        x0, x1, y0, y1 = self.domain.bbox
        h = self.domain.h
        eps = 1e-9 * h
        if (X < x0 - eps).any() or (X > x1 + eps).any() \
                or (Y < y0 - eps).any() or (Y > y1 + eps).any():
            raise ValueError("field support insufficient: sample point outside "
                             "the bounding box")
        fx = np.clip((X - x0) / h, 0.0, self.domain.nx - 1 - 1e-12)
        fy = np.clip((Y - y0) / h, 0.0, self.domain.ny - 1 - 1e-12)
        v = self.values
        if v.ndim == 2 and fx.shape == fy.shape:
            out = _kernels.bilinear_interp(
                np.ascontiguousarray(v),
                np.ascontiguousarray(fx.ravel(), dtype=float),
                np.ascontiguousarray(fy.ravel(), dtype=float))
            return out.reshape(fx.shape) if fx.ndim else float(out[0])
        i = fx.astype(int)
        j = fy.astype(int)
        tx = fx - i
        ty = fy - j
        if v.ndim == 3:
            tx = tx[..., None]
            ty = ty[..., None]
        return ((1 - tx) * (1 - ty) * v[i, j]
                + tx * (1 - ty) * v[i + 1, j]
                + (1 - tx) * ty * v[i, j + 1]
                + tx * ty * v[i + 1, j + 1])


class ScalarField(_GridField):
    """Real scalar samples on the domain grid, with the domain mask."""

    def __init__(self, domain, values, mask=None):
        super().__init__(domain, values)
        if self.values.shape != (domain.nx, domain.ny):
            raise ValueError("value grid does not match the domain grid")
        self.mask = domain.mask if mask is None else np.asarray(mask, dtype=bool)
        if not np.isfinite(self.values[self.mask]).all():
            raise ValueError("non-finite value at a masked node")

    @staticmethod
    def from_function(domain, f):
        X, Y = domain.meshgrid()
        return ScalarField(domain, f(X, Y))

    @staticmethod
    def constant(domain, c):
        return ScalarField(domain, np.full((domain.nx, domain.ny), float(c)))


class VectorField(_GridField):
    """Two-component real samples on the domain grid."""

    def __init__(self, domain, values):
        self.domain = domain
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (domain.nx, domain.ny, 2):
            raise ValueError("value grid does not match the domain grid")

    @staticmethod
    def from_function(domain, f):
        X, Y = domain.meshgrid()
        v1, v2 = f(X, Y)
        return VectorField(domain, np.stack(np.broadcast_arrays(v1, v2), axis=-1))


# -- grid calculus (second-order centered differences) ----------------------

def gradient_of(f: ScalarField):
    gx, gy = np.gradient(f.values, f.domain.h, f.domain.h)
    return gx, gy


def curl_of(a: VectorField) -> ScalarField:
    """Discrete curl A = d1 A2 - d2 A1 on the full grid."""
    h = a.domain.h
    d1a2 = np.gradient(a.values[:, :, 1], h, axis=0)
    d2a1 = np.gradient(a.values[:, :, 0], h, axis=1)
    return ScalarField(a.domain, d1a2 - d2a1)


def div_of(a: VectorField) -> ScalarField:
    h = a.domain.h
    d1a1 = np.gradient(a.values[:, :, 0], h, axis=0)
    d2a2 = np.gradient(a.values[:, :, 1], h, axis=1)
    return ScalarField(a.domain, d1a1 + d2a2)


def integrate(values, mask, h):
    """Masked composite quadrature with uniform node weight h^2."""
    return float(np.sum(np.asarray(values)[mask]) * h * h)


def norm_l2(f: ScalarField, mask=None):
    m = f.mask if mask is None else mask
    return math.sqrt(integrate(f.values**2, m, f.domain.h))


def norm_h1_seminorm(f: ScalarField, mask=None):
    """L2 norm of |grad f| by centered differences."""
    gx, gy = gradient_of(f)
    m = f.mask if mask is None else mask
    return math.sqrt(integrate(gx**2 + gy**2, m, f.domain.h))
