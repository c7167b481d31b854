"""Square cell decompositions: centers (l*m, l*n) whose open square of side l
lies inside the domain, their count and the coverage defect."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import Cell, Domain


@dataclass(frozen=True)
class CellLattice:
    ell: float
    centers: tuple  # of (x, y)
    domain: Domain

    @property
    def count(self):
        return len(self.centers)

    def cells(self):
        return [Cell(center=c, size=self.ell, shape="square") for c in self.centers]


def _square_inside(domain: Domain, cx, cy, half):
    """Exact test: open square of halfwidth `half` centered at (cx, cy) is a
    subset of the open domain (closure may touch the boundary)."""
    if domain.kind == "square":
        x0, x1, y0, y1 = domain.rect
        tol = 1e-12 * max(1.0, abs(x1), abs(y1))
        return (cx - half >= x0 - tol and cx + half <= x1 + tol
                and cy - half >= y0 - tol and cy + half <= y1 + tol)
    ox, oy = domain.center
    # farthest corner must be inside the outer disk
    corner = math.hypot(abs(cx - ox) + half, abs(cy - oy) + half)
    tol = 1e-12 * domain.radius
    if corner > domain.radius + tol:
        return False
    for hx, hy, hr in domain.holes:
        # nearest point of the closed square to the hole center
        dx = max(abs(cx - hx) - half, 0.0)
        dy = max(abs(cy - hy) - half, 0.0)
        if math.hypot(dx, dy) < hr - tol:
            return False
    return True


def build_lattice(domain: Domain, ell) -> CellLattice:
    """Centers (l*m, l*n), m, n integers, with Q_l(center) inside the domain."""
    if ell <= 0:
        raise ValueError("cell side must be positive")
    x0, x1, y0, y1 = domain.bbox
    half = ell / 2.0
    m0 = int(math.floor(x0 / ell)) - 1
    m1 = int(math.ceil(x1 / ell)) + 1
    n0 = int(math.floor(y0 / ell)) - 1
    n1 = int(math.ceil(y1 / ell)) + 1
    centers = []
    for m in range(m0, m1 + 1):
        for n in range(n0, n1 + 1):
            cx, cy = ell * m, ell * n
            if _square_inside(domain, cx, cy, half):
                centers.append((cx, cy))
    return CellLattice(ell=float(ell), centers=tuple(centers), domain=domain)


def coverage_defect(lattice: CellLattice):
    """|Omega| - N(l) l^2: the area missed by the cell decomposition."""
    return lattice.domain.area - lattice.count * lattice.ell**2


def dump_csv(lattice: CellLattice, path):
    with open(path, "w") as fh:
        fh.write("m,n,cx,cy\n")
        for cx, cy in lattice.centers:
            m = int(round(cx / lattice.ell))
            n = int(round(cy / lattice.ell))
            fh.write(f"{m},{n},{cx!r},{cy!r}\n")
