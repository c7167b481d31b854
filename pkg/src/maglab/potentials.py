"""Magnetic potentials built from a grid-sampled field, cell averaging,
the averaging-gap inequalities, essential infimum and gauge functions."""

from __future__ import annotations

import math

import numpy as np

from .fields import (Cell, Domain, ScalarField, VectorField, curl_of,
                     gradient_of, integrate)


def canonical_potential(x):
    """The linear potential with unit curl: x -> (-x2/2, x1/2)."""
    x = np.asarray(x, dtype=float)
    return np.stack([-0.5 * x[..., 1], 0.5 * x[..., 0]], axis=-1)


def _a0(X, Y):
    return np.stack(np.broadcast_arrays(-0.5 * Y, 0.5 * X), axis=-1)


def ray_weight(B: ScalarField, X, Y, x0, rtol=1e-8, n0=64, nmax=1024):
    """2 * int_0^1 s B(x0 + s(P - x0)) ds by composite Simpson.

    The node count doubles from n0 until the relative change drops below
    rtol.  Sample points must stay inside the field's bounding box.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    x0 = np.asarray(x0, dtype=float)

    shape = np.broadcast_shapes(X.shape, Y.shape)
    Xf = np.broadcast_to(X, shape).ravel()
    Yf = np.broadcast_to(Y, shape).ravel()

    def sample(s):
        # one stacked interpolation over all (ray sample, target) pairs
        px = x0[0] + s[:, None] * (Xf - x0[0])[None, :]
        py = x0[1] + s[:, None] * (Yf - x0[1])[None, :]
        return B.interp(px, py)

    def integrate(n, vals):
        s = np.linspace(0.0, 1.0, n + 1)
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= 1.0 / (3.0 * n)
        return (2.0 * (w * s) @ vals).reshape(shape)

    n = n0
    vals = sample(np.linspace(0.0, 1.0, n + 1))
    prev = integrate(n, vals)
    while n < nmax:
        n *= 2
        # the even nodes of the refined rule are the previous nodes; only
        # the new odd nodes need fresh field samples
        fine = np.empty((n + 1, vals.shape[1]))
        fine[::2] = vals
        fine[1::2] = sample((2.0 * np.arange(n // 2) + 1.0) / n)
        vals = fine
        cur = integrate(n, vals)
        scale = np.max(np.abs(cur)) + 1e-300
        if np.max(np.abs(cur - prev)) <= rtol * scale:
            return cur
        prev = cur
    return prev


def potential_from_field(B: ScalarField) -> VectorField:
    """A(x) = 2 int_0^1 B(sx) A0(sx) ds, evaluated at every grid node."""
    X, Y = B.domain.meshgrid()
    w = ray_weight(B, X, Y, (0.0, 0.0))
    return VectorField(B.domain, w[..., None] * _a0(X, Y))


def recentered_potential_at(B: ScalarField, cell: Cell, X, Y):
    """Values of the cell-recentered potential at arbitrary points."""
    cx, cy = cell.center
    w = ray_weight(B, X, Y, (cx, cy))
    return w[..., None] * _a0(np.asarray(X) - cx, np.asarray(Y) - cy)


def recentered_potential(B: ScalarField, cell: Cell) -> VectorField:
    X, Y = B.domain.meshgrid()
    return VectorField(B.domain, recentered_potential_at(B, cell, X, Y))


def _cell_quad_n(B: ScalarField, cell: Cell, n):
    if n is not None:
        return n
    return max(4, int(round(2 * cell.halfwidth / B.domain.h)))


def cell_average(B: ScalarField, cell: Cell, n=None):
    """(1/|U|) int_U B by composite midpoint quadrature."""
    n = _cell_quad_n(B, cell, n)
    X, Y, inside, _ = cell.midpoint_grid(n)
    if not inside.any():
        raise ValueError("cell does not intersect the sampled grid")
    return float(np.mean(B.interp(X[inside], Y[inside])))


def averaged_potential_at(b_av, cell: Cell, X, Y):
    cx, cy = cell.center
    return b_av * _a0(np.asarray(X, dtype=float) - cx, np.asarray(Y, dtype=float) - cy)


def averaged_potential(b_av, cell: Cell, domain: Domain) -> VectorField:
    """b_av * A0(x - x0): the potential of the constant averaged field."""
    X, Y = domain.meshgrid()
    return VectorField(domain, averaged_potential_at(b_av, cell, X, Y))


def grad_norm_sq_on_cell(B: ScalarField, cell: Cell, n=None):
    """int_U |grad B|^2 by midpoint quadrature of the centered-difference
    gradient."""
    n = _cell_quad_n(B, cell, n)
    gx, gy = gradient_of(B)
    gxf = ScalarField(B.domain, gx, mask=np.ones_like(gx, dtype=bool))
    gyf = ScalarField(B.domain, gy, mask=np.ones_like(gy, dtype=bool))
    X, Y, inside, dA = cell.midpoint_grid(n)
    vals = gxf.interp(X, Y) ** 2 + gyf.interp(X, Y) ** 2
    return float(np.sum(vals[inside]) * dA)


def _gap_terms(B: ScalarField, cell: Cell, n, rtol):
    """Shared lhs / oscillation quadrature of the averaging inequalities.

    Both the recentered and the averaged potential are scalar multiples of
    A0(x - x0), so the potential difference reduces to (w - b_av) A0(x - x0)
    with w the ray weight; only one ray integration is needed.
    """
    n = _cell_quad_n(B, cell, n)
    cx, cy = cell.center
    X, Y, inside, dA = cell.midpoint_grid(n)
    b_av = cell_average(B, cell, n=n)
    w = ray_weight(B, X, Y, (cx, cy), rtol=rtol)
    a0sq = 0.25 * ((X - cx) ** 2 + (Y - cy) ** 2)
    lhs = float(np.sum(((w - b_av) ** 2 * a0sq)[inside]) * dA)
    osc = float(np.sum((B.interp(X, Y) - b_av)[inside] ** 2) * dA)
    return lhs, osc, n


def averaging_gap(B: ScalarField, cell: Cell, n=None, rtol=1e-6):
    """(lhs, rhs) of the cell-averaging inequality:

    lhs = int_U |A_new - A_av|^2,  rhs = 8 diam(U)^4 ||grad B||_{L2(U)}^2.
    """
    lhs, _, n = _gap_terms(B, cell, n, rtol)
    rhs = 8.0 * cell.diameter**4 * grad_norm_sq_on_cell(B, cell, n=n)
    return lhs, rhs


def averaging_gap_sharp(B: ScalarField, cell: Cell, n=None, rtol=1e-6):
    """(lhs, rhs) for the sharper variant rhs = diam^2 int_U |B - B_av|^2."""
    lhs, osc, _ = _gap_terms(B, cell, n, rtol)
    return lhs, cell.diameter**2 * osc


def averaging_gap_both(B: ScalarField, cell: Cell, n=None, rtol=1e-6):
    """(lhs, rhs, rhs_sharp) with one shared quadrature pass."""
    lhs, osc, n = _gap_terms(B, cell, n, rtol)
    rhs = 8.0 * cell.diameter**4 * grad_norm_sq_on_cell(B, cell, n=n)
    return lhs, rhs, cell.diameter**2 * osc


def rescaled_field_gap(B: ScalarField, cell: Cell, s, n=None):
    """(lhs, rhs) with lhs = s^2 int_U |B(x0 + s(x-x0)) - B_av|^2 and
    rhs = 8 diam(U)^2 ||grad B||_{L2(U)}^2, for 0 < s < 1."""
    if not 0.0 < s < 1.0:
        raise ValueError("scaling factor must lie in (0, 1)")
    n = _cell_quad_n(B, cell, n)
    cx, cy = cell.center
    X, Y, inside, dA = cell.midpoint_grid(n)
    b_av = cell_average(B, cell, n=n)
    vals = B.interp(cx + s * (X - cx), cy + s * (Y - cy)) - b_av
    lhs = s * s * float(np.sum(vals[inside] ** 2) * dA)
    rhs = 8.0 * cell.diameter**2 * grad_norm_sq_on_cell(B, cell, n=n)
    return lhs, rhs


def ess_inf(B: ScalarField, domain: Domain = None, block=4, with_diagnostics=False):
    """Essential infimum surrogate: the minimum of block-averaged values on a
    sub-lattice of side `block * h`, which is stable against single-node
    outliers.  The raw node minimum is available as a diagnostic."""
    domain = B.domain if domain is None else domain
    mask = domain.mask
    if not mask.any():
        raise ValueError("empty domain mask")
    vals = B.values
    node_min = float(vals[mask].min())
    nx, ny = mask.shape
    mins = []
    for i0 in range(0, nx, block):
        for j0 in range(0, ny, block):
            m = mask[i0:i0 + block, j0:j0 + block]
            if m.any():
                mins.append(float(vals[i0:i0 + block, j0:j0 + block][m].mean()))
    m0 = min(mins)
    if with_diagnostics:
        return m0, node_min
    return m0


def _window_indices(domain: Domain, region):
    """Grid-index window [i0:i1, j0:j1] covering a Cell or a Domain region."""
    x0, _, y0, _ = domain.bbox
    h = domain.h
    if isinstance(region, Cell):
        cx, cy = region.center
        half = region.halfwidth
        i0 = max(0, int(math.floor((cx - half - x0) / h)))
        i1 = min(domain.nx, int(math.ceil((cx + half - x0) / h)) + 1)
        j0 = max(0, int(math.floor((cy - half - y0) / h)))
        j1 = min(domain.ny, int(math.ceil((cy + half - y0) / h)) + 1)
    else:
        mask = region.mask
        ii, jj = np.where(mask)
        i0, i1 = int(ii.min()), int(ii.max()) + 1
        j0, j1 = int(jj.min()), int(jj.max()) + 1
    return i0, i1, j0, j1


def gauge_function(A: VectorField, A_ref: VectorField, region,
                   curl_tol=0.05) -> ScalarField:
    """Scalar phi with grad phi ~ A_ref - A on the (simply connected) region.

    Computed by averaging the two L-shaped path integrals from the region
    center, followed by one Jacobi pass of the least-squares normal
    equations to suppress residual path dependence.  Raises when the
    discrete curl of A_ref - A is too large for the fields to be
    gauge-equivalent.
    """
    dom = A.domain
    h = dom.h
    i0, i1, j0, j1 = _window_indices(dom, region)
    G = (A_ref.values - A.values)[i0:i1, j0:j1]
    g1, g2 = G[:, :, 0], G[:, :, 1]

    curl = np.gradient(g2, h, axis=0) - np.gradient(g1, h, axis=1)
    area = curl.size * h * h
    curl_l2 = math.sqrt(float(np.sum(curl**2)) * h * h)
    g_l2 = math.sqrt(float(np.sum(G**2)) * h * h)
    diam = math.hypot((i1 - i0) * h, (j1 - j0) * h)
    # scale against both the difference field and the reference curl: the
    # node-gradient curl of either potential already carries an O(h^2)
    # discretization defect, which must not trip the equivalence check
    R = A_ref.values[i0:i1, j0:j1]
    curl_ref = np.gradient(R[:, :, 1], h, axis=0) \
        - np.gradient(R[:, :, 0], h, axis=1)
    curl_ref_l2 = math.sqrt(float(np.sum(curl_ref**2)) * h * h)
    scale = max(g_l2 / max(diam, h), curl_ref_l2)
    if curl_l2 > max(curl_tol * scale, 1e-12 * math.sqrt(area)):
        raise ValueError("fields not gauge-equivalent: discrete curl mismatch")

    ic = (i1 - i0 - 1) // 2
    jc = (j1 - j0 - 1) // 2

    def cumint(vals, axis, start):
        # cumulative trapezoid from index `start` along `axis`
        v = np.moveaxis(vals, axis, 0)
        out = np.zeros_like(v)
        steps = 0.5 * h * (v[1:] + v[:-1])
        out[1:] = np.cumsum(steps, axis=0)
        out -= out[start]
        return np.moveaxis(out, axis, 0)

    # x-then-y path
    row = cumint(g1[:, jc:jc + 1], 0, ic)
    phi_xy = row + cumint(g2, 1, jc)
    # y-then-x path
    col = cumint(g2[ic:ic + 1, :], 1, jc)
    phi_yx = col + cumint(g1, 0, ic)
    phi = 0.5 * (phi_xy + phi_yx)

    # one Jacobi pass of  lap phi = div G  on interior nodes
    div = np.gradient(g1, h, axis=0) + np.gradient(g2, h, axis=1)
    interior = phi.copy()
    interior[1:-1, 1:-1] = 0.25 * (phi[2:, 1:-1] + phi[:-2, 1:-1]
                                   + phi[1:-1, 2:] + phi[1:-1, :-2]
                                   - h * h * div[1:-1, 1:-1])
    phi = interior

    xw0 = dom.bbox[0] + i0 * h
    yw0 = dom.bbox[2] + j0 * h
    bbox = (xw0, xw0 + (i1 - i0 - 1) * h, yw0, yw0 + (j1 - j0 - 1) * h)
    window = Domain(kind="square", h=h, bbox=bbox, rect=bbox)
    return ScalarField(window, phi, mask=np.ones_like(phi, dtype=bool))


def averaged_field_table(B: ScalarField):
    """Summed-area table for O(1) axis-aligned square averages of B."""
    sat = np.zeros((B.domain.nx + 1, B.domain.ny + 1))
    sat[1:, 1:] = np.cumsum(np.cumsum(B.values, axis=0), axis=1)
    return sat


def slow_growth_check(B: ScalarField, zeta, ell_list):
    """sup over centers of |B_av over Q_ell| * ell^(2 zeta), per ell.

    Centers scan a half-cell lattice over the sampled box; averages use the
    grid nodes inside each square (summed-area table)."""
    if not 0.0 < zeta <= 0.5:
        raise ValueError("growth exponent must lie in (0, 1/2]")
    h = B.domain.h
    sat = averaged_field_table(B)
    nx, ny = B.domain.nx, B.domain.ny
    rows = []
    for ell in ell_list:
        k = max(1, int(round(ell / h)))  # nodes per cell side (approximate)
        step = max(1, k // 2)
        i0s = np.arange(0, nx - k + 1, step)
        j0s = np.arange(0, ny - k + 1, step)
        ii, jj = np.meshgrid(i0s, j0s, indexing="ij")
        sums = (sat[ii + k, jj + k] - sat[ii, jj + k]
                - sat[ii + k, jj] + sat[ii, jj])
        sup_av = float(np.max(np.abs(sums))) / (k * k)
        rows.append({"ell": float(ell), "sup_abs_average": sup_av,
                     "scaled": sup_av * float(ell) ** (2 * zeta)})
    return rows
