"""Reduced constant-field Ginzburg-Landau problem on centered squares:
the per-square ground-state energies for Dirichlet and natural boundary
conditions, and the per-area bulk energy g(b) extracted from their large-R
behavior."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import kinetic_energy_grad
from .optimize import DescentError, minimize_bb


def default_h(R):
    return min(1.0 / 16.0, R / 256.0)


@dataclass
class ReducedGLProblem:
    """Energy b|grad_A0 u|^2 - |u|^2 + |u|^4/2 on Q_R = (-R/2, R/2)^2."""

    b: float
    R: float
    boundary: str = "dirichlet"
    h: float = None

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("reduced field must be nonnegative")
        if self.R <= 0:
            raise ValueError("square side must be positive")
        if self.boundary not in ("dirichlet", "natural"):
            raise ValueError(f"unknown boundary type {self.boundary!r}")
        if self.h is None:
            self.h = default_h(self.R)
        self.n = int(round(self.R / self.h))
        self.h = self.R / self.n  # snap so the boundary lands on nodes
        t = -self.R / 2 + self.h * np.arange(self.n + 1)
        self.X, self.Y = np.meshgrid(t, t, indexing="ij")
        # link phases of A0 = (-y/2, x/2) at unit coupling, midpoint rule
        my = 0.5 * (self.Y[1:, :] + self.Y[:-1, :])
        mx = 0.5 * (self.X[:, 1:] + self.X[:, :-1])
        self.px = np.ascontiguousarray(np.exp(-1j * self.h * (-0.5 * my)))
        self.py = np.ascontiguousarray(np.exp(-1j * self.h * (0.5 * mx)))
        # trapezoid weights: transverse for edges, tensor-product for nodes
        t1 = np.ones(self.n + 1)
        t1[0] = t1[-1] = 0.5
        self.wx = np.ascontiguousarray(np.broadcast_to(t1, (self.n, self.n + 1)).copy())
        self.wy = np.ascontiguousarray(np.broadcast_to(t1[:, None], (self.n + 1, self.n)).copy())
        self.w2 = np.outer(t1, t1) * self.h**2
        if self.boundary == "dirichlet":
            self.free = np.zeros((self.n + 1, self.n + 1), dtype=bool)
            self.free[1:-1, 1:-1] = True
        else:
            self.free = np.ones((self.n + 1, self.n + 1), dtype=bool)

    def energy_grad(self, u):
        """(E, dE/d(conj u)) for the discrete reduced energy."""
        kin, gkin = kinetic_energy_grad(np.ascontiguousarray(u), self.px,
                                        self.py, self.wx, self.wy)
        usq = u.real**2 + u.imag**2
        pot = float(np.sum(self.w2 * (-usq + 0.5 * usq**2)))
        grad = self.b * gkin + self.w2 * (usq - 1.0) * u
        return self.b * kin + pot, grad

    def energy(self, u):
        return self.energy_grad(np.asarray(u, dtype=complex))[0]


def reduced_energy(u, problem: ReducedGLProblem):
    """Discrete covariant energy of u on the problem grid."""
    u = np.asarray(u, dtype=complex)
    if u.shape != problem.X.shape:
        raise ValueError("state does not match the problem grid")
    if problem.boundary == "dirichlet":
        u = np.where(problem.free, u, 0.0)
    return problem.energy(u)


def _reduced_precond(problem: ReducedGLProblem, m=1.0):
    """Inverse-Helmholtz preconditioner pair for the reduced energy.

    The Hessian is approximately w2 (b (-Lap) + m) with m the O(1) scale of
    the potential curvature; inverting the plain (non-magnetic) Laplacian by
    a fast sine/cosine transform flattens the b/h^2 condition number.  The
    transforms match the boundary type: DST-I on interior nodes (Dirichlet)
    and DCT-I on all nodes (natural / free ends)."""
    from scipy import fft as sfft
    n, h, b = problem.n, problem.h, problem.b
    if problem.boundary == "dirichlet":
        k = np.arange(1, n)
        lam = (4.0 / h**2) * np.sin(np.pi * k / (2 * n)) ** 2
        den = b * (lam[:, None] + lam[None, :]) + m

        def solve(x, power):
            y = np.zeros_like(x)
            t = sfft.dstn(x[1:-1, 1:-1], type=1, norm="ortho")
            y[1:-1, 1:-1] = sfft.idstn(t * den**power, type=1, norm="ortho")
            return y
    else:
        k = np.arange(n + 1)
        lam = (4.0 / h**2) * np.sin(np.pi * k / (2 * n)) ** 2
        den = b * (lam[:, None] + lam[None, :]) + m

        def solve(x, power):
            t = sfft.dctn(x, type=1, norm="ortho")
            return sfft.idctn(t * den**power, type=1, norm="ortho")

    # symmetrize with the square-rooted quadrature weights so both maps are
    # positive definite (w2 and the transform do not commute)
    q = 1.0 / np.sqrt(problem.w2)
    papply = lambda x: q * solve(q * x, -1)
    pinv = lambda x: (1.0 / q) * solve(x / q, 1)
    return papply, pinv


def _seeds(problem: ReducedGLProblem):
    X, Y = problem.X, problem.Y
    R = problem.R
    ones = np.ones(X.shape, dtype=complex)
    blob = np.exp(-(X**2 + Y**2) / (R / 4.0) ** 2).astype(complex)
    # vortex-lattice ansatz: one unit of winding per 2 pi of flux of the
    # unit field, placed on a triangular lattice (product of z/|z| factors
    # with a tanh-like core profile)
    a = math.sqrt(4.0 * math.pi / math.sqrt(3.0))
    lattice = np.ones(X.shape, dtype=complex)
    ny = int(math.ceil(R / (a * math.sqrt(3.0) / 2.0)))
    nx = int(math.ceil(R / a))
    for j in range(-ny, ny + 1):
        py = j * a * math.sqrt(3.0) / 2.0
        if abs(py) > R / 2.0 + a:
            continue
        off = 0.5 * a if j % 2 else 0.0
        for i in range(-nx, nx + 1):
            px = i * a + off
            if abs(px) > R / 2.0 + a:
                continue
            z = (X - px) + 1j * (Y - py)
            lattice *= z / np.sqrt(np.abs(z) ** 2 + 0.5)
    return [ones, blob, lattice]


def minimize_reduced(problem: ReducedGLProblem, tol=1e-6, max_iter=20000,
                     energy_tol=None, raise_on_failure=True,
                     warm_start=None, default_seeds=True):
    """(energy, minimizer, info): best over the deterministic restarts.

    Stops on the gradient norm; energy_tol additionally accepts relative
    energy stagnation over 50 iterations (cheaper, for table sweeps where
    only the energy is consumed).  `warm_start` prepends a previous
    minimizer as an extra restart; `default_seeds=False` drops the three
    cold seeds (continuation sweeps where the warm start tracks the branch).
    The amplitude bound |u| <= 1 is checked, never enforced; a violation
    beyond 1e-6 indicates a solver bug."""
    grad_tol = tol * (1.0 + problem.R)
    precond = _reduced_precond(problem)
    seeds = []
    if warm_start is not None:
        w = np.asarray(warm_start, dtype=complex)
        if w.shape != problem.X.shape:
            raise ValueError("warm start does not match the problem grid")
        if float(np.max(np.abs(w))) > 1e-8:  # u = 0 is a critical point
            seeds.append(w)
    if default_seeds or not seeds:
        seeds.extend(_seeds(problem))
    def run(seed_list):
        best = None
        for seed in seed_list:
            u0 = np.where(problem.free, seed, 0.0) \
                if problem.boundary == "dirichlet" else seed
            u, e, info = minimize_bb(problem.energy_grad, u0, grad_tol,
                                     max_iter=max_iter, free=problem.free,
                                     precond=precond,
                                     energy_tol=energy_tol, energy_window=50,
                                     raise_on_failure=False)
            if best is None or e < best[0]:
                best = (e, u, info)
        return best

    best = run(seeds)
    if not best[2]["converged"] and not default_seeds:
        # a warm start that tracked the branch into a stiff spot; fall back
        # to the cold restarts before giving up
        retry = run(_seeds(problem))
        if retry[2]["converged"] and retry[0] <= best[0] + abs(best[0]) * 1e-6:
            best = retry
    e, u, info = best
    # a losing restart may stall on a plateau (wandering vortex) without
    # harm; only a non-converged winner makes the minimum untrustworthy
    if raise_on_failure and not info["converged"]:
        raise DescentError("reduced minimization did not converge", u=u,
                           energy=e, info=info)
    info = dict(info)
    info["amp_max"] = float(np.max(np.abs(u)))
    return e, u, info


@dataclass
class BulkTable:
    """Rows (b, R, boundary, energy, grad_norm, iters) plus g estimates."""

    records: list = field(default_factory=list)
    summaries: list = field(default_factory=list)

    def add(self, b, R, boundary, energy, grad_norm, iters, amp=0.0,
            converged=True):
        self.records.append({"b": b, "R": R, "boundary": boundary,
                             "energy": energy, "grad_norm": grad_norm,
                             "iters": iters, "amp": amp,
                             "converged": converged})

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["b", "R", "boundary", "energy",
                                               "grad_norm", "iters", "amp",
                                               "converged"])
            w.writeheader()
            w.writerows(self.records)

    def summary_to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summaries, fh, indent=1)

    def g_nodes(self):
        rows = sorted(self.summaries, key=lambda s: s["b"])
        bs = [s["b"] for s in rows]
        gs = [s["g_est"] for s in rows]
        return np.asarray(bs), np.asarray(gs)


def estimate_g(b, R_list=(4.0, 6.0, 8.0, 12.0, 16.0), tol=0.25, h=None,
               min_tol=1e-6, energy_tol=1e-9, table: BulkTable = None,
               warm: dict = None):
    """Bulk energy per area at reduced field b.

    Runs both boundary types along R_list; the Dirichlet sequence m0/R^2
    upper-bounds g and the natural sequence lower-bounds it, both within
    C/R.  Returns (g_est, certificate) with certificate the interval
    [m0/R^2 - C_emp/R, m0/R^2] at R = max(R_list) and C_emp fitted from
    successive Dirichlet differences."""
    R_list = sorted(float(R) for R in R_list)
    if len(R_list) < 2:
        raise ValueError("need at least two square sides to fit C")
    m0_per, m_per = {}, {}
    for R in R_list:
        for boundary in ("dirichlet", "natural"):
            hR = h(R) if callable(h) else h
            prob = ReducedGLProblem(b=b, R=R, boundary=boundary, h=hR)
            ws = warm.get((R, boundary)) if warm is not None else None
            # near the onset b ~ 1 the Hessian is nearly singular and the
            # descent can stall below tolerance on an energy scale that is
            # immaterial at the bracket width; record best effort instead
            # of aborting the sweep
            e, u, info = minimize_reduced(prob, tol=min_tol,
                                          energy_tol=energy_tol,
                                          warm_start=ws,
                                          default_seeds=ws is None,
                                          raise_on_failure=False)
            if warm is not None:
                warm[(R, boundary)] = u
            (m0_per if boundary == "dirichlet" else m_per)[R] = e / R**2
            if table is not None:
                table.add(b, R, boundary, e, info["grad_norm"],
                          info["iterations"], amp=info["amp_max"],
                          converged=info["converged"])
    Rmax = R_list[-1]
    diffs = []
    for Ra, Rb in zip(R_list[:-1], R_list[1:]):
        d = abs(m0_per[Rb] - m0_per[Ra])
        diffs.append(d / (1.0 / Ra - 1.0 / Rb))
    C_emp = max(diffs)
    width = C_emp / Rmax
    if width > tol:
        raise RuntimeError("g bracket wider than requested tolerance: "
                           "increase R_max")
    g_est = 0.5 * (m0_per[Rmax] + m_per[Rmax])
    if b >= 1.0:
        # the free-boundary value carries an O(1/R) surface-state energy
        # that vanishes only in the limit; the Dirichlet value is 0 exactly
        g_est = m0_per[Rmax]
    g_est = min(0.0, max(-0.5, g_est))
    if abs(g_est) < 1e-6:
        g_est = 0.0
    certificate = {"b": b, "g_est": g_est, "R_max": Rmax, "C_emp": C_emp,
                   "bracket_lo": m0_per[Rmax] - width,
                   "bracket_hi": m0_per[Rmax],
                   "m0_per_area": m0_per, "m_per_area": m_per}
    if table is not None:
        table.summaries.append({"b": b, "g_est": g_est,
                                "bracket_lo": certificate["bracket_lo"],
                                "bracket_hi": certificate["bracket_hi"],
                                "C_emp": C_emp})
    return g_est, certificate


def g_interpolant(nodes_b, nodes_g=None):
    """Piecewise-linear b -> g(b), clamped to -1/2 below 0 and 0 above 1.

    Accepts a BulkTable or two arrays of table nodes; the exact anchors
    g(0) = -1/2 and g(1) = 0 are always inserted, and monotonicity is
    enforced by a running maximum (table noise suppression)."""
    if isinstance(nodes_b, BulkTable):
        nodes_b, nodes_g = nodes_b.g_nodes()
    bs = np.asarray(nodes_b, dtype=float)
    gs = np.asarray(nodes_g, dtype=float)
    if bs.size and np.any(np.diff(bs) < 0):
        raise ValueError("table nodes must be sorted by b")
    keep = (bs > 1e-12) & (bs < 1.0 - 1e-12)
    bs = np.concatenate([[0.0], bs[keep], [1.0]])
    gs = np.concatenate([[-0.5], gs[keep], [0.0]])
    gs = np.maximum.accumulate(np.clip(gs, -0.5, 0.0))

    def g(b):
        b = np.asarray(b, dtype=float)
        out = np.interp(np.clip(b, 0.0, 1.0), bs, gs)
        return out if out.ndim else float(out)

    return g


def build_bulk_table(b_grid=None, R_list=(4.0, 6.0, 8.0, 12.0, 16.0), h=None,
                     tol=0.25, energy_tol=1e-9, min_tol=1e-6):
    """Full g table over b_grid (default the 17-point grid on [0, 1]).

    Sweeps b downward with warm starts: the minimizer at each b seeds the
    next (smaller) b on the same (R, boundary) grid, so the vortex pattern
    deforms continuously along the branch instead of being re-found from
    cold seeds at every node."""
    if b_grid is None:
        b_grid = np.linspace(0.0, 1.0, 17)
    table = BulkTable()
    warm = {}
    for b in sorted((float(b) for b in b_grid), reverse=True):
        estimate_g(b, R_list=R_list, tol=tol, h=h, min_tol=min_tol,
                   energy_tol=energy_tol, table=table, warm=warm)
    return table
