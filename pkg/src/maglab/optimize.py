"""Barzilai-Borwein descent for energies of complex grid functions.

The energy callback returns (E, g) with g = dE/d(conj u) (Wirtinger), so the
steepest-descent direction is -2g.  Steps use the BB1 rule with backtracking
whenever the energy increases.
"""

from __future__ import annotations

import numpy as np


class DescentError(RuntimeError):
    def __init__(self, message, u=None, energy=None, info=None):
        super().__init__(message)
        self.u = u
        self.energy = energy
        self.info = info or {}


def _inner(a, b):
    return float(np.real(np.vdot(a, b)))


def minimize_bb(energy_grad, u0, grad_tol, max_iter=20000, free=None,
                step0=None, energy_tol=None, energy_window=20,
                raise_on_failure=True, precond=None):
    """Minimize E(u); stop when ||2g||_2 <= grad_tol, or (optionally) when
    the relative energy change over `energy_window` iterations drops below
    `energy_tol`.  `free` masks the updated nodes; others stay fixed.

    `precond` is a positive operator applied to the descent direction
    (u <- u - 2 alpha P g): either a positive diagonal array, or a pair
    (apply, inv_apply) of linear callables.  For grid energies pass the
    inverse quadrature weights so the flow rate is mesh-independent.  The
    BB1 coefficient uses the matching metric <s, P^-1 s> / <s, y>."""
    u = np.array(u0, dtype=complex)
    if free is None:
        free = np.ones(u.shape, dtype=bool)
    if precond is None:
        papply = pinv = lambda x: x
    elif isinstance(precond, tuple):
        papply, pinv = precond
    else:
        P = np.asarray(precond)
        papply = lambda x: P * x
        pinv = lambda x: x / P
    e, g = energy_grad(u)
    g = np.where(free, g, 0.0)
    gnorm = 2.0 * np.linalg.norm(g)
    if step0 is None:
        pg = 2.0 * np.linalg.norm(papply(g))
        step0 = 0.1 / max(pg / max(np.linalg.norm(u), 1.0), 1e-30)
        step0 = min(step0, 1.0)
    alpha = step0
    u_prev = None
    g_prev = None
    e_hist = [e]
    it = 0
    while it < max_iter and gnorm > grad_tol:
        it += 1
        if u_prev is not None:
            s = u - u_prev
            y = g - g_prev
            sy = _inner(s, y)
            ss = _inner(s, pinv(s))
            if sy > 1e-300 and ss > 0.0:
                alpha = min(ss / sy, 1e6)
            else:
                # degenerate curvature (step below gradient resolution):
                # grow the step so the iteration cannot freeze
                alpha = min(2.0 * alpha, 1e6)
        # nonmonotone Armijo backtracking: compare against the worst recent
        # energy, with a small slope term so equal-energy cycles cannot
        # persist
        pg = papply(g)
        slope = 4.0 * _inner(g, pg)
        e_ref = max(e_hist[-10:])
        trial_alpha = alpha
        for _ in range(40):
            u_new = u - (2.0 * trial_alpha) * pg
            u_new = np.where(free, u_new, u)
            e_new, g_new = energy_grad(u_new)
            if e_new <= e_ref - 1e-4 * trial_alpha * slope:
                break
            if trial_alpha * slope <= 1e-13 * abs(e_ref):
                # the demanded decrease is below energy resolution: the
                # line search cannot make progress, stop backtracking
                break
            trial_alpha *= 0.5
        else:
            trial_alpha = 0.0
        if trial_alpha * slope <= 1e-13 * abs(e_ref):
            # machine-flat energy landscape along the search direction:
            # further iterations only burn evaluations
            stalled = energy_tol is not None
            if e_new <= e_ref:
                u, e, g = u_new, e_new, np.where(free, g_new, 0.0)
                gnorm = 2.0 * np.linalg.norm(g)
                e_hist.append(e)
            break
        u_prev, g_prev = u, g
        u, e = u_new, e_new
        g = np.where(free, g_new, 0.0)
        gnorm = 2.0 * np.linalg.norm(g)
        e_hist.append(e)
        if energy_tol is not None and len(e_hist) > energy_window:
            de = abs(e_hist[-1 - energy_window] - e)
            if de <= energy_tol * (abs(e) + 1.0):
                stalled = True
                break
    else:
        stalled = False
    converged = gnorm <= grad_tol or (energy_tol is not None and stalled)
    info = {"iterations": it, "grad_norm": gnorm, "energy": e,
            "converged": converged}
    if not converged:
        if raise_on_failure:
            raise DescentError("descent did not converge", u=u, energy=e,
                               info=info)
    return u, e, info
