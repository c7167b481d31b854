"""Pure-numpy reference implementation of the covariant kinetic kernels."""

import numpy as np


def kinetic_energy(u, px, py, wx, wy):
    vx = px * u[1:, :] - u[:-1, :]
    vy = py * u[:, 1:] - u[:, :-1]
    ex = np.sum(wx * (vx.real**2 + vx.imag**2))
    ey = np.sum(wy * (vy.real**2 + vy.imag**2))
    return ex + ey


def kinetic_energy_grad(u, px, py, wx, wy):
    vx = px * u[1:, :] - u[:-1, :]
    vy = py * u[:, 1:] - u[:, :-1]
    ex = np.sum(wx * (vx.real**2 + vx.imag**2))
    ey = np.sum(wy * (vy.real**2 + vy.imag**2))
    grad = np.zeros_like(u)
    wvx = wx * vx
    wvy = wy * vy
    grad[:-1, :] -= wvx
    grad[1:, :] += np.conj(px) * wvx
    grad[:, :-1] -= wvy
    grad[:, 1:] += np.conj(py) * wvy
    return ex + ey, grad


def bilinear_interp(v, fx, fy):
    """Bilinear interpolation at fractional grid indices (fx, fy).

    The caller guarantees the indices stay a strict margin below nx-1/ny-1,
    so the i+1/j+1 corner lookups are in range.
    """
    i = fx.astype(np.intp)
    j = fy.astype(np.intp)
    tx = fx - i
    ty = fy - j
    return ((1.0 - tx) * (1.0 - ty) * v[i, j]
            + tx * (1.0 - ty) * v[i + 1, j]
            + (1.0 - tx) * ty * v[i, j + 1]
            + tx * ty * v[i + 1, j + 1])
