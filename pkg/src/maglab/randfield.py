"""Seeded random trigonometric fields with slowly decaying Fourier modes.

Coefficients of mode k have magnitude (1 + |k|)^(-(1+eps)) times a standard
normal, so the field has a finite H^1 norm but modes decay slowly; an
additive offset can enforce a positive lower bound on the field.
"""

from __future__ import annotations

import numpy as np

from .fields import Domain, ScalarField


class RandomFourierField:
    def __init__(self, seed, kmax=32, eps=0.1, offset=0.0, amplitude=1.0):
        self.seed = int(seed)
        self.kmax = int(kmax)
        self.eps = float(eps)
        self.offset = float(offset)
        rng = np.random.default_rng(self.seed)
        k = np.arange(-self.kmax, self.kmax + 1)
        K1, K2 = np.meshgrid(k, k, indexing="ij")
        mag = (1.0 + np.hypot(K1, K2)) ** (-(1.0 + self.eps))
        re = rng.standard_normal(K1.shape)
        im = rng.standard_normal(K1.shape)
        self.k = k
        self.coeff = amplitude * mag * (re + 1j * im) / np.sqrt(2.0)

    def __call__(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        shape = np.broadcast_shapes(X.shape, Y.shape)
        Xf = np.broadcast_to(X, shape).ravel()
        Yf = np.broadcast_to(Y, shape).ravel()
        e1 = np.exp(1j * np.outer(Xf, self.k))
        e2 = np.exp(1j * np.outer(Yf, self.k))
        vals = np.einsum("pk,kl,pl->p", e1, self.coeff, e2,
                         optimize=True).real
        return vals.reshape(shape) + self.offset

    def sample(self, domain: Domain) -> ScalarField:
        X, Y = domain.meshgrid()
        return ScalarField(domain, self(X, Y))

    def with_lower_bound(self, domain: Domain, c, margin=0.05):
        """Copy shifted so that min over the domain grid is >= c + margin."""
        X, Y = domain.meshgrid()
        lo = float(self(X, Y).min())
        shifted = RandomFourierField.__new__(RandomFourierField)
        shifted.__dict__.update(self.__dict__)
        shifted.offset = self.offset + (c + margin - lo)
        return shifted
