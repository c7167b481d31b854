"""Field I/O: CSV interchange and the compact MCF1 binary format.

MCF1 record: 32-byte header (magic ``MCF1``, uint32 nx, uint32 ny, four
float32 bounds x_min, x_max, y_min, y_max, 4 pad bytes), followed by
nx * ny little-endian float64 values in row-major (x-fastest-last) order.
A file may hold several consecutive records (e.g. the layers of a state
snapshot)."""

from __future__ import annotations

import struct

import numpy as np

from .fields import Domain, ScalarField, VectorField

_HEADER = struct.Struct("<4sII4f4x")
MAGIC = b"MCF1"


def write_mcf1(path, bbox, layers):
    layers = [np.ascontiguousarray(l, dtype="<f8") for l in layers]
    nx, ny = layers[0].shape
    with open(path, "wb") as fh:
        for layer in layers:
            if layer.shape != (nx, ny):
                raise ValueError("all layers must share one grid shape")
            fh.write(_HEADER.pack(MAGIC, nx, ny, *map(float, bbox)))
            fh.write(layer.tobytes())


def read_mcf1(path):
    """Returns (bbox, [layer arrays])."""
    layers = []
    bbox = None
    with open(path, "rb") as fh:
        while True:
            head = fh.read(_HEADER.size)
            if not head:
                break
            magic, nx, ny, x0, x1, y0, y1 = _HEADER.unpack(head)
            if magic != MAGIC:
                raise ValueError("not an MCF1 file")
            bbox = (x0, x1, y0, y1)
            data = np.frombuffer(fh.read(8 * nx * ny), dtype="<f8")
            layers.append(data.reshape(nx, ny).copy())
    return bbox, layers


def write_scalar_csv(path, field: ScalarField):
    X, Y = field.domain.meshgrid()
    data = np.column_stack([X.ravel(), Y.ravel(), field.values.ravel()])
    np.savetxt(path, data, delimiter=",", header="x,y,value", comments="")


def write_vector_csv(path, field: VectorField):
    X, Y = field.domain.meshgrid()
    v = field.values
    data = np.column_stack([X.ravel(), Y.ravel(),
                            v[:, :, 0].ravel(), v[:, :, 1].ravel()])
    np.savetxt(path, data, delimiter=",", header="x,y,ax,ay", comments="")


def read_scalar_csv(path, domain: Domain) -> ScalarField:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    vals = data[:, 2].reshape(domain.nx, domain.ny)
    return ScalarField(domain, vals)


def read_vector_csv(path, domain: Domain) -> VectorField:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    vals = np.stack([data[:, 2].reshape(domain.nx, domain.ny),
                     data[:, 3].reshape(domain.nx, domain.ny)], axis=-1)
    return VectorField(domain, vals)
