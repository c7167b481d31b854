import numpy as np
import pytest

from maglab.fields import Domain, ScalarField, VectorField
from maglab.io import (read_mcf1, read_scalar_csv, read_vector_csv,
                       write_mcf1, write_scalar_csv, write_vector_csv)


def test_mcf1_roundtrip_multilayer(tmp_path):
    path = tmp_path / "state.mcf1"
    rng = np.random.default_rng(0)
    layers = [rng.standard_normal((5, 7)) for _ in range(4)]
    bbox = (0.0, 1.0, -0.5, 0.5)
    write_mcf1(path, bbox, layers)
    got_bbox, got = read_mcf1(path)
    assert np.allclose(got_bbox, bbox)
    assert len(got) == 4
    for a, b in zip(layers, got):
        assert np.array_equal(a, b)


def test_mcf1_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + bytes(28) + bytes(8))
    with pytest.raises(ValueError):
        read_mcf1(path)


def test_mcf1_rejects_mixed_shapes(tmp_path):
    with pytest.raises(ValueError):
        write_mcf1(tmp_path / "x.mcf1", (0, 1, 0, 1),
                   [np.zeros((3, 3)), np.zeros((4, 3))])


def test_scalar_csv_roundtrip(tmp_path):
    dom = Domain.square(1.0, h=1 / 8)
    f = ScalarField.from_function(dom, lambda X, Y: X + 2 * Y)
    path = tmp_path / "f.csv"
    write_scalar_csv(path, f)
    g = read_scalar_csv(path, dom)
    assert np.allclose(f.values, g.values)


def test_vector_csv_roundtrip(tmp_path):
    dom = Domain.square(1.0, h=1 / 8)
    a = VectorField.from_function(dom, lambda X, Y: (-Y, X))
    path = tmp_path / "a.csv"
    write_vector_csv(path, a)
    b = read_vector_csv(path, dom)
    assert np.allclose(a.values, b.values)
