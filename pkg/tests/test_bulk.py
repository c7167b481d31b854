import numpy as np
import pytest

from maglab.bulk import (BulkTable, ReducedGLProblem, build_bulk_table,
                         estimate_g, g_interpolant, minimize_reduced,
                         reduced_energy)


def test_problem_validations():
    with pytest.raises(ValueError):
        ReducedGLProblem(b=-0.1, R=4.0)
    with pytest.raises(ValueError):
        ReducedGLProblem(b=0.5, R=0.0)
    with pytest.raises(ValueError):
        ReducedGLProblem(b=0.5, R=4.0, boundary="robin")


def test_constant_state_zero_field_energy_exact():
    # u = 1, b = 0: no kinetic term, E = |Q_R| (-1 + 1/2) = -R^2/2 exactly
    prob = ReducedGLProblem(b=0.0, R=3.0, boundary="natural", h=1 / 8)
    e = reduced_energy(np.ones(prob.X.shape), prob)
    assert abs(e - (-0.5 * 3.0**2)) < 1e-12


def test_constant_state_unit_field_energy():
    # u = 1, b = 1 on the unit square: the covariant energy of the constant
    # state is int |A0|^2 = int (x^2 + y^2)/4 = 1/24, up to O(h^2) from the
    # link-phase midpoint rule, so E -> 1/24 - 1/2
    prob = ReducedGLProblem(b=1.0, R=1.0, boundary="natural", h=1 / 64)
    e = reduced_energy(np.ones(prob.X.shape), prob)
    assert abs(e - (1.0 / 24.0 - 0.5)) < 1e-4


def test_reduced_energy_shape_check():
    prob = ReducedGLProblem(b=0.0, R=2.0, h=1 / 4)
    with pytest.raises(ValueError):
        reduced_energy(np.ones((3, 3)), prob)


def test_dirichlet_zero_field_ground_state():
    # at b = 0 the nodes decouple, so the discrete Dirichlet minimum is
    # exactly -1/2 times the interior quadrature weight: -R^2 (1 - 1/n)^2 / 2
    prob = ReducedGLProblem(b=0.0, R=4.0, boundary="dirichlet")
    e, u, info = minimize_reduced(prob, tol=1e-6, energy_tol=1e-9)
    exact = -0.5 * 16.0 * (1.0 - 1.0 / prob.n) ** 2
    assert info["converged"]
    assert abs(e - exact) < 1e-9
    assert info["amp_max"] <= 1.0 + 1e-9


def test_supercritical_field_minimizer_vanishes():
    # b >= 1: the normal state u = 0 is the minimizer
    prob = ReducedGLProblem(b=1.2, R=4.0, boundary="dirichlet")
    e, u, info = minimize_reduced(prob, tol=1e-7, energy_tol=1e-12)
    assert abs(e) < 1e-8
    assert info["amp_max"] < 1e-3


def test_estimate_g_supercritical_is_zero():
    table = BulkTable()
    g, cert = estimate_g(1.0, R_list=(2.0, 3.0), h=1 / 8, tol=2.0,
                         table=table)
    assert g == 0.0
    assert cert["bracket_lo"] - 1e-12 <= 0.0 <= cert["bracket_hi"] + 1e-12
    assert len(table.records) == 4  # two sides x two boundary types
    assert len(table.summaries) == 1


def test_estimate_g_needs_two_sides():
    with pytest.raises(ValueError):
        estimate_g(0.5, R_list=(4.0,))


def test_g_interpolant_anchors_and_monotonicity():
    g = g_interpolant([0.25, 0.5, 0.75], [-0.35, -0.12, -0.03])
    assert g(0.0) == -0.5
    assert g(1.0) == 0.0
    assert g(2.0) == 0.0  # clamped above 1
    assert g(-1.0) == -0.5  # clamped below 0
    bs = np.linspace(0.0, 1.0, 101)
    vals = g(bs)
    assert np.all(np.diff(vals) >= -1e-12)
    assert np.all(vals >= -0.5) and np.all(vals <= 0.0)


def test_g_interpolant_rejects_unsorted_nodes():
    with pytest.raises(ValueError):
        g_interpolant([0.5, 0.25], [-0.1, -0.3])


def test_g_interpolant_from_table():
    table = BulkTable()
    table.summaries = [{"b": 0.5, "g_est": -0.11}]
    g = g_interpolant(table)
    assert abs(g(0.5) - (-0.11)) < 1e-12


def test_bulk_table_csv_and_json_roundtrip(tmp_path):
    table = BulkTable()
    table.add(0.5, 4.0, "dirichlet", -1.23, 1e-7, 321)
    table.summaries.append({"b": 0.5, "g_est": -0.11, "bracket_lo": -0.2,
                            "bracket_hi": -0.05, "C_emp": 0.6})
    csv_path = tmp_path / "table.csv"
    json_path = tmp_path / "table.json"
    table.to_csv(csv_path)
    table.summary_to_json(json_path)
    import csv as csvmod
    import json as jsonmod
    with open(csv_path) as fh:
        rows = list(csvmod.DictReader(fh))
    assert len(rows) == 1 and float(rows[0]["energy"]) == -1.23
    with open(json_path) as fh:
        summ = jsonmod.load(fh)
    assert summ[0]["g_est"] == -0.11


def test_build_bulk_table_tiny_grid():
    # a deliberately coarse, fast sweep just to exercise the sweep plumbing
    table = build_bulk_table(b_grid=[1.0], R_list=(2.0, 3.0), h=1 / 8,
                             tol=2.0)
    bs, gs = table.g_nodes()
    assert list(bs) == [1.0]
    assert gs[0] == 0.0
