from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tripartite import effective, phase_space as ps
from tripartite.bath import BathSpec
from tripartite.errors import ContractError


@pytest.fixture(scope="module")
def model():
    return effective.limit_coefficients(BathSpec())


@pytest.fixture(scope="module")
def weak():
    return effective.limit_coefficients(BathSpec(nu_bar=0.01))


def test_default_grid(model):
    g = ps.Grid.default_for(model)
    assert g.x.size == 401 and g.y.size == 401
    assert g.x[-1] == pytest.approx(4 * math.sqrt(model.N0))
    assert g.x[200] == 0.0
    with pytest.raises(ContractError):
        ps.Grid.square(1.0, 2)


def test_fock_field_normalization_and_bracket_average(model):
    fld = ps.field_fock1(model, 1000.0)
    assert fld.normalization() == pytest.approx(1.0, abs=1e-3)
    # Under the Gaussian weight the bracket averages to exactly 4.
    gauss = ps.field_gaussian(model, 0.0, ps.Thermal(), fld.grid)
    A = np.array(fld.metadata["A"])
    k = effective.kernel_at(model, 1000.0)
    g = ps._gaussian(fld.grid, (0.0, 0.0), A)
    ratio = ps.integrate_grid(fld.grid, 4 * fld.values) / ps.integrate_grid(fld.grid, g)
    assert ratio == pytest.approx(4.0, rel=1e-6)
    assert np.trace(k.propagator.T @ A @ k.propagator) == pytest.approx(fld.metadata["trace_Kh"])
    assert gauss.values.min() > 0


@pytest.mark.parametrize("k", [5, 10, 15, 20])
def test_fock_field_relaxes_to_steady_gaussian(model, k):
    # The kernel approaches its stationary value as exp(-t / tau_S), so the
    # sup-norm gap shrinks like exp(-k); it drops below 1e-6 only past ~15 tau_S.
    tau = effective.relaxation_time(model)
    fock = ps.field_fock1(model, k * tau)
    steady = ps.field_gaussian(model, 0.0, ps.Thermal(), fock.grid)
    gap = np.max(np.abs(fock.values - steady.values))
    assert gap < math.exp(-k) * steady.values.max()
    if k >= 15:
        assert gap < 1e-6


@pytest.mark.parametrize("t", [5.0, 30.0, 59.0, 60.0, 120.0])
def test_origin_sign_follows_trace(model, t):
    fld = ps.field_fock1(model, t, ps.Grid.square(2.0, 41))
    k = effective.kernel_at(model, t)
    trace = np.trace(k.propagator.T @ k.A @ k.propagator)
    centre = fld.values[20, 20]
    assert np.sign(centre) == np.sign(4 - trace)
    assert ps.origin_value_fock1(model, t) == pytest.approx(centre, rel=1e-12)


def test_fock_field_rejects_non_positive_time(model):
    with pytest.raises(ContractError):
        ps.field_fock1(model, 0.0)


def test_negativity_decays_at_weak_coupling(weak):
    masses = [ps.negativity_metrics(ps.field_fock1(weak, t))[1] for t in (200, 300, 400, 500, 1000)]
    assert masses[0] > 0 and masses[1] > 0
    assert all(b < a for a, b in zip(masses, masses[1:])) or masses[-1] == 0.0


def test_thermal_field_variance(weak):
    fld = ps.field_gaussian(weak, 0.0, ps.Thermal())
    X, Y = fld.grid.mesh()
    var_x = ps.integrate_grid(fld.grid, X * X * fld.values)
    A = effective.steady_kernel(weak)
    assert var_x == pytest.approx(np.linalg.inv(A)[0, 0], rel=1e-4)
    assert var_x == pytest.approx(weak.N0 / 2, rel=0.02)
    mn, mass, area = ps.negativity_metrics(fld)
    assert mn >= 0 and mass == 0 and area == 0


def test_coherent_mean_rotates_when_uncoupled():
    m = effective.limit_coefficients(BathSpec(nu_bar=0.0))
    t = 0.7
    fld = ps.field_gaussian(m, t, ps.Coherent(r0=(1.0, 0.0), Sigma0=((0.2, 0.0), (0.0, 0.1))))
    mean = fld.metadata["mean"]
    assert math.atan2(mean[1], mean[0]) == pytest.approx(-t)
    assert math.hypot(*mean) == pytest.approx(1.0)


def test_rotational_covariance_when_uncoupled():
    m = effective.limit_coefficients(BathSpec(nu_bar=0.0))
    grid = ps.Grid.square(3.0, 121)
    init = ps.Coherent(r0=(0.8, 0.3), Sigma0=((0.3, 0.05), (0.05, 0.15)))
    f0 = ps.field_gaussian(m, 0.0, init, grid).values
    ft = ps.field_gaussian(m, math.pi / 2, init, grid).values
    n = grid.x.size
    i, j = np.indices(ft.shape)
    # A quarter turn maps the node (x, y) back to (-y, x) on the symmetric grid.
    np.testing.assert_allclose(ft, f0[j, n - 1 - i], atol=1e-6)


def test_coherent_mean_follows_propagator(model):
    r0 = (1.5, -0.5)
    fld = ps.field_gaussian(model, 40.0, ps.Coherent(r0=r0))
    expected = effective.expm2(model.F_eff, 40.0) @ np.array(r0)
    np.testing.assert_allclose(fld.metadata["mean"], expected, rtol=1e-14)


def test_slices(model):
    fld = ps.field_fock1(model, 200.0, ps.Grid.square(2.0, 41))
    x, p = ps.field_slice(fld, 0.0)
    np.testing.assert_array_equal(p, fld.values[20])
    _, mid = ps.field_slice(fld, 0.05)
    np.testing.assert_allclose(mid, 0.5 * (fld.values[20] + fld.values[21]))
    with pytest.raises(ContractError):
        ps.field_slice(fld, 5.0)


def test_csv_and_json_round_trip(model, tmp_path):
    fld = ps.field_fock1(model, 200.0, ps.Grid.square(2.0, 11))
    path = ps.write_field_csv(fld, tmp_path / "f.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["x", "y", "p"] and len(rows) == 122
    back = np.array([float(r[2]) for r in rows[1:]])
    np.testing.assert_array_equal(back, fld.values.ravel())
    meta = json.loads(ps.write_field_json(fld, tmp_path / "f.json").read_text())
    assert meta["schema_version"] == 1 and meta["t"] == 200.0 and meta["init_state"] == "fock1"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(value):
    text = ps.fmt(value)
    assert float(text) == value
    assert len(text.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 17
