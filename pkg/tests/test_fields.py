import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from istlab.fields import (Grid1D, SampledField, SolitonParams, field_norms, locate_peaks, read_field_csv,
                           read_field_json, sample, shifted_samples, spectral_derivative, write_field_csv,
                           write_field_json)


def test_grid_basics():
    g = Grid1D(-30, 30, 1024)
    assert g.dx == pytest.approx(60 / 1023)
    assert g.x[0] == -30 and g.x[-1] == 30
    assert g.is_power_of_two()
    assert g.period == pytest.approx(1024 * g.dx)
    with pytest.raises(ValueError):
        g.x[0] = 1.0


@pytest.mark.parametrize("args", [(0, 1, 4), (1, 0, 16), (0, float("inf"), 16), (0, 1, 10.5)])
def test_grid_rejects(args):
    with pytest.raises(ValueError):
        Grid1D(*args)


def test_field_kinds():
    g = Grid1D(-1, 1, 16)
    f = SampledField(g, np.ones(16) + 0j, "real")
    assert f.values.dtype == np.float64
    with pytest.raises(ValueError):
        SampledField(g, np.ones(16) + 1j, "real")
    with pytest.raises(ValueError):
        SampledField(g, np.ones(15))
    assert f.edge_magnitude() == 1.0


def test_sample_infers_kind_and_falls_back():
    g = Grid1D(-1, 1, 17)
    assert sample(g, lambda x: np.exp(1j * x)).kind == "complex"
    assert sample(g, lambda x: np.cos(x) + 0j).kind == "real"
    f = sample(g, lambda x: float(np.cos(x)))  # scalar-only callable
    np.testing.assert_allclose(f.values, np.cos(g.x))
    with np.errstate(divide="ignore"), pytest.raises(ValueError, match="non-finite"):
        sample(g, lambda x: np.log(x + 1))


def test_soliton_params():
    with pytest.raises(ValueError):
        SolitonParams(eta=0.0)
    with pytest.raises(ValueError):
        SolitonParams(eta=1.0, xi=0.2).check_kdv()


def test_norms_of_sech2():
    g = Grid1D(-30, 30, 1024)
    l1, l2, linf = field_norms(sample(g, lambda x: 2 / np.cosh(x) ** 2))
    assert l1 == pytest.approx(4.0, abs=1e-6)
    assert l2 == pytest.approx(np.sqrt(16 / 3), abs=1e-6)
    assert linf <= 2.0


def test_json_and_csv_round_trip(tmp_path):
    g = Grid1D(-5, 5, 33)
    f = sample(g, lambda x: np.exp(-x**2) * (1 + 0.5j * x), "complex")
    write_field_json(f, tmp_path / "f.json")
    assert json.loads((tmp_path / "f.json").read_text())["kind"] == "complex"
    assert np.array_equal(read_field_json(tmp_path / "f.json").values, f.values)
    write_field_csv(f, tmp_path / "f.csv")
    back = read_field_csv(tmp_path / "f.csv")
    assert back.grid == g and np.array_equal(back.values, f.values)
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]


def test_spectral_derivative_and_shift():
    g = Grid1D(-20, 20, 512)
    f = np.exp(-g.x**2)
    np.testing.assert_allclose(spectral_derivative(f, g, 1), -2 * g.x * f, atol=1e-11)
    np.testing.assert_allclose(spectral_derivative(f, g, 2), (4 * g.x**2 - 2) * f, atol=1e-10)
    np.testing.assert_allclose(shifted_samples(f, g, 0.3), np.exp(-(g.x + 0.3 * g.dx) ** 2), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.floats(0.5, 2.0))
def test_locate_peaks_subgrid(x0, eta):
    g = Grid1D(-35, 35, 700)  # decayed to ~1e-11 at the edges for every draw
    f = sample(g, lambda x: 2 * eta**2 / np.cosh(eta * (x - x0)) ** 2)
    (x, h), = locate_peaks(f, n_peaks=1)
    assert abs(x - x0) < 1e-8
    assert abs(h - 2 * eta**2) < 1e-8
