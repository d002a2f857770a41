"""Tests for panel power integration and beam-shift metrics."""

import math

import numpy as np
import pytest

from moonbeam.diffraction import IrradianceMap, gaussian_beam_radius
from moonbeam.errors import DegenerateMapError, ValidationError
from moonbeam.receiver import (
    RESULT_COLUMNS,
    beam_shift,
    panel_power,
    result_row,
    _gauss_nodes,
)
from moonbeam.scenario import scenario_from_mapping

# Engine regression values, frozen from converged runs of this
# implementation (deterministic: fixed node order, pairwise sums).
EFF_25KM_RULE_RES = 0.9101194558082812
DUSTY_5KM = dict(power=718.1012008965934, shift=1.3926577328888734e-4,
                 peak=3.9511824392497486e-5)  # explicit C_ext=5.2139e-14

# Fraction of an untruncated Gaussian's power inside the 0.5 x 0.5 m
# panel at 50 km: erf(sqrt(2)*0.25/w)^2 with w = 0.342352605827 m.
ERF2_PANEL_FRACTION_50KM = 0.732466375628


def scen(**cfg):
    return scenario_from_mapping(cfg)


def test_gauss_nodes_cover_rectangle_exactly():
    xg, yg, wg = _gauss_nodes(0.25, 0.4, 16)
    assert xg.size == 8 * 16  # x>=0 half-grid times full y
    assert np.all(xg > 0.0)
    assert float(np.sum(wg)) == pytest.approx(0.5 * 0.8, rel=1e-13)


def test_gauss_nodes_require_even_order():
    with pytest.raises(ValueError, match="even"):
        _gauss_nodes(0.25, 0.25, 15)


def test_gauss_nodes_integrate_even_polynomial():
    # integral of x^2*y^4 over [-a,a]x[-b,b] = (2a^3/3)*(2b^5/5)
    a, b = 0.3, 0.2
    xg, yg, wg = _gauss_nodes(a, b, 8)
    est = float(np.sum(wg * xg**2 * yg**4))
    exact = (2.0 * a**3 / 3.0) * (2.0 * b**5 / 5.0)
    assert est == pytest.approx(exact, rel=1e-12)


def test_panel_power_free_space_regression():
    r = panel_power(scen(**{"geometry.D": 25000.0}))
    assert r.efficiency == pytest.approx(EFF_25KM_RULE_RES, rel=1e-9)
    assert r.power == pytest.approx(1000.0 * EFF_25KM_RULE_RES, rel=1e-9)
    assert r.convergence < 1e-3
    assert r.shift_y == 0.0 and r.peak_y == 0.0


def test_panel_power_wide_aperture_matches_erf_oracle():
    # With r_a = 3*w0 the truncation carries 1.5e-8 of the power, so
    # the analytic untruncated beam is an independent oracle for the
    # whole engine + quadrature chain.
    s = scen(**{
        "laser.r_a": 0.15,
        "geometry.D": 50000.0,
        "geometry.h0": 100.0,
        "geometry.hp": 100.0,
    })
    r = panel_power(s)
    assert r.efficiency == pytest.approx(ERF2_PANEL_FRACTION_50KM, rel=1e-3)
    w = float(gaussian_beam_radius(s.laser, 50000.0))
    assert r.efficiency == pytest.approx(math.erf(math.sqrt(2.0) * 0.25 / w) ** 2, rel=1e-3)


def test_panel_power_dusty_regression():
    s = scen(**{
        "dust.enabled": True,
        "dust.cext_source": "explicit",
        "dust.cext": 5.2139e-14,
    })
    r = panel_power(s)
    assert r.power == pytest.approx(DUSTY_5KM["power"], rel=1e-9)
    assert r.shift_y == pytest.approx(DUSTY_5KM["shift"], rel=1e-6)
    assert r.peak_y == pytest.approx(DUSTY_5KM["peak"], rel=1e-4)
    assert r.shift_y > 0.0 and r.peak_y > 0.0


def test_panel_power_with_shift_false_skips_metrics():
    s = scen(**{
        "dust.enabled": True,
        "dust.cext_source": "explicit",
        "dust.cext": 5.2139e-14,
    })
    r = panel_power(s, with_shift=False)
    assert r.power == pytest.approx(DUSTY_5KM["power"], rel=1e-9)
    assert r.shift_y == 0.0 and r.peak_y == 0.0


def test_result_row_zeroes_dust_columns_when_disabled():
    s = scen(**{"geometry.D": 25000.0})
    r = panel_power(s)
    row = result_row(s, r)
    assert tuple(row) == RESULT_COLUMNS
    assert row["d_p"] == 0.0 and row["C_ext"] == 0.0
    assert row["power_W"] == r.power
    assert row["efficiency"] == r.efficiency


def test_result_row_carries_dust_columns_when_enabled():
    s = scen(**{
        "dust.enabled": True,
        "dust.cext_source": "explicit",
        "dust.cext": 5e-14,
        "numerics.aperture_resolution": 64,
    })
    row = result_row(s, panel_power(s, with_shift=False))
    assert row["d_p"] == 175e-9
    assert row["C_ext"] == 5e-14


def synthetic_map(values, half=1.0):
    n = values.shape[0]
    axis = (np.arange(n) - (n - 1) / 2.0) * (2.0 * half / (n - 1))
    return IrradianceMap(
        xs=axis.copy(), ys=axis.copy(), values=values,
        extent=(half, half), distance=1000.0, meta={},
    )


def test_beam_shift_symmetric_map_is_zero():
    n = 101
    y = (np.arange(n) - (n - 1) / 2.0) / ((n - 1) / 2.0)
    vals = np.exp(-2.0 * (y[:, None] ** 2 + y[None, :] ** 2))
    assert beam_shift(synthetic_map(vals)) == pytest.approx(0.0, abs=1e-12)


def test_beam_shift_recovers_known_offset():
    n = 201
    half = 1.0
    axis = (np.arange(n) - (n - 1) / 2.0) * (2.0 * half / (n - 1))
    yy, xx = np.meshgrid(axis, axis, indexing="ij")
    vals = np.exp(-((yy - 0.08) ** 2 + xx**2) / 0.05)
    assert beam_shift(synthetic_map(vals)) == pytest.approx(0.08, abs=1e-4)


def test_beam_shift_window_validation():
    n = 64
    vals = np.ones((n, n))
    imap = synthetic_map(vals)
    with pytest.raises(ValidationError, match="positive"):
        beam_shift(imap, window=0.0)
    with pytest.raises(ValidationError, match="exceeds the map extent"):
        beam_shift(imap, window=(0.5, 2.0))


def test_beam_shift_degenerate_map():
    imap = synthetic_map(np.zeros((64, 64)))
    with pytest.raises(DegenerateMapError, match="no irradiance"):
        beam_shift(imap)


def test_beam_shift_uses_panel_window_metadata():
    n = 201
    half = 1.0
    axis = (np.arange(n) - (n - 1) / 2.0) * (2.0 * half / (n - 1))
    yy, xx = np.meshgrid(axis, axis, indexing="ij")
    # flat background plus a lump far outside a 3x panel window
    vals = 0.01 + np.exp(-((yy - 0.9) ** 2 + xx**2) / 0.001)
    imap = IrradianceMap(
        xs=axis.copy(), ys=axis.copy(), values=vals,
        extent=(half, half), distance=1000.0,
        meta={"panel_L": 0.2, "panel_W": 0.2},
    )
    windowed = beam_shift(imap)             # |y| <= 0.3: lump excluded
    full = beam_shift(imap, window=(1.0, 1.0))
    assert abs(windowed) < 1e-6
    assert full > 0.05
