import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taumap import riemann as rm
from taumap.exactring import MomentVector
from taumap.taucoeffs import tau_series


@pytest.fixture(scope="module")
def v6():
    return tau_series(6)


GENERIC = rm.CurveSpec({1: 1.0 + 0j, 0: 0.03 - 0.02j, -1: 0.04 + 0.01j, 2: 0.02j, -2: -0.015 + 0j})


# -- moments ------------------------------------------------------------------------

@pytest.mark.parametrize("radius", [0.5, 1.0, 2.0])
def test_circle_moments(radius):
    m = rm.moments_from_curve(rm.CurveSpec.circle(radius), 6)
    assert m.t0 == pytest.approx(radius ** 2, rel=1e-14)
    assert max(abs(t) for t in m.t) < 1e-14


def test_shifted_disk_moments():
    c = 0.05 + 0.02j
    m = rm.moments_from_curve(rm.CurveSpec.shifted_disk(c, 1.0), 6)
    oracle = rm.schwarz_moments("shifted_disk", 6, center=c, radius=1.0)
    assert abs(m.t0 - oracle.t0) < 1e-13
    assert np.allclose(m.t, oracle.t, rtol=0, atol=1e-13)
    assert m.tbar == tuple(t.conjugate() for t in m.t)


@pytest.mark.parametrize("a,b", [(1.0, 0.9), (1.0, 0.95), (1.3, 1.2)])
def test_ellipse_moments(a, b):
    m = rm.moments_from_curve(rm.CurveSpec.ellipse(a, b), 6)
    oracle = rm.schwarz_moments("ellipse", 6, a=a, b=b)
    assert m.t0 == pytest.approx(a * b, rel=1e-13)
    assert np.allclose(m.t, oracle.t, rtol=0, atol=1e-13)


def test_quadrature_converged_at_default_grid():
    for curve in (rm.CurveSpec.ellipse(1.0, 0.9), GENERIC):
        m1 = rm.moments_from_curve(curve, 8, 512)
        m2 = rm.moments_from_curve(curve, 8, 1024)
        assert abs(m1.t0 - m2.t0) <= 1e-12 * abs(m2.t0)
        assert np.allclose(m1.t, m2.t, rtol=1e-12, atol=1e-15)


def test_too_coarse_grid_rejected():
    with pytest.raises(ValueError):
        rm.moments_from_curve(GENERIC, 4, n_quad=8)


# -- curve validation ----------------------------------------------------------------

def test_clockwise_curve_rejected():
    with pytest.raises(rm.CurveError, match="winding"):
        rm.CurveSpec({1: 1 + 0j}, orientation=-1).validate()


def test_curve_not_enclosing_origin_rejected():
    with pytest.raises(rm.CurveError):
        rm.CurveSpec.shifted_disk(3.0, 1.0).validate()


def test_self_intersecting_curve_rejected():
    # limacon with an inner loop around 0: winding number 2
    with pytest.raises(rm.CurveError):
        rm.CurveSpec({1: 1 + 0j, 2: 1.5 + 0j}).validate()


def test_figure_eight_rejected():
    # z = e^{i th} + 0.9 e^{-2 i th} crosses itself while winding once about 0
    curve = rm.CurveSpec({1: 1 + 0j, -2: 0.9 + 0j})
    with pytest.raises(rm.CurveError, match="self-intersects"):
        curve.validate()


def test_curve_json_round_trip():
    assert rm.CurveSpec.from_json_obj(GENERIC.to_json_obj()) == GENERIC


# -- map ---------------------------------------------------------------------------

@pytest.mark.parametrize("radius", [0.5, 1.5, 2.0])
def test_circle_map(v6, radius):
    curve = rm.CurveSpec.circle(radius)
    w = rm.map_series(v6, rm.moments_from_curve(curve, 6))
    assert w.r == pytest.approx(radius, rel=1e-14)
    assert np.max(np.abs(w.p)) <= 1e-12
    assert rm.boundary_unimodularity(curve, w) <= 1e-12


def test_map_on_exact_circle_moments(v6):
    w = rm.map_series(v6, MomentVector.real_domain(4.0, [0j] * 6))
    assert w.r == pytest.approx(2.0, rel=1e-15)
    assert not np.any(w.p)


def test_shifted_disk_map_converges_to_oracle():
    c = 0.05
    curve = rm.CurveSpec.shifted_disk(c, 1.0)
    errs = []
    for cutoff in (4, 6, 8):
        w = rm.map_series(tau_series(cutoff), rm.moments_from_curve(curve, cutoff))
        errs.append(rm.boundary_error_vs_oracle(curve, w, "shifted_disk", center=c, radius=1.0))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-12


def test_ellipse_near_circle_small_error():
    curve = rm.CurveSpec.ellipse(1.0, 0.95)
    w = rm.map_series(tau_series(8), rm.moments_from_curve(curve, 8))
    assert rm.boundary_unimodularity(curve, w) < 1e-6
    assert rm.boundary_error_vs_oracle(curve, w, "ellipse", a=1.0, b=0.95) < 1e-6


def test_wrong_radius_shows_up_in_unimodularity(v6):
    curve = rm.CurveSpec.circle(1.0)
    w = rm.map_series(v6, rm.moments_from_curve(curve, 6))
    bad = rm.MapSeries(1.1 * w.r, w.p * w.r / (1.1 * w.r), w.order)
    assert rm.boundary_unimodularity(curve, bad) == pytest.approx(abs(1 / 1.1 - 1), rel=1e-12)


def test_mirror_symmetric_curve_gives_real_map(v6):
    curve = rm.CurveSpec({1: 1 + 0j, 0: 0.03 + 0j, -1: 0.05 + 0j, 2: 0.01 + 0j})
    w = rm.map_series(v6, rm.moments_from_curve(curve, 6))
    assert np.max(np.abs(w.p.imag)) < 1e-15
    z = np.array([1.3 + 0.4j, -0.8 + 1.1j])
    assert np.allclose(w(np.conj(z)), np.conj(w(z)), rtol=0, atol=1e-14)


def test_map_diagnostics_and_warning(v6, caplog):
    big = rm.CurveSpec.ellipse(1.0, 0.2)
    with caplog.at_level("WARNING", logger="taumap.riemann"):
        w = rm.map_series(v6, rm.moments_from_curve(big, 6))
    assert "warning" in w.diagnostics and "not small" in caplog.text
    assert set(w.diagnostics) >= {"smallness", "tail", "log_r_imag"}


def test_map_rejects_moments_beyond_cutoff():
    with pytest.raises(ValueError):
        rm.map_series(tau_series(3), MomentVector.real_domain(1.0, [0j] * 4))


def test_map_series_json_round_trip(v6):
    w = rm.map_series(v6, rm.moments_from_curve(GENERIC, 6))
    back = rm.MapSeries.from_json_obj(w.to_json_obj())
    assert back.r == w.r and np.array_equal(back.p, w.p)


# -- oracle maps ------------------------------------------------------------------

def test_oracle_map_examples():
    assert rm.oracle_map("circle", 2.0, radius=2.0) == pytest.approx(1.0)
    assert rm.oracle_map("shifted_disk", 1.1, center=0.1, radius=1.0) == pytest.approx(1.0)
    z = np.array([1.5 + 0.3j, -2j])
    assert np.allclose(rm.oracle_map("ellipse", z, a=1.0, b=1.0), rm.oracle_map("circle", z, radius=1.0))


def test_oracle_ellipse_maps_boundary_to_unit_circle():
    _, z, _ = rm.CurveSpec.ellipse(1.0, 0.7).sample(256)
    w = rm.oracle_map("ellipse", z, a=1.0, b=0.7)
    assert np.max(np.abs(np.abs(w) - 1)) < 1e-14
    assert rm.oracle_map("ellipse", 1e6, a=1.0, b=0.7) == pytest.approx(1e6 / 0.85, rel=1e-9)


def test_oracle_ellipse_rejects_a_below_b():
    with pytest.raises(ValueError):
        rm.oracle_map("ellipse", 2.0, a=0.5, b=1.0)


# -- covariance -------------------------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.5, 2.0))
def test_rotation_and_scale_covariance(alpha, lam):
    base = rm.moments_from_curve(GENERIC, 6)
    moved = rm.moments_from_curve(GENERIC.rotated(alpha).scaled(lam), 6)
    assert moved.t0 == pytest.approx(lam ** 2 * base.t0, rel=1e-12)
    for k, (t, tm) in enumerate(zip(base.t, moved.t), start=1):
        expected = cmath.exp(-1j * k * alpha) * lam ** (2 - k) * t
        assert abs(tm - expected) <= 1e-12 * max(abs(expected), lam ** (2 - k) * 1e-3)
