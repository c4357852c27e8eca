"""Field-line tracing: closure detection, periods, loop integrals.

The rotation and circular fields have closed-form orbits (circles around
the axis, resp. the Moebius-conjugated circles through the half-plane),
so periods and curve points can be checked against exact expressions
rather than against the integrator itself.
"""

import numpy as np
import pytest

from ckfield.ckf import CkfParams, eval_ckf, field_cr, field_iso, field_ro, field_ud
from ckfield.errors import BlowUp, FrameUndefined, NotAdmissible, NotClosed
from ckfield.flows import (FixedPoint, cr_orbit_closed_form, cr_orbit_seed,
                           eval_ckf_curl, fixed_point_census, integrate_curve,
                           loop_integrals, planarity_and_curvature)
from ckfield.potentials import axial, hopfbase, smoothbump


def _dilation(b0=1.0, x0=(0.2, -0.5, 1.0)):
    x0 = np.asarray(x0, dtype=float)
    return CkfParams(a=-b0 * x0, b0=b0, b=np.zeros(3), c=np.zeros(3))


def _special_nu(nu):
    # c = e3, a = nu e3 puts the canonical center at the origin
    return CkfParams(a=np.array([0.0, 0.0, nu]), b0=0.0, b=np.zeros(3),
                     c=np.array([0.0, 0.0, 1.0]))


# ---------------------------------------------------------------------------
# rotation orbits


def test_ro_orbit_is_closed_circle():
    p = field_ro()
    x0 = np.array([0.7, 0.0, 0.4])
    tr = integrate_curve(p, x0)
    assert tr.closed
    assert tr.period == pytest.approx(2.0 * np.pi, abs=1.0e-8)
    assert tr.closure_error <= 1.0e-8
    # orbit stays on the rho = 0.7 circle in the x3 = 0.4 plane
    rho = np.hypot(tr.xs[0], tr.xs[1])
    assert np.abs(rho - 0.7).max() < 1.0e-9
    assert np.abs(tr.xs[2] - 0.4).max() < 1.0e-9
    # Y = 2 e3 everywhere, so the orbit plane normal is exactly e3
    np.testing.assert_allclose(tr.plane_normal, [0.0, 0.0, 1.0], atol=1.0e-15)
    assert tr.analytic == {"tag": "RoCircle", "rho": 0.7, "x3": 0.4}


def test_trace_weights_integrate_dt_to_period():
    tr = integrate_curve(field_ro(), [1.2, 0.0, 0.0])
    assert tr.weights.sum() == pytest.approx(tr.period, abs=1.0e-12)
    assert tr.ts.shape == tr.weights.shape
    assert tr.xs.shape == (3, tr.ts.size)
    assert len(tr.samples) == tr.ts.size


# ---------------------------------------------------------------------------
# circular-field orbits


@pytest.mark.parametrize("mu", [0.5, 1.0, 2.0])
def test_cr_period_matches_2pi_over_mu(mu):
    tr = integrate_curve(field_cr(mu), cr_orbit_seed(mu, 0.5))
    assert tr.closed
    assert tr.period == pytest.approx(2.0 * np.pi / mu, abs=1.0e-8)


def test_cr_orbit_matches_closed_form():
    mu, rho, theta = 1.0, 0.5, 0.3
    tr = integrate_curve(field_cr(mu), cr_orbit_seed(mu, rho, theta))
    exact = cr_orbit_closed_form(mu, rho, theta, tr.ts)
    assert np.abs(tr.xs - exact).max() < 1.0e-9
    tag = tr.analytic
    assert tag["tag"] == "CrCurve"
    assert tag["mu"] == pytest.approx(mu, abs=1.0e-12)
    assert tag["rho"] == pytest.approx(rho, abs=1.0e-12)
    assert tag["theta"] == pytest.approx(theta, abs=1.0e-12)


def test_cr_orbit_seed_formula_and_validation():
    mu, rho = 2.0, 0.9
    np.testing.assert_allclose(cr_orbit_seed(mu, rho),
                               [mu * (1 + rho) / (1 - rho), 0.0, 0.0])
    with pytest.raises(ValueError):
        cr_orbit_seed(1.0, 1.0)
    with pytest.raises(ValueError):
        cr_orbit_seed(1.0, -0.1)


def test_closed_form_starts_at_seed():
    pts = cr_orbit_closed_form(0.5, 0.3, 1.1, [0.0])
    np.testing.assert_allclose(pts[:, 0], cr_orbit_seed(0.5, 0.3, 1.1),
                               atol=1.0e-13)


# ---------------------------------------------------------------------------
# non-closing / inadmissible cases


def test_translation_curve_never_closes():
    tr = integrate_curve(field_ud(), [0.1, 0.2, 0.3], t_max=5.0)
    assert not tr.closed
    assert tr.period is None
    assert tr.closure_error is None
    with pytest.raises(NotClosed):
        loop_integrals(tr, field_ud())
    with pytest.raises(NotClosed):
        planarity_and_curvature(tr, field_ud())


def test_cr_axis_curve_blows_up():
    # on the symmetry axis dx3/dt = (mu^2 + x3^2)/2 escapes in finite time
    with pytest.raises(BlowUp, match="axis curve"):
        integrate_curve(field_cr(1.0), [0.0, 0.0, 0.2])


def test_inadmissible_fields_are_rejected():
    with pytest.raises(NotAdmissible):
        integrate_curve(_dilation(), [1.0, 0.0, 0.0])
    with pytest.raises(NotAdmissible):
        integrate_curve(field_iso(), [1.0, 0.0, 0.0])
    with pytest.raises(NotAdmissible):
        integrate_curve(_special_nu(-0.5), [1.0, 0.0, 0.0])


def test_seed_at_zero_of_field_is_rejected():
    with pytest.raises(FrameUndefined):
        integrate_curve(field_ro(), [0.0, 0.0, 0.3])


# ---------------------------------------------------------------------------
# loop integrals


def test_ro_loop_integrals_with_parallel_potential():
    p = field_ro()
    spec = axial(smoothbump(0.2, 4.0, 1.0))
    tr = integrate_curve(p, [0.9, 0.0, 0.1])
    ints = loop_integrals(tr, p, spec)
    # div X = 0 identically for the rotation field
    assert ints.int_div == 0.0
    assert abs(ints.int_absY - 4.0 * np.pi) < 1.0e-10
    # A is vertical and X is azimuthal, so X.A = 0 pointwise
    assert abs(ints.int_flux) < 1.0e-12


@pytest.mark.parametrize("mu,rho", [(0.5, 0.1), (1.0, 0.5), (2.0, 0.9)])
def test_cr_loop_integrals(mu, rho):
    p = field_cr(mu)
    tr = integrate_curve(p, cr_orbit_seed(mu, rho))
    ints = loop_integrals(tr, p, hopfbase(mu))
    assert abs(ints.int_div) < 1.0e-9
    assert abs(ints.int_absY - 4.0 * np.pi) < 1.0e-9
    assert abs(ints.int_flux) < 1.0e-9


def test_loop_integrals_without_spec_skips_flux():
    p = field_ro()
    tr = integrate_curve(p, [0.5, 0.0, 0.0])
    assert loop_integrals(tr, p).int_flux is None


# ---------------------------------------------------------------------------
# geometry of the traced curves


@pytest.mark.parametrize("p,seed", [
    (field_ro(), np.array([1.1, 0.0, -0.2])),
    (field_cr(1.0), cr_orbit_seed(1.0, 0.5)),
])
def test_orbits_are_planar_with_frame_curvature(p, seed):
    tr = integrate_curve(p, seed)
    dev, kappa_res = planarity_and_curvature(tr, p)
    assert dev < 1.0e-9
    assert kappa_res < 1.0e-9


def test_eval_ckf_curl_closed_form():
    # Y = 2b + 2 c x x for the full four-parameter family
    rng = np.random.default_rng(3)
    p = CkfParams(a=rng.normal(size=3), b0=0.7, b=rng.normal(size=3),
                  c=rng.normal(size=3))
    xs = rng.normal(size=(3, 17))
    Y = eval_ckf_curl(p, xs)
    expect = 2.0 * p.b[:, None] + 2.0 * np.cross(p.c[None, :], xs.T).T
    np.testing.assert_allclose(Y, expect, atol=1.0e-13)
    assert eval_ckf_curl(p, np.array([0.0, 0.0, 0.0])).shape == (3,)


# ---------------------------------------------------------------------------
# fixed points


def test_census_translation_has_no_zeros():
    census = fixed_point_census(field_ud())
    assert len(census) == 0
    assert census.degenerate is None


def test_census_rotation_axis_line():
    census = fixed_point_census(field_ro())
    assert len(census) == 0
    deg = census.degenerate
    assert deg["kind"] == "line"
    np.testing.assert_allclose(deg["point"], np.zeros(3), atol=1.0e-15)
    np.testing.assert_allclose(deg["direction"], [0.0, 0.0, 1.0])


def test_census_dilation_center():
    p = _dilation(b0=-1.5, x0=(0.2, -0.5, 1.0))
    census = fixed_point_census(p)
    assert census.degenerate is None
    (fp,) = tuple(census)
    assert isinstance(fp, FixedPoint)
    assert fp.kind == "dilation"
    np.testing.assert_allclose(fp.point, [0.2, -0.5, 1.0], atol=1.0e-14)
    np.testing.assert_allclose(eval_ckf(p, fp.point), np.zeros(3),
                               atol=1.0e-14)


@pytest.mark.parametrize("mu", [0.5, 2.0])
def test_census_cr_degenerate_circle(mu):
    census = fixed_point_census(field_cr(mu))
    assert len(census) == 0
    deg = census.degenerate
    assert deg["kind"] == "circle"
    assert deg["radius"] == pytest.approx(mu, abs=1.0e-14)
    np.testing.assert_allclose(deg["center"], np.zeros(3), atol=1.0e-15)
    np.testing.assert_allclose(deg["normal"], [0.0, 0.0, 1.0])
    # points of the circle really are zeros of X
    x = np.array([deg["radius"], 0.0, 0.0]) + deg["center"]
    np.testing.assert_allclose(eval_ckf(field_cr(mu), x), np.zeros(3),
                               atol=1.0e-14)


def test_census_special_negative_nu_pair():
    p = _special_nu(-0.5)
    census = fixed_point_census(p)
    assert census.degenerate is None
    pts = sorted((fp.point[2], fp.kind) for fp in census)
    s = np.sqrt(2.0 * 0.5)
    assert len(pts) == 2
    assert pts[0][0] == pytest.approx(-s, abs=1.0e-14)
    assert pts[1][0] == pytest.approx(s, abs=1.0e-14)
    assert {k for _, k in pts} == {"special"}
    for fp in census:
        np.testing.assert_allclose(eval_ckf(p, fp.point), np.zeros(3),
                                   atol=1.0e-14)


def test_census_special_zero_nu_dipole():
    census = fixed_point_census(_special_nu(0.0))
    (fp,) = tuple(census)
    assert fp.kind == "dipole"
    np.testing.assert_allclose(fp.point, np.zeros(3), atol=1.0e-15)
