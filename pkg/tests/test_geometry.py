"""Domain geometry, curvature, and solvability audits."""

import math

import numpy as np
import pytest

from mcgraph import (BumpData, ExpressionData, FocalPointError,
                     MalformedDomainError, PrescribedCurvature, ZeroData,
                     annulus, check_gradient_condition, check_serrin, disk,
                     dumbbell, ellipse, make_domain, parallel_curvature, rect,
                     rounded_rect, scherk_trace)


def test_disk_basic_metrics():
    d = disk(radius=1.0)
    assert d.diameter == pytest.approx(2.0, rel=1e-6)
    assert d.boundary.total_length == pytest.approx(2.0 * math.pi, rel=1e-5)
    assert d.contains(np.array([[0.0, 0.0], [0.5, 0.5]])).tolist() == [True, True]
    assert not d.contains(np.array([[1.5, 0.0]]))[0]


def test_signed_distance_sign_convention():
    d = disk(radius=1.0)
    pts = np.array([[0.0, 0.0], [0.5, 0.0], [2.0, 0.0]])
    sd = d.signed_distance(pts)
    # positive inside, negative outside, magnitude is distance to the circle
    assert sd[0] == pytest.approx(1.0, abs=1e-6)
    assert sd[1] == pytest.approx(0.5, abs=1e-6)
    assert sd[2] == pytest.approx(-1.0, abs=1e-6)


def test_disk_curvature_constant():
    d = disk(radius=2.0)
    s = np.linspace(0.0, d.boundary.total_length, 64, endpoint=False)
    k = np.atleast_1d(d.boundary_curvature(s))
    assert np.allclose(k, 0.5, atol=1e-4)


def test_ellipse_curvature_extremes():
    a, b = 2.0, 1.0
    d = ellipse(a, b)
    s = np.linspace(0.0, d.boundary.total_length, 4096, endpoint=False)
    k = np.atleast_1d(d.boundary_curvature(s))
    # ends of the major axis have curvature a/b^2, minor axis b/a^2
    assert k.max() == pytest.approx(a / b**2, rel=1e-3)
    assert k.min() == pytest.approx(b / a**2, rel=1e-3)


def test_rect_curvature_vanishes_on_edges():
    d = rect(1.0, 1.0)
    pts = d.boundary.points
    on_edge = (np.abs(np.abs(pts[:, 0]) - 1.0) < 1e-9) ^ \
              (np.abs(np.abs(pts[:, 1]) - 1.0) < 1e-9)
    k = np.atleast_1d(d.boundary_curvature(d.boundary.arclength))
    interior_edge = on_edge & (np.abs(pts[:, 0]) < 0.9) & (np.abs(pts[:, 1]) < 0.9)
    # flat far from corners; corner neighborhoods carry the concentrated turn
    assert np.all(np.abs(k[interior_edge]) < 1e-3)


def test_malformed_domains_raise():
    with pytest.raises(MalformedDomainError):
        disk(radius=-1.0)
    with pytest.raises(MalformedDomainError):
        ellipse(0.0, 1.0)
    with pytest.raises(MalformedDomainError):
        annulus(1.0, 0.5)
    with pytest.raises(MalformedDomainError):
        dumbbell(waist=1.0, spread=2.0)
    with pytest.raises(MalformedDomainError):
        rect(-0.5, 0.5)


def test_make_domain_dispatch():
    d = make_domain("disk", radius=0.5)
    assert d.shape.tag == "disk"
    assert d.diameter == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(MalformedDomainError):
        make_domain("pentagon")


def test_serrin_threshold_values():
    d = disk(radius=1.0)
    crit = check_serrin(d, PrescribedCurvature.constant(0.5), n=2)
    assert abs(crit.margin) <= 1e-9
    assert crit.satisfied

    sub = check_serrin(d, PrescribedCurvature.constant(0.45), n=2)
    assert sub.satisfied
    assert sub.margin == pytest.approx(0.1, abs=1e-9)

    sup = check_serrin(d, PrescribedCurvature.constant(0.55), n=2)
    assert not sup.satisfied
    assert sup.margin == pytest.approx(-0.1, abs=1e-9)


def test_serrin_uses_absolute_curvature():
    d = disk(radius=1.0)
    neg = check_serrin(d, PrescribedCurvature.constant(-0.55), n=2)
    assert not neg.satisfied
    assert neg.margin == pytest.approx(-0.1, abs=1e-9)


def test_serrin_dumbbell_waist_violates_even_minimal():
    d = dumbbell(waist=1.0, spread=1.3)
    audit = check_serrin(d, PrescribedCurvature.constant(0.0), n=2)
    assert not audit.satisfied
    assert audit.margin < -1e-3
    # the worst point sits on the concave waist near x = 0
    assert abs(audit.worst_point[0]) < 0.25


def test_serrin_higher_n_tightens():
    d = disk(radius=1.0)
    h = PrescribedCurvature.constant(0.45)
    assert check_serrin(d, h, n=2).satisfied
    # (n-1) kappa - n |H| = 2 - 3*0.45 > 0 still holds at n=3
    assert check_serrin(d, h, n=3).margin == pytest.approx(2 - 3 * 0.45, abs=1e-9)


def test_gradient_condition_constant_always_holds():
    d = disk(radius=1.0)
    ok, margin = check_gradient_condition(d, PrescribedCurvature.constant(0.4), n=2)
    assert ok
    assert margin >= 0


def test_gradient_condition_steep_profile_fails():
    d = disk(radius=1.0)
    # |grad H| = 5 while n/(n-1) H^2 stays tiny near the zero line x = 0
    h = PrescribedCurvature.expression("5*x")
    ok, margin = check_gradient_condition(d, h, n=2)
    assert not ok
    assert margin < 0


def test_parallel_curvature_disk():
    d = disk(radius=1.0)
    s = np.array([0.0])
    t = 0.25
    k_t = np.atleast_1d(parallel_curvature(d, s, t))
    assert k_t[0] == pytest.approx(1.0 / (1.0 - t), rel=1e-4)


def test_parallel_curvature_focal_point():
    d = disk(radius=1.0)
    with pytest.raises(FocalPointError):
        parallel_curvature(d, np.array([0.0]), 1.0)


def test_smoothness_radius():
    assert disk(1.0).smoothness_radius() == pytest.approx(1.0, rel=1e-2)
    ring = annulus(0.8, 1.6)
    assert ring.smoothness_radius() == pytest.approx(0.4, rel=5e-2)


def test_rounded_rect_curvature_bounded():
    d = rounded_rect(1.0, 1.0, 0.25)
    s = np.linspace(0.0, d.boundary.total_length, 2048, endpoint=False)
    k = np.atleast_1d(d.boundary_curvature(s))
    assert k.max() == pytest.approx(4.0, rel=1e-2)
    assert k.min() > -1e-3


def test_prescribed_curvature_expression():
    h = PrescribedCurvature.expression("0.1*(x**2 + y**2)")
    pts = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert np.allclose(h(pts), [0.1, 0.4])
    g = h.gradient(pts)
    assert np.allclose(g, [[0.2, 0.0], [0.0, 0.4]])


def test_prescribed_curvature_norms_on_domain():
    d = disk(radius=1.0)
    h = PrescribedCurvature.constant(0.4)
    assert h.h0(d) == pytest.approx(0.4)
    hx = PrescribedCurvature.expression("0.1*x")
    assert hx.h0(d) == pytest.approx(0.1, rel=1e-2)


def test_bump_data_shape():
    d = disk(radius=1.0)
    bump = BumpData(d, (1.0, 0.0), 0.2, 0.05)
    # peak value eps at the center point, zero outside the support arc
    top = bump.trace(np.array([[1.0, 0.0]]))
    assert top[0] == pytest.approx(0.05, rel=1e-6)
    far = bump.trace(np.array([[-1.0, 0.0]]))
    assert far[0] == 0.0
    mid = bump.trace(np.array([[math.cos(0.1), math.sin(0.1)]]))
    assert 0.0 < mid[0] < 0.05


def test_bump_data_support_width():
    d = disk(radius=1.0)
    a = 0.2
    bump = BumpData(d, (1.0, 0.0), a, 0.05)
    # support is the arc within distance a of y0 along the boundary
    inside = np.array([[math.cos(0.9 * a), math.sin(0.9 * a)]])
    outside = np.array([[math.cos(1.1 * a), math.sin(1.1 * a)]])
    assert bump.trace(inside)[0] > 0.0
    assert bump.trace(outside)[0] == 0.0


def test_zero_and_scherk_data():
    d = rect(0.6, 0.6)
    z = ZeroData()
    pts = d.boundary.points[:8]
    assert np.allclose(z.trace(pts), 0.0)
    sch = scherk_trace()
    vals = sch.trace(pts)
    expect = np.log(np.cos(pts[:, 0]) / np.cos(pts[:, 1]))
    assert np.allclose(vals, expect, atol=1e-12)


def test_expression_data_norms():
    d = disk(radius=1.0)
    lin = ExpressionData("0.5*x")
    p0, p1, p2 = lin.norms(d)
    assert p0 == pytest.approx(0.5, rel=1e-2)
    assert p1 == pytest.approx(1.0, rel=1e-2)   # includes |phi| + |grad phi|
    assert p2 == pytest.approx(1.0, rel=1e-2)   # second derivatives vanish
