import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risdetect.geometry import (CoverageArea, Location, cart_to_sphere, rotate_toward_normal,
                                sample_area, sphere_to_cart, unit_vector)


def test_sphere_to_cart_examples():
    np.testing.assert_allclose(sphere_to_cart(1, 0, 0), (0, 0, 1), atol=1e-15)
    np.testing.assert_allclose(sphere_to_cart(1, np.pi / 2, 0), (1, 0, 0), atol=1e-15)
    ap = sphere_to_cart(25, np.deg2rad(90), np.deg2rad(37))
    t, f = np.deg2rad(90), np.deg2rad(37)
    np.testing.assert_allclose(ap, (25 * np.sin(t) * np.cos(f), 25 * np.sin(t) * np.sin(f), 0.0),
                               atol=1e-12)
    np.testing.assert_allclose(ap, (19.9659, 15.0454, 0.0), atol=1e-4)


def test_cart_to_sphere_examples():
    np.testing.assert_allclose(cart_to_sphere(0, 0, 1), (1, 0, 0), atol=1e-15)
    d, th, ph = cart_to_sphere(-10, -30, 30)
    # independent arithmetic
    assert d == pytest.approx(np.sqrt(100 + 900 + 900))
    assert th == pytest.approx(np.arccos(30 / d))
    assert ph == pytest.approx(np.arctan2(-30, -10))
    np.testing.assert_allclose((d, th, ph), (43.5890, 0.8117, -1.8925), atol=1e-4)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 100), st.floats(0.01, np.pi - 0.01), st.floats(-np.pi + 0.01, np.pi - 0.01))
def test_spherical_round_trip(d, th, ph):
    back = cart_to_sphere(*sphere_to_cart(d, th, ph))
    np.testing.assert_allclose(back, (d, th, ph), rtol=1e-9, atol=1e-9)


def test_location_views():
    q = Location.from_spherical(25, np.deg2rad(90), np.deg2rad(37))
    assert q.distance == pytest.approx(25)
    np.testing.assert_allclose(q.direction, np.deg2rad([90, 37]))


def test_sample_area_grids():
    c = Location(-10, -30, 30)
    assert sample_area(CoverageArea(c, 20, 20, 1, 1)) == [c]
    corners = sample_area(CoverageArea(c, 20, 20, 2, 2))
    assert {(q.y, q.z) for q in corners} == {(-40, 20), (-20, 20), (-40, 40), (-20, 40)}
    nine = sample_area(CoverageArea(c, 20, 20, 3, 3))
    assert len(nine) == 9 and nine[4] == c
    # rows along z, columns along y
    assert [(q.y, q.z) for q in nine[:3]] == [(-40, 20), (-30, 20), (-20, 20)]
    assert all(q.x == -10 for q in nine)


def test_coverage_area_validation():
    with pytest.raises(ValueError):
        CoverageArea(Location(0, 0, 1), 1, 1, 0, 3)
    with pytest.raises(ValueError):
        CoverageArea(Location(0, 0, 1), -1, 1)


def test_rotate_toward_normal_keeps_angle():
    center = Location(-10, -30, 30).direction
    for ang in (np.deg2rad(10), np.deg2rad(-30)):
        rot = rotate_toward_normal(center, ang)
        cos = unit_vector(*center) @ unit_vector(*rot)
        assert np.arccos(np.clip(cos, -1, 1)) == pytest.approx(abs(ang), abs=1e-12)
