import math

import numpy as np
import pytest

from glassybv.bloch import (
    BlochAngles,
    UnitVector3,
    angles_from_arrays,
    cartesian_arrays,
    from_cartesian,
    geodesic_angle,
    pole_frame_to_world,
    rotate_pole_to_x,
    to_cartesian,
)
from glassybv.errors import InvalidParameter, ZeroVector

rng = np.random.default_rng(11)
random_angles = [(float(t), float(p)) for t, p in zip(rng.uniform(0.01, math.pi - 0.01, 25),
                                                     rng.uniform(0, 2 * math.pi, 25))]


@pytest.mark.parametrize("theta,phi", random_angles)
def test_round_trip(theta, phi):
    a = BlochAngles(theta, phi)
    back = from_cartesian(to_cartesian(a))
    assert back.theta == pytest.approx(theta, abs=1e-12)
    assert back.phi == pytest.approx(phi, abs=1e-12)


@pytest.mark.parametrize("theta", [0.0, math.pi])
def test_poles_canonical_phi(theta):
    a = BlochAngles(theta, 1.3)
    assert a.phi == 0.0
    assert from_cartesian(to_cartesian(a)).phi == 0.0


def test_phi_two_pi_wraps():
    assert BlochAngles(1.0, 2 * math.pi).phi == 0.0
    assert BlochAngles(1.0, -0.5).phi == pytest.approx(2 * math.pi - 0.5)


@pytest.mark.parametrize("theta", [-0.1, math.pi + 0.1])
def test_theta_out_of_range(theta):
    with pytest.raises(InvalidParameter):
        BlochAngles(theta, 0.0)


def test_unit_vector_checks_norm():
    UnitVector3(0.6, 0.8, 0.0)
    with pytest.raises(InvalidParameter):
        UnitVector3(1.0, 1.0, 0.0)


def test_from_cartesian_renormalizes_and_rejects_zero():
    a = from_cartesian((2.0, 0.0, 0.0))
    assert (a.theta, a.phi) == pytest.approx((math.pi / 2, 0.0))
    with pytest.raises(ZeroVector):
        from_cartesian((1e-9, 0.0, 0.0))


def test_pole_maps_to_plus_x():
    v = to_cartesian(rotate_pole_to_x(BlochAngles(0.0, 0.0)))
    assert (v.x, v.y, v.z) == pytest.approx((1.0, 0.0, 0.0), abs=1e-15)


@pytest.mark.parametrize("theta,phi", random_angles[:10])
def test_rotation_preserves_distance_from_mean(theta, phi):
    a = BlochAngles(theta, phi)
    mean = BlochAngles(math.pi / 2, 0.0)
    assert geodesic_angle(rotate_pole_to_x(a), mean) == pytest.approx(theta, abs=1e-12)


def test_vectorised_frame_change_matches_scalar():
    theta, phi = np.array([0.3, 1.2, 2.9]), np.array([0.1, 4.0, 2.2])
    x, y, z = cartesian_arrays(theta, phi)
    wx, wy, wz = pole_frame_to_world(x, y, z)
    t2, p2 = angles_from_arrays(wx, wy, wz)
    for k in range(3):
        r = rotate_pole_to_x(BlochAngles(theta[k], phi[k]))
        assert (t2[k], p2[k]) == pytest.approx((r.theta, r.phi), abs=1e-12)


def test_geodesic_small_angle_accuracy():
    a = BlochAngles(math.pi / 2, 0.0)
    b = BlochAngles(math.pi / 2, 1e-9)
    assert geodesic_angle(a, b) == pytest.approx(1e-9, rel=1e-6)
