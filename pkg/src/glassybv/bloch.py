"""Bloch-sphere coordinates and the pole-to-mean rotation.

Disorder distributions are built around the north pole, where their
density depends only on the polar angle, and then carried to the
noiseless Hadamard image ``|+>`` on the +x axis. The rotation used for
that is a right-handed turn by +pi/2 about y:

    pole frame x -> world -z
    pole frame y -> world  y
    pole frame z -> world  x

so a tangential offset along pole-frame y stays along world y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, ZeroVector

TWO_PI = 2.0 * math.pi

# Columns are the images of the pole-frame basis vectors.
POLE_TO_X = np.array(
    [
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
        [-1.0, 0.0, 0.0],
    ]
)

_ANGLE_SLACK = 1e-12


@dataclass(frozen=True)
class BlochAngles:
    """Zenith ``theta`` in [0, pi] and azimuth ``phi`` in [0, 2 pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        theta = float(self.theta)
        if not (-_ANGLE_SLACK <= theta <= math.pi + _ANGLE_SLACK):
            raise InvalidParameter(f"theta={theta!r} outside [0, pi]")
        theta = min(max(theta, 0.0), math.pi)
        phi = float(self.phi) % TWO_PI
        if phi == TWO_PI:  # float modulo can round up for tiny negatives
            phi = 0.0
        if theta == 0.0 or theta == math.pi:
            phi = 0.0
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)


@dataclass(frozen=True)
class UnitVector3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if abs(norm - 1.0) > 1e-9:
            raise InvalidParameter(f"|v| = {norm!r}, expected 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def to_cartesian(a: BlochAngles) -> UnitVector3:
    st = math.sin(a.theta)
    return UnitVector3(st * math.cos(a.phi), st * math.sin(a.phi), math.cos(a.theta))


def from_cartesian(v) -> BlochAngles:
    """Angles of the direction ``v`` (renormalised; any length above 1e-6)."""
    x, y, z = (float(c) for c in (v.as_array() if isinstance(v, UnitVector3) else v))
    norm = math.sqrt(x * x + y * y + z * z)
    if norm < 1e-6:
        raise ZeroVector(f"|v| = {norm!r}")
    x, y, z = x / norm, y / norm, z / norm
    rho = math.hypot(x, y)
    theta = math.atan2(rho, z)
    phi = math.atan2(y, x) if rho > 0.0 else 0.0
    return BlochAngles(theta, phi)


def rotate_pole_to_x(a: BlochAngles) -> BlochAngles:
    v = POLE_TO_X @ to_cartesian(a).as_array()
    return from_cartesian(v)


def geodesic_angle(p: BlochAngles, q: BlochAngles) -> float:
    u = to_cartesian(p).as_array()
    w = to_cartesian(q).as_array()
    # atan2 form stays accurate for nearly (anti)parallel pairs
    return math.atan2(np.linalg.norm(np.cross(u, w)), float(u @ w))


# -- vectorised forms used by the samplers ---------------------------------


def cartesian_arrays(theta, phi):
    st = np.sin(theta)
    return st * np.cos(phi), st * np.sin(phi), np.cos(theta)


def pole_frame_to_world(x, y, z):
    """Apply ``POLE_TO_X`` to component arrays; returns world (x, y, z)."""
    return z, y, -x


def angles_from_arrays(x, y, z):
    """Vectorised ``from_cartesian`` for unit vectors (no renormalisation)."""
    rho = np.hypot(x, y)
    theta = np.arctan2(rho, z)
    phi = np.arctan2(y, x)
    phi = np.where(phi < 0.0, phi + TWO_PI, phi)
    phi = np.where((rho == 0.0) | (phi >= TWO_PI), 0.0, phi)
    return theta, phi
