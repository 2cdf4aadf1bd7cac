"""Constant-speed unicycle kinematics and the heading tracking law.

The drone model is pdot = v (cos theta, sin theta) + wind,
thetadot = omega, with the ground speed v fixed. The controller
steers the velocity direction onto the commanded field f with

    omega = f^T E (k_n pdot - fdot) / v^2,   E = [[0, -1], [1, 0]],

which damps the angle between pdot and f at rate k_n while the
feedforward -f^T E fdot / v^2 tracks the field's own rotation. The
controller only sees the model velocity v (cos theta, sin theta);
wind acts on the plant alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "VehicleState",
    "heading_rate",
    "heading_rate_core",
    "wrap_angle",
    "unicycle_step",
    "step_unicycle",
]


@dataclass(frozen=True)
class VehicleState:
    """Planar pose of one drone."""

    position: np.ndarray
    heading: float

    def velocity(self, speed: float) -> np.ndarray:
        """Model velocity v (cos theta, sin theta)."""
        return speed * np.array([np.cos(self.heading), np.sin(self.heading)])


def heading_rate_core(f, f_dot, velocity, speed: float, k_n: float):
    """omega = f^T E (k_n pdot - fdot) / v^2, batched over leading axes.

    f^T E = (f_y, -f_x), so the rate vanishes exactly when the tracking
    mismatch k_n pdot - fdot is parallel to f.
    """
    f = np.asarray(f, dtype=float)
    k_n = np.asarray(k_n, dtype=float)
    if k_n.ndim > 0:
        k_n = k_n[..., None]
    mismatch = k_n * np.asarray(velocity, dtype=float) - np.asarray(f_dot, dtype=float)
    return (f[..., 1] * mismatch[..., 0] - f[..., 0] * mismatch[..., 1]) / (speed * speed)


def heading_rate(f, f_dot, velocity, speed: float, k_n: float) -> float:
    """Scalar heading-rate command for one drone."""
    return float(heading_rate_core(f, f_dot, velocity, speed, k_n))


def wrap_angle(theta):
    """Wrap into (-pi, pi]; values already inside pass through untouched."""
    theta = np.asarray(theta, dtype=float)
    wrapped = -(np.mod(-theta + np.pi, 2.0 * np.pi) - np.pi)
    inside = (np.abs(theta) <= np.pi) & (theta != -np.pi)
    out = np.where(inside, theta, wrapped)
    return float(out) if out.ndim == 0 else out


def unicycle_step(position, heading, omega, speed: float, dt: float, wind=(0.0, 0.0)):
    """One RK4 step of the unicycle under a zero-order-held omega.

    thetadot = omega is state independent, so the heading stages are
    exact and the position update reduces to Simpson weights over the
    stage headings. The step preserves ||p_new - p|| <= v dt (plus the
    wind contribution) because the update is a convex combination of
    speed-v velocities. Batched over leading axes.
    """
    position = np.asarray(position, dtype=float)
    heading = np.asarray(heading, dtype=float)
    omega = np.asarray(omega, dtype=float)
    wind = np.asarray(wind, dtype=float)

    def vel(theta):
        return np.stack([speed * np.cos(theta), speed * np.sin(theta)], axis=-1) + wind

    k1 = vel(heading)
    k2 = vel(heading + 0.5 * dt * omega)
    k4 = vel(heading + dt * omega)
    new_position = position + (dt / 6.0) * (k1 + 4.0 * k2 + k4)
    new_heading = wrap_angle(heading + dt * omega)
    return new_position, new_heading


def step_unicycle(
    state: VehicleState, omega: float, dt: float, speed: float, wind=(0.0, 0.0)
) -> VehicleState:
    """Advance one drone by dt."""
    p, theta = unicycle_step(state.position, state.heading, omega, speed, dt, wind)
    return VehicleState(position=p, heading=float(theta))
