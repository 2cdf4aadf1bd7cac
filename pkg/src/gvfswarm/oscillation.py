"""Lateral oscillation layer: reference waves, amplitude scheduling, speed model.

A drone tracks the oscillating lateral reference gamma(t) = A(t) sin(w t).
Because ground speed is fixed, lateral motion taxes progress along the
path: with constant amplitude A the path parameter advances at the
period average of sqrt(v^2 - gamma_dot^2). That exact average equals
(2v/pi) E(m) with m = (A w / v)^2 and E the complete elliptic integral
of the second kind; both routes are implemented independently and the
quadrature one is authoritative. The scheduling inverse uses the
algebraic model xdot(A) ~= sqrt(v^2 - (A w / k_A)^2), giving
A_d = k_A sqrt(v^2 - xdot_d^2) / w, with k_A fitted once by least
squares against the quadrature curve.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

logger = logging.getLogger(__name__)

__all__ = [
    "OscillationConfig",
    "OscillationState",
    "gamma",
    "gamma_dot",
    "gamma_ddot",
    "complete_elliptic_e",
    "average_parametric_velocity",
    "average_parametric_velocity_closed_form",
    "epsilon",
    "amplitude_for_velocity",
    "fit_k_a",
    "relaxation_step",
    "update_amplitude",
]


@dataclass(frozen=True)
class OscillationConfig:
    """Parameters of the oscillation layer.

    Parameters
    ----------
    speed : float
        Constant ground speed v in m/s, positive.
    w_gamma : float
        Angular frequency of the lateral wave in rad/s, positive.
    k_a : float
        Amplitude gain of the scheduling model, must exceed 1 for the
        slowdown budget to be meaningful.
    amplitude_cap : float or None
        Upper clamp for commanded amplitudes in m; defaults to v/w,
        the kinematic limit where the wave consumes the whole speed.
    tau_a : float or None
        Time constant of the amplitude relaxation filter in s;
        defaults to five periods' worth of phase, 5/w.
    """

    speed: float
    w_gamma: float
    k_a: float = 1.35
    amplitude_cap: float | None = None
    tau_a: float | None = None

    def __post_init__(self) -> None:
        if not self.speed > 0:
            raise ValueError(f"speed must be positive, got {self.speed}")
        if not self.w_gamma > 0:
            raise ValueError(f"w_gamma must be positive, got {self.w_gamma}")
        if self.amplitude_cap is None:
            object.__setattr__(self, "amplitude_cap", self.speed / self.w_gamma)
        elif not self.amplitude_cap > 0:
            raise ValueError(f"amplitude_cap must be positive, got {self.amplitude_cap}")
        if self.tau_a is None:
            object.__setattr__(self, "tau_a", 5.0 / self.w_gamma)
        elif not self.tau_a > 0:
            raise ValueError(f"tau_a must be positive, got {self.tau_a}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.w_gamma

    @property
    def max_amplitude(self) -> float:
        """Kinematic amplitude limit v/w."""
        return self.speed / self.w_gamma

    def epsilon(self) -> float:
        return epsilon(self.speed, self.k_a)

    def amplitude_for_velocity(self, desired_velocity):
        return amplitude_for_velocity(
            desired_velocity, self.speed, self.w_gamma, self.k_a, self.amplitude_cap
        )

    def average_parametric_velocity(self, amplitude) -> float:
        return average_parametric_velocity(self.speed, self.w_gamma, amplitude)


@dataclass(frozen=True)
class OscillationState:
    """Filtered amplitude state of one drone."""

    amplitude: float = 0.0
    amplitude_rate: float = 0.0
    amplitude_accel: float = 0.0
    commanded_amplitude: float = 0.0


def gamma(t, amplitude, w_gamma):
    """Lateral reference A sin(w t). Broadcasts over array inputs."""
    t = np.asarray(t, dtype=float)
    return amplitude * np.sin(w_gamma * t)


def gamma_dot(t, amplitude, amplitude_rate, w_gamma):
    """Time derivative of gamma for a time-varying amplitude."""
    t = np.asarray(t, dtype=float)
    wt = w_gamma * t
    return amplitude_rate * np.sin(wt) + amplitude * w_gamma * np.cos(wt)


def gamma_ddot(t, amplitude, amplitude_rate, amplitude_accel, w_gamma):
    """Second time derivative of gamma for a time-varying amplitude."""
    t = np.asarray(t, dtype=float)
    wt = w_gamma * t
    return (
        (amplitude_accel - amplitude * w_gamma**2) * np.sin(wt)
        + 2.0 * amplitude_rate * w_gamma * np.cos(wt)
    )


def complete_elliptic_e(m: float) -> float:
    """Complete elliptic integral of the second kind E(m), parameter form.

    E(m) = int_0^{pi/2} sqrt(1 - m sin^2 t) dt, evaluated by the
    arithmetic-geometric mean; converges quadratically to machine
    precision. Domain m in [0, 1].
    """
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"parameter m must lie in [0, 1], got {m}")
    if m == 0.0:
        return math.pi / 2.0
    if m == 1.0:
        return 1.0
    a, b, c = 1.0, math.sqrt(1.0 - m), math.sqrt(m)
    # E = K (1 - sum 2^{n-1} c_n^2); carrying c via c^2/(4a) instead of
    # (a - b)/2 avoids the cancellation once a and b coalesce
    s = 0.5 * c * c
    pow2 = 0.5
    for _ in range(64):
        a_next = 0.5 * (a + b)
        c = c * c / (4.0 * a_next)
        b = math.sqrt(a * b)
        a = a_next
        pow2 *= 2.0
        s += pow2 * c * c
        if c < 1e-18:
            break
    return (math.pi / (2.0 * a)) * (1.0 - s)


def _check_amplitude_domain(speed: float, w_gamma: float, amplitude: float) -> None:
    limit = speed / w_gamma
    if not 0.0 <= amplitude <= limit * (1.0 + 1e-12):
        raise ValueError(
            f"amplitude {amplitude} outside [0, v/w] = [0, {limit}]"
        )


def average_parametric_velocity(speed: float, w_gamma: float, amplitude: float) -> float:
    """Exact period-averaged progress speed for a constant amplitude.

    Computes (1/T) int_0^T sqrt(v^2 - A^2 w^2 cos^2(w t)) dt by adaptive
    quadrature. This is the authoritative route; the closed form below
    must agree with it. Domain: 0 <= amplitude <= v/w.
    """
    _check_amplitude_domain(speed, w_gamma, amplitude)
    if amplitude == 0.0:
        return speed
    period = 2.0 * math.pi / w_gamma
    aw = amplitude * w_gamma

    def integrand(t: float) -> float:
        radicand = speed * speed - (aw * math.cos(w_gamma * t)) ** 2
        return math.sqrt(max(radicand, 0.0))

    # integrand has cusps at t = 0, T/2, T when A = v/w; hint the
    # quarter points as well so the subdivision brackets them
    value, _ = quad(
        integrand,
        0.0,
        period,
        points=[period / 4.0, period / 2.0, 3.0 * period / 4.0],
        epsabs=1e-13,
        epsrel=1e-13,
        limit=200,
    )
    return value / period


def average_parametric_velocity_closed_form(
    speed: float, w_gamma: float, amplitude: float
) -> float:
    """Same average via (2v/pi) E(m), m = (A w / v)^2. Independent route."""
    _check_amplitude_domain(speed, w_gamma, amplitude)
    m = (amplitude * w_gamma / speed) ** 2
    return (2.0 * speed / math.pi) * complete_elliptic_e(min(m, 1.0))


def epsilon(speed: float, k_a: float) -> float:
    """Lowest schedulable progress speed, sqrt(k_A^2 - 1)/k_A * v.

    At desired velocity eps the scheduled amplitude is exactly v/w, so
    [eps, v] maps onto the full amplitude range. Requires k_a > 1.
    """
    if not k_a > 1.0:
        raise ValueError(f"k_a must exceed 1, got {k_a}")
    return speed * math.sqrt(k_a * k_a - 1.0) / k_a


def amplitude_for_velocity(
    desired_velocity,
    speed: float,
    w_gamma: float,
    k_a: float,
    amplitude_cap: float,
):
    """Scheduled amplitude A_d = k_A sqrt(v^2 - xdot_d^2) / w, clamped.

    Inputs outside [0, v] and outputs above the cap are clamped with a
    logged warning. Broadcasts over array inputs.
    """
    xdot = np.asarray(desired_velocity, dtype=float)
    clipped = np.clip(xdot, 0.0, speed)
    if np.any(clipped != xdot):
        logger.warning(
            "desired velocity outside [0, v]; clamping (min %.6g, max %.6g, v %.6g)",
            float(np.min(xdot)), float(np.max(xdot)), speed,
        )
    raw = k_a * np.sqrt(np.maximum(speed * speed - clipped * clipped, 0.0)) / w_gamma
    out = np.minimum(raw, amplitude_cap)
    if np.any(raw > amplitude_cap):
        logger.warning(
            "scheduled amplitude %.6g above cap %.6g; clamping",
            float(np.max(raw)), amplitude_cap,
        )
    return float(out) if out.ndim == 0 else out


def fit_k_a(speed: float, w_gamma: float, n_samples: int = 100) -> float:
    """Least-squares gain for the sqrt scheduling model.

    Samples the exact quadrature curve at n_samples amplitudes spanning
    [0, v/w] and fits A ~= k * sqrt(v^2 - xdot^2)/w through the origin:
    k = sum(A g) / sum(g^2) with g = sqrt(v^2 - xdot^2)/w.
    """
    if n_samples < 10:
        raise ValueError(f"need at least 10 samples for a stable fit, got {n_samples}")
    amplitudes = np.linspace(0.0, speed / w_gamma, n_samples)
    xdot = np.array([average_parametric_velocity(speed, w_gamma, a) for a in amplitudes])
    g = np.sqrt(np.maximum(speed * speed - xdot * xdot, 0.0)) / w_gamma
    return float(np.dot(amplitudes, g) / np.dot(g, g))


def relaxation_step(value, target, dt: float, tau: float):
    """One exact step of tau * xdot = target - x under a held target.

    Returns (value, rate, accel) after dt. Array-capable; with target
    in [lo, hi] the new value is a convex combination and stays inside
    the same interval, so no clamping is needed downstream.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    decay = math.exp(-dt / tau)
    new_value = target + (np.asarray(value, dtype=float) - target) * decay
    new_rate = (target - new_value) / tau
    new_accel = -new_rate / tau
    return new_value, new_rate, new_accel


def update_amplitude(
    state: OscillationState, commanded: float, dt: float, tau_a: float
) -> OscillationState:
    """Advance the filtered amplitude by dt toward ``commanded``."""
    a, a_dot, a_ddot = relaxation_step(state.amplitude, commanded, dt, tau_a)
    return OscillationState(
        amplitude=float(a),
        amplitude_rate=float(a_dot),
        amplitude_accel=float(a_ddot),
        commanded_amplitude=float(commanded),
    )
