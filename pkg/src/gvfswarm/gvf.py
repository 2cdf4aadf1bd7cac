"""Guiding vector field for line following with an oscillating offset.

The commanded velocity tracks the moving level set phi(p) = gamma(t).
With zeta = grad(phi)/||grad(phi)||^2 and the virtual input
u_phi = -k_e (phi - gamma) + gamma_dot, the lateral velocity demand is
beta = zeta u_phi. While ||beta|| <= v the field spends the remaining
speed budget on tangential progress (interior branch); otherwise the
whole budget goes lateral (exterior branch):

    f = sqrt(v^2 - ||beta||^2) t_hat + beta      interior
    f = v beta / ||beta||                        exterior

Both branches have ||f|| = v and they agree at the boundary. Along
closed-loop motion pdot = f the tracking error phi - gamma contracts
as exp(-k_e t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .paths import StraightLinePath

__all__ = ["GvfGains", "FieldSample", "virtual_input", "field_core", "field", "field_derivative"]

# relative floor for the tangential magnitude in the interior rate
# formula, and the scale of the boundary layer where alpha_dot is
# deliberately saturated instead of diverging
ALPHA_FLOOR_REL = 1e-6


@dataclass(frozen=True)
class GvfGains:
    """Gains of the field (k_e) and the heading loop (k_n)."""

    k_e: float = 1.0
    k_n: float = 1.0

    def __post_init__(self) -> None:
        if not self.k_e > 0:
            raise ValueError(f"k_e must be positive, got {self.k_e}")
        if not self.k_n > 0:
            raise ValueError(f"k_n must be positive, got {self.k_n}")


@dataclass(frozen=True)
class FieldSample:
    """Field evaluation at one state.

    ``f_dot`` is None unless the evaluation was given the drone
    velocity and gamma_ddot needed to differentiate the field.
    """

    f: np.ndarray
    branch: str
    alpha: float
    beta: np.ndarray
    phi: float
    u_phi: float
    f_dot: np.ndarray | None = None


def virtual_input(phi, gamma, gamma_dot, k_e):
    """Level-set velocity demand -k_e (phi - gamma) + gamma_dot."""
    out = -k_e * (np.asarray(phi, dtype=float) - gamma) + gamma_dot
    return float(out) if out.ndim == 0 else out


def field_core(
    phi,
    normal,
    tangent,
    speed: float,
    k_e: float,
    gamma,
    gamma_dot,
    gamma_ddot=None,
    p_dot=None,
) -> dict:
    """Vectorized field evaluation on stacked line geometry.

    Parameters
    ----------
    phi : array (...)
        Level values at the query points.
    normal, tangent : array (..., 2)
        Unit left normal (the gradient of phi) and unit tangent of
        each line.
    speed, k_e : float
        Ground speed and convergence gain.
    gamma, gamma_dot : array (...)
        Offset reference and its rate.
    gamma_ddot, p_dot : array (...), array (..., 2), optional
        Supply both to also get the field time derivative along p_dot.

    Returns
    -------
    dict with f (..., 2), interior (... bool), alpha, u_phi (...),
    beta (..., 2), and f_dot ((..., 2) or None).
    """
    phi = np.asarray(phi, dtype=float)
    u_phi = -k_e * (phi - gamma) + gamma_dot
    # unit gradient: zeta = grad/||grad||^2 = normal, so beta = u_phi * normal
    beta = u_phi[..., None] * normal
    beta_norm = np.abs(u_phi)
    interior = beta_norm <= speed
    alpha = np.sqrt(np.maximum(speed * speed - u_phi * u_phi, 0.0))
    f_interior = alpha[..., None] * tangent + beta
    safe_norm = np.where(interior, 1.0, beta_norm)
    f_exterior = speed * beta / safe_norm[..., None]
    f = np.where(interior[..., None], f_interior, f_exterior)

    f_dot = None
    if gamma_ddot is not None and p_dot is not None:
        phi_dot = np.sum(normal * p_dot, axis=-1)
        u_phi_dot = -k_e * (phi_dot - gamma_dot) + gamma_ddot
        beta_dot = u_phi_dot[..., None] * normal
        # interior: f_dot = alpha_dot t_hat + beta_dot, with
        # alpha_dot = -(beta . beta_dot)/alpha floored near the boundary
        alpha_safe = np.maximum(alpha, ALPHA_FLOOR_REL * speed)
        alpha_dot = -(u_phi * u_phi_dot) / alpha_safe
        f_dot_interior = alpha_dot[..., None] * tangent + beta_dot
        # exterior: f_dot = v (I/||b|| - b b^T/||b||^3) beta_dot, the
        # derivative of v beta/||beta|| (zero for lines, where beta_dot
        # stays parallel to beta)
        b_dot_b = np.sum(beta * beta_dot, axis=-1)
        f_dot_exterior = speed * (
            beta_dot / safe_norm[..., None]
            - beta * (b_dot_b / safe_norm**3)[..., None]
        )
        f_dot = np.where(interior[..., None], f_dot_interior, f_dot_exterior)

    return {
        "f": f,
        "interior": interior,
        "alpha": np.where(interior, alpha, 0.0),
        "beta": beta,
        "u_phi": u_phi,
        "phi": phi,
        "f_dot": f_dot,
    }


def _sample_from_core(core: dict) -> FieldSample:
    interior = bool(core["interior"])
    f_dot = core["f_dot"]
    return FieldSample(
        f=core["f"],
        branch="interior" if interior else "exterior",
        alpha=float(core["alpha"]),
        beta=core["beta"],
        phi=float(core["phi"]),
        u_phi=float(core["u_phi"]),
        f_dot=None if f_dot is None else f_dot,
    )


def field(
    path: StraightLinePath,
    position,
    speed: float,
    k_e: float,
    gamma: float = 0.0,
    gamma_dot: float = 0.0,
) -> FieldSample:
    """Evaluate the field at one position. ||f|| = v on both branches."""
    p = np.asarray(position, dtype=float)
    core = field_core(
        path.phi(p), path.gradient(p), path.tangent(), speed, k_e, gamma, gamma_dot
    )
    return _sample_from_core(core)


def field_derivative(
    path: StraightLinePath,
    position,
    velocity,
    speed: float,
    k_e: float,
    gamma: float = 0.0,
    gamma_dot: float = 0.0,
    gamma_ddot: float = 0.0,
) -> FieldSample:
    """Evaluate the field and its time derivative along ``velocity``."""
    p = np.asarray(position, dtype=float)
    v = np.asarray(velocity, dtype=float)
    core = field_core(
        path.phi(p),
        path.gradient(p),
        path.tangent(),
        speed,
        k_e,
        gamma,
        gamma_dot,
        gamma_ddot=gamma_ddot,
        p_dot=v,
    )
    return _sample_from_core(core)
