"""Saturated consensus on windowed path parameters.

Each drone publishes a sliding-window average of its path parameter
and applies a non-negative, bounded correction computed from neighbor
disagreement through the saturation

    sat(s) = tau_l + (tau_h - tau_l)/r * clip(s, 0, r).

The reference protocol xdot_i = sat(sum_j (x_j - x_i)) drives every
state to max(x(0)) on a spanning tree: laggards get a positive push,
the front runner holds sat(negative) = tau_l. integrate_consensus
implements that protocol exactly for analysis and demos; the flight
loop converts the same correction into a speed budget (see sim).

The Lyapunov function is V = sum_i int_0^{etabar_i} satbar(s) ds with
etabar = eta - r/2 and satbar the odd-symmetrized saturation; V >= 0,
V = 0 exactly at eta = (r/2) 1, and V is non-increasing along the
protocol on any connected graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph

__all__ = [
    "SaturationParams",
    "sat",
    "consensus_input",
    "desired_avg_velocity",
    "lyapunov_value",
    "WindowAverager",
    "neighbor_gather",
    "neighbor_disagreement",
    "ConsensusRun",
    "integrate_consensus",
]


@dataclass(frozen=True)
class SaturationParams:
    """Bounds and linear zone of the consensus saturation.

    tau_l is the output on non-positive disagreement (0 disables any
    push on the front runner), tau_h the ceiling, r the width of the
    linear zone.
    """

    tau_l: float = 0.0
    tau_h: float = 1.0
    r: float = 1.0

    def __post_init__(self) -> None:
        if self.tau_l < 0:
            raise ValueError(f"tau_l must be non-negative, got {self.tau_l}")
        if not self.tau_h > self.tau_l:
            raise ValueError(f"tau_h must exceed tau_l, got {self.tau_h} <= {self.tau_l}")
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")


def sat(s, params: SaturationParams):
    """Saturation tau_l + (tau_h - tau_l)/r * clip(s, 0, r). Array-capable."""
    s = np.asarray(s, dtype=float)
    out = params.tau_l + (params.tau_h - params.tau_l) / params.r * np.clip(s, 0.0, params.r)
    return float(out) if out.ndim == 0 else out


def consensus_input(own_value: float, neighbor_values, params: SaturationParams) -> float:
    """Saturated disagreement sat(sum_j (x_j - own)). Empty neighborhood gives sat(0)."""
    total = float(sum(v - own_value for v in neighbor_values))
    return float(sat(total, params))


def desired_avg_velocity(u, speed: float, k_u: float):
    """Speed budget v - k_u * u left after the consensus correction."""
    out = speed - k_u * np.asarray(u, dtype=float)
    return float(out) if out.ndim == 0 else out


def lyapunov_value(eta, params: SaturationParams):
    """Closed-form V(eta), summed over the last axis.

    Per component, with etabar = eta - r/2, slope k = (tau_h - tau_l)/r
    and amplitude a = (tau_h - tau_l)/2:

        |etabar| <= r/2:  k etabar^2 / 2
        otherwise:        k r^2 / 8 + a (|etabar| - r/2)
    """
    eta = np.asarray(eta, dtype=float)
    etabar = eta - params.r / 2.0
    k = (params.tau_h - params.tau_l) / params.r
    a = (params.tau_h - params.tau_l) / 2.0
    abse = np.abs(etabar)
    per_node = np.where(
        abse <= params.r / 2.0,
        0.5 * k * etabar * etabar,
        k * params.r * params.r / 8.0 + a * (abse - params.r / 2.0),
    )
    out = np.sum(per_node, axis=-1)
    return float(out) if out.ndim == 0 else out


class WindowAverager:
    """Sliding trapezoidal average over a fixed time window.

    Samples arrive at a fixed cadence dt; sample k is taken at t = k dt.
    Once the elapsed time covers the window the average integrates the
    newest full sample intervals plus a linearly interpolated partial
    interval so the support is exactly ``window`` long. Before that it
    averages over everything seen so far ([0, t]); the first sample is
    returned as is.

    Values may be any fixed trailing shape (one slot per drone); the
    average is taken elementwise over time.
    """

    def __init__(self, window: float, dt: float, shape: tuple[int, ...] = ()):
        if not window > 0:
            raise ValueError(f"window must be positive, got {window}")
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if dt > window:
            raise ValueError(f"dt {dt} exceeds the window {window}")
        self.window = float(window)
        self.dt = float(dt)
        self.shape = tuple(shape)
        # floor(window/dt) full intervals, one partial, one spare slot
        self._capacity = int(math.floor(window / dt + 1e-9)) + 3
        self._buffer = np.zeros((self._capacity,) + self.shape)
        self._head = 0  # next write slot
        self._count = 0  # total samples pushed

    @property
    def count(self) -> int:
        return self._count

    @property
    def time(self) -> float:
        """Timestamp of the newest sample, k dt."""
        if self._count == 0:
            raise ValueError("no samples pushed yet")
        return (self._count - 1) * self.dt

    def push(self, value) -> None:
        value = np.asarray(value, dtype=float)
        if value.shape != self.shape:
            raise ValueError(f"expected shape {self.shape}, got {value.shape}")
        self._buffer[self._head] = value
        self._head = (self._head + 1) % self._capacity
        self._count += 1

    def retained(self) -> np.ndarray:
        """Retained samples in chronological order, newest last."""
        n = min(self._count, self._capacity)
        if n < self._capacity:
            return self._buffer[:n].copy()
        return np.concatenate([self._buffer[self._head:], self._buffer[: self._head]])

    def average(self):
        """Current windowed (or warm-up) average."""
        if self._count == 0:
            raise ValueError("no samples pushed yet")
        samples = self.retained()
        if self._count == 1:
            out = samples[-1]
            return float(out) if out.ndim == 0 else out.copy()
        elapsed = (self._count - 1) * self.dt
        if elapsed < self.window:
            # warm-up: plain trapezoid over [0, elapsed]
            integral = np.trapezoid(samples, dx=self.dt, axis=0)
            out = integral / elapsed
            return float(out) if out.ndim == 0 else out
        w = self.window / self.dt
        k = int(math.floor(w + 1e-9))
        fr = w - k
        if fr < 1e-9:
            fr = 0.0
        newest = samples[-(k + 1):]
        integral = np.trapezoid(newest, dx=self.dt, axis=0)
        if fr > 0.0:
            # window start falls inside the next-older interval; take
            # the sliver [start, t_{-(k+1)}] with a lerped left value
            left = samples[-(k + 2)]
            right = samples[-(k + 1)]
            x_start = left + (1.0 - fr) * (right - left)
            integral = integral + fr * self.dt * 0.5 * (x_start + right)
        out = integral / self.window
        return float(out) if out.ndim == 0 else out


def neighbor_gather(graph: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Padded neighbor table (idx, mask), each (n_nodes, max_degree).

    Row i lists the sorted neighbors of node i, padded with i itself;
    mask is 1.0 on real slots. Gathered sums then run in a fixed slot
    order independent of how the drones are batched, which keeps runs
    bit-for-bit reproducible.
    """
    nbrs = [graph.neighbors(i) for i in range(graph.n_nodes)]
    dmax = max((len(n) for n in nbrs), default=0)
    dmax = max(dmax, 1)
    idx = np.empty((graph.n_nodes, dmax), dtype=np.int64)
    mask = np.zeros((graph.n_nodes, dmax))
    for i, row in enumerate(nbrs):
        for d in range(dmax):
            if d < len(row):
                idx[i, d] = row[d]
                mask[i, d] = 1.0
            else:
                idx[i, d] = i
    return idx, mask


def neighbor_disagreement(x, idx: np.ndarray, mask: np.ndarray):
    """sum_j (x_j - x_i) for every node, batched over leading axes of x."""
    x = np.asarray(x, dtype=float)
    gathered = x[..., idx]  # (..., N, D)
    return np.sum((gathered - x[..., None]) * mask, axis=-1)


@dataclass
class ConsensusRun:
    """Trajectory record of the reference consensus integrator."""

    times: np.ndarray
    lyapunov: np.ndarray
    final_state: np.ndarray
    final_input: np.ndarray
    states: np.ndarray | None = None


def integrate_consensus(
    graph: Graph,
    x0,
    params: SaturationParams,
    dt: float,
    t_end: float,
    record_states: bool = False,
) -> ConsensusRun:
    """Integrate xdot = sat(sum_j (x_j - x_i)) with RK4.

    ``x0`` may be (n_nodes,) or batched (..., n_nodes); every initial
    condition integrates in lock step. Requires a spanning tree (the
    protocol's agreement guarantee needs one). Returns per-step
    Lyapunov values and the final state and input; full states only
    when ``record_states``.
    """
    check = graph.check_spanning_tree()
    if not check.is_tree:
        raise ValueError(f"consensus integration needs a spanning tree: {check.message}")
    x = np.array(x0, dtype=float)
    if x.shape[-1] != graph.n_nodes:
        raise ValueError(f"x0 last axis {x.shape[-1]} != n_nodes {graph.n_nodes}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    n_steps = int(round(t_end / dt))
    if n_steps < 1:
        raise ValueError(f"t_end {t_end} shorter than one step dt {dt}")
    idx, mask = neighbor_gather(graph)

    def rate(state: np.ndarray) -> np.ndarray:
        return sat(neighbor_disagreement(state, idx, mask), params)

    batch_shape = x.shape[:-1]
    lyap = np.empty((n_steps + 1,) + batch_shape)
    states = np.empty((n_steps + 1,) + x.shape) if record_states else None
    lyap[0] = lyapunov_value(neighbor_disagreement(x, idx, mask), params)
    if states is not None:
        states[0] = x
    for k in range(n_steps):
        k1 = rate(x)
        k2 = rate(x + 0.5 * dt * k1)
        k3 = rate(x + 0.5 * dt * k2)
        k4 = rate(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        lyap[k + 1] = lyapunov_value(neighbor_disagreement(x, idx, mask), params)
        if states is not None:
            states[k + 1] = x
    return ConsensusRun(
        times=np.arange(n_steps + 1) * dt,
        lyapunov=lyap,
        final_state=x,
        final_input=rate(x),
        states=states,
    )
