"""Lock-step closed-loop swarm engine with deterministic telemetry.

Every tick runs the same four stages:

1. publish (serial): each drone's path parameter is pushed into its
   sliding-window averager and the averaged values are snapshotted,
   optionally with a communication delay for what neighbors see.
2. control (chunkable): from the published snapshot each drone forms
   its saturated lead over its neighbors, converts it to a progress
   budget xdot_d = v - k_u u, schedules the oscillation amplitude,
   evaluates the guiding field and commands a heading rate. A drone
   that is ahead commands a large amplitude and waits; one that is
   behind flies straight. In shortfall coordinates delta = v t - xbar
   this is exactly the saturated consensus protocol of
   :mod:`gvfswarm.consensus`, so its agreement guarantee applies.
3. telemetry (serial): one CSV row per tick, 9 significant digits.
4. advance (chunkable): RK4 on the unicycle under the held heading
   rate plus wind, and the exact exponential amplitude filter.

All per-drone math is elementwise or reduces along fixed per-drone
axes, so splitting the drones across worker threads reproduces the
sequential results bit for bit; telemetry digests are compared by the
test suite to enforce that.
"""

from __future__ import annotations

import csv
import hashlib
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oscillation as osc
from .consensus import WindowAverager, lyapunov_value, neighbor_gather, neighbor_disagreement
from .gvf import field_core
from .scenario import Scenario
from .vehicle import heading_rate_core, unicycle_step

__all__ = ["SimulationResult", "run", "TELEMETRY_FLOAT_FORMAT"]

TELEMETRY_FLOAT_FORMAT = "%.9g"

# per-drone telemetry column stems, in row order
_DRONE_COLUMNS = (
    "p{i}_x_m", "p{i}_y_m", "theta{i}_rad", "phi{i}_m", "gamma{i}_m",
    "x{i}_m", "xbar{i}_m", "u{i}", "xdot_d{i}_mps", "A{i}_m", "A_d{i}_m",
    "omega{i}_rad_s", "branch{i}",
)


@dataclass
class SimulationResult:
    """Complete tick history of one run plus the summary document."""

    scenario: Scenario
    times: np.ndarray
    positions: np.ndarray
    headings: np.ndarray
    path_parameters: np.ndarray
    averaged_parameters: np.ndarray
    phis: np.ndarray
    gammas: np.ndarray
    amplitudes: np.ndarray
    commanded_amplitudes: np.ndarray
    inputs: np.ndarray
    desired_velocities: np.ndarray
    omegas: np.ndarray
    branches: np.ndarray
    edge_diffs: np.ndarray
    lyapunov: np.ndarray
    summary: dict = field(default_factory=dict)
    telemetry_digest: str | None = None


def _telemetry_header(n_drones: int, n_edges: int) -> list[str]:
    cols = ["t_s"]
    for i in range(1, n_drones + 1):
        cols.extend(stem.format(i=i) for stem in _DRONE_COLUMNS)
    cols.extend(f"z{k}_m" for k in range(1, n_edges + 1))
    cols.append("V")
    return cols


def _first_sustained_below(series: np.ndarray, threshold: float) -> int | None:
    """Index of the first value below threshold that stays below to the end."""
    below = series < threshold
    if bool(below.all()):
        return 0
    last_violation = int(np.max(np.nonzero(~below)[0]))
    if last_violation == len(series) - 1:
        return None
    return last_violation + 1


def run(
    scenario: Scenario,
    telemetry_path=None,
    workers: int | None = None,
    overrides=(),
    compute_digest: bool = False,
) -> SimulationResult:
    """Simulate a scenario from t = 0 to t_end.

    Parameters
    ----------
    scenario : Scenario
        A built (hence validated) scenario.
    telemetry_path : path-like, optional
        Write the per-tick CSV here. Without it (and without
        ``compute_digest``) no rows are formatted, which is faster.
    workers : int, optional
        Split the per-drone control and advance stages across this many
        threads. Results are bit-identical to the sequential run.
    overrides : sequence of str
        Dotted overrides already applied to the scenario, recorded
        verbatim in the summary for provenance.
    compute_digest : bool
        Also produce a SHA-256 of the telemetry byte stream (implied
        content even when no file is written).
    """
    sc = scenario
    n = sc.n_drones
    m = sc.graph.n_edges
    dt = sc.dt
    n_ticks = sc.n_ticks
    speed = sc.speed
    cfg = sc.oscillation
    w = cfg.w_gamma
    sat_p = sc.saturation
    slope = (sat_p.tau_h - sat_p.tau_l) / sat_p.r
    cap = cfg.amplitude_cap
    wind = sc.wind

    origins = np.stack([np.asarray(p.origin, dtype=float) for p in sc.paths])
    tangents = np.stack([p.tangent() for p in sc.paths])
    normals = np.stack([p.gradient(p.origin) for p in sc.paths])
    idx, mask = neighbor_gather(sc.graph)
    tails = np.array([e[0] for e in sc.graph.edges], dtype=np.int64)
    heads = np.array([e[1] for e in sc.graph.edges], dtype=np.int64)

    # mutable state
    pos = sc.initial_positions()
    theta = sc.initial_headings.copy()
    amp = np.zeros(n)
    amp_rate = np.zeros(n)
    amp_accel = np.zeros(n)
    averager = WindowAverager(window=cfg.period, dt=dt, shape=(n,))
    snapshots: deque[np.ndarray] = deque(maxlen=sc.comm_delay_ticks + 1)

    # per-tick scratch, written by the control stage
    scratch = {
        "u": np.empty(n), "xdot_d": np.empty(n), "a_cmd": np.empty(n),
        "gamma": np.empty(n), "phi": np.empty(n), "omega": np.empty(n),
        "exterior": np.empty(n, dtype=np.int8),
    }

    times = np.arange(n_ticks + 1) * dt
    hist = SimulationResult(
        scenario=sc,
        times=times,
        positions=np.empty((n_ticks + 1, n, 2)),
        headings=np.empty((n_ticks + 1, n)),
        path_parameters=np.empty((n_ticks + 1, n)),
        averaged_parameters=np.empty((n_ticks + 1, n)),
        phis=np.empty((n_ticks + 1, n)),
        gammas=np.empty((n_ticks + 1, n)),
        amplitudes=np.empty((n_ticks + 1, n)),
        commanded_amplitudes=np.empty((n_ticks + 1, n)),
        inputs=np.empty((n_ticks + 1, n)),
        desired_velocities=np.empty((n_ticks + 1, n)),
        omegas=np.empty((n_ticks + 1, n)),
        branches=np.empty((n_ticks + 1, n), dtype=np.int8),
        edge_diffs=np.empty((n_ticks + 1, m)),
        lyapunov=np.empty(n_ticks + 1),
    )

    digest = hashlib.sha256() if (compute_digest or telemetry_path is not None) else None
    writer = None
    fh = None
    if telemetry_path is not None:
        fh = open(telemetry_path, "w", newline="")
        writer = csv.writer(fh)
    header = _telemetry_header(n, m)
    if digest is not None:
        digest.update((",".join(header) + "\r\n").encode())
    if writer is not None:
        writer.writerow(header)

    pool = ThreadPoolExecutor(max_workers=workers) if workers and workers > 1 else None
    if pool is not None:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        chunks = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    else:
        chunks = [slice(0, n)]

    def control(sl: slice, t: float, xbar: np.ndarray, delayed: np.ndarray) -> None:
        lead = np.sum((xbar[sl, None] - delayed[idx[sl]]) * mask[sl], axis=-1)
        u = sat_p.tau_l + slope * np.clip(lead, 0.0, sat_p.r)
        xdot_d = speed - sc.k_u * u
        if sc.fixed_amplitude is None:
            raw = sc.oscillation.k_a * np.sqrt(
                np.maximum(speed * speed - xdot_d * xdot_d, 0.0)
            ) / w
            a_cmd = np.minimum(raw, cap)
        else:
            a_cmd = np.full(u.shape, sc.fixed_amplitude)
        g = osc.gamma(t, amp[sl], w)
        g_dot = osc.gamma_dot(t, amp[sl], amp_rate[sl], w)
        g_ddot = osc.gamma_ddot(t, amp[sl], amp_rate[sl], amp_accel[sl], w)
        phi = np.sum((pos[sl] - origins[sl]) * normals[sl], axis=-1)
        p_dot = np.stack(
            [speed * np.cos(theta[sl]), speed * np.sin(theta[sl])], axis=-1
        )
        core = field_core(
            phi, normals[sl], tangents[sl], speed, sc.k_e[sl],
            g, g_dot, gamma_ddot=g_ddot, p_dot=p_dot,
        )
        omega = heading_rate_core(core["f"], core["f_dot"], p_dot, speed, sc.k_n[sl])
        scratch["u"][sl] = u
        scratch["xdot_d"][sl] = xdot_d
        scratch["a_cmd"][sl] = a_cmd
        scratch["gamma"][sl] = g
        scratch["phi"][sl] = phi
        scratch["omega"][sl] = omega
        scratch["exterior"][sl] = (~core["interior"]).astype(np.int8)

    def advance(sl: slice) -> None:
        pos[sl], theta[sl] = unicycle_step(pos[sl], theta[sl], scratch["omega"][sl], speed, dt, wind)
        amp[sl], amp_rate[sl], amp_accel[sl] = osc.relaxation_step(
            amp[sl], scratch["a_cmd"][sl], dt, cfg.tau_a
        )

    def run_chunks(fn, *args) -> None:
        if pool is None:
            fn(chunks[0], *args)
            return
        futures = [pool.submit(fn, sl, *args) for sl in chunks]
        for fut in futures:
            fut.result()

    try:
        for k in range(n_ticks + 1):
            t = times[k]
            # publish
            x = np.sum((pos - origins) * tangents, axis=-1)
            averager.push(x)
            xbar = averager.average()
            snapshots.append(xbar)
            delayed = snapshots[0]
            # control
            run_chunks(control, t, xbar, delayed)
            # telemetry
            hist.positions[k] = pos
            hist.headings[k] = theta
            hist.path_parameters[k] = x
            hist.averaged_parameters[k] = xbar
            hist.phis[k] = scratch["phi"]
            hist.gammas[k] = scratch["gamma"]
            hist.amplitudes[k] = amp
            hist.commanded_amplitudes[k] = scratch["a_cmd"]
            hist.inputs[k] = scratch["u"]
            hist.desired_velocities[k] = scratch["xdot_d"]
            hist.omegas[k] = scratch["omega"]
            hist.branches[k] = scratch["exterior"]
            z = xbar[tails] - xbar[heads] if m else np.empty(0)
            hist.edge_diffs[k] = z
            eta = neighbor_disagreement(xbar, idx, mask)
            hist.lyapunov[k] = lyapunov_value(eta, sat_p)
            if digest is not None or writer is not None:
                row = [TELEMETRY_FLOAT_FORMAT % t]
                for i in range(n):
                    row.extend(
                        TELEMETRY_FLOAT_FORMAT % v
                        for v in (
                            pos[i, 0], pos[i, 1], theta[i], scratch["phi"][i],
                            scratch["gamma"][i], x[i], xbar[i], scratch["u"][i],
                            scratch["xdot_d"][i], amp[i], scratch["a_cmd"][i],
                            scratch["omega"][i], scratch["exterior"][i],
                        )
                    )
                row.extend(TELEMETRY_FLOAT_FORMAT % v for v in z)
                row.append(TELEMETRY_FLOAT_FORMAT % hist.lyapunov[k])
                if digest is not None:
                    digest.update((",".join(row) + "\r\n").encode())
                if writer is not None:
                    writer.writerow(row)
            # advance
            if k < n_ticks:
                run_chunks(advance)
    finally:
        if pool is not None:
            pool.shutdown()
        if fh is not None:
            fh.close()

    hist.telemetry_digest = digest.hexdigest() if digest is not None else None
    hist.summary = _summarize(hist, workers=workers, overrides=overrides)
    return hist


def _summarize(hist: SimulationResult, workers: int | None, overrides) -> dict:
    sc = hist.scenario
    spread = hist.path_parameters.max(axis=1) - hist.path_parameters.min(axis=1)
    if hist.edge_diffs.shape[1]:
        max_edge = np.abs(hist.edge_diffs).max(axis=1)
    else:
        max_edge = np.zeros(len(hist.times))
    conv_idx = _first_sustained_below(max_edge, sc.convergence_threshold)
    vel = sc.speed * np.stack(
        [np.cos(hist.headings), np.sin(hist.headings)], axis=-1
    ) + sc.wind
    ground_speed = np.linalg.norm(vel, axis=-1)
    return {
        "name": sc.name,
        "overrides": [str(o) for o in overrides],
        "seed": sc.seed,
        "n_drones": int(sc.n_drones),
        "n_edges": int(sc.graph.n_edges),
        "dt_s": float(sc.dt),
        "t_end_s": float(sc.t_end),
        "n_ticks": int(sc.n_ticks),
        "workers": int(workers) if workers else 1,
        "convergence_threshold_m": float(sc.convergence_threshold),
        "time_to_convergence_s": None if conv_idx is None else float(hist.times[conv_idx]),
        "final_max_edge_diff_m": float(max_edge[-1]),
        "final_max_pairwise_spread_m": float(spread[-1]),
        "final_amplitudes_m": [float(a) for a in hist.amplitudes[-1]],
        "final_max_amplitude_m": float(hist.amplitudes[-1].max()),
        "final_max_abs_phi_m": float(np.abs(hist.phis[-1]).max()),
        "max_abs_heading_rate_rad_s": float(np.abs(hist.omegas).max()),
        "ground_speed_min_mps": float(ground_speed.min()),
        "ground_speed_max_mps": float(ground_speed.max()),
        "lyapunov_final": float(hist.lyapunov[-1]),
        "telemetry_sha256": hist.telemetry_digest,
    }
