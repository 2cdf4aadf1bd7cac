"""Scenario documents: load, override, validate, build.

A scenario is a single YAML mapping with unit-suffixed keys:

    name: eight-drones
    speed_mps: 8.0
    dt_s: 0.02
    t_end_s: 600.0
    seed: 11
    wind_mps: [0.0, 0.0]
    convergence_threshold_m: 1.0
    graph:
      n_drones: 8
      edges: [[1, 2], [2, 3], ...]        # 1-based
    paths:
      alpha_rad: 0.0
      origin_m: [0.0, 0.0]
      spacing_m: 30.0                     # or explicit origins_m
    gvf:
      k_e: 1.0                            # scalar or one value per drone
      k_n: 1.0
    oscillation:
      w_gamma_rad_s: 0.6
      k_a: 1.35
      amplitude_cap_m: 12.0               # or "auto" = v/w
      tau_a_s: auto                       # auto = 5/w
      fixed_amplitude_m: null             # set to bypass the consensus schedule
    consensus:
      k_u: 0.16
      r_m: 30.0
      tau_l: 0.0
      tau_h: auto                         # auto = (v - eps)/k_u; a number must match it
      comm_delay_ticks: 0
    initial:
      parameter_span_m: [-15.0, 15.0]     # sampled with seed, or explicit parameters_m
      offsets_m: 0.0                      # initial lateral offsets
      headings_rad: auto                  # auto = path direction

validate_mapping returns a list of human-readable violations (empty
means valid); build_scenario performs the same checks and then
constructs the typed Scenario, so a scenario that validates cleanly
always builds and vice versa.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .graph import Graph
from .oscillation import OscillationConfig, epsilon
from .consensus import SaturationParams
from .paths import StraightLinePath

__all__ = [
    "Scenario",
    "ScenarioError",
    "load_mapping",
    "apply_overrides",
    "validate_mapping",
    "build_scenario",
]

_TOP_KEYS = {
    "name", "speed_mps", "dt_s", "t_end_s", "seed", "wind_mps",
    "convergence_threshold_m", "graph", "paths", "gvf", "oscillation",
    "consensus", "initial",
}
_GRAPH_KEYS = {"n_drones", "edges"}
_PATH_KEYS = {"alpha_rad", "origin_m", "spacing_m", "origins_m"}
_GVF_KEYS = {"k_e", "k_n"}
_OSC_KEYS = {"w_gamma_rad_s", "k_a", "amplitude_cap_m", "tau_a_s", "fixed_amplitude_m"}
_CONS_KEYS = {"k_u", "r_m", "tau_l", "tau_h", "comm_delay_ticks"}
_INIT_KEYS = {"parameters_m", "parameter_span_m", "offsets_m", "headings_rad"}

# explicit tau_h must match (v - eps)/k_u to this relative tolerance
_TAU_H_RTOL = 1e-6


class ScenarioError(Exception):
    """Invalid scenario document."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True, eq=False)
class Scenario:
    """Fully validated simulation setup."""

    name: str
    speed: float
    dt: float
    t_end: float
    seed: int | None
    graph: Graph
    paths: tuple[StraightLinePath, ...]
    k_e: np.ndarray
    k_n: np.ndarray
    oscillation: OscillationConfig
    saturation: SaturationParams
    k_u: float
    comm_delay_ticks: int
    fixed_amplitude: float | None
    initial_parameters: np.ndarray
    initial_offsets: np.ndarray
    initial_headings: np.ndarray
    wind: np.ndarray
    convergence_threshold: float

    @property
    def n_drones(self) -> int:
        return self.graph.n_nodes

    @property
    def n_ticks(self) -> int:
        return int(round(self.t_end / self.dt))

    def initial_positions(self) -> np.ndarray:
        """Initial planar positions, shape (n_drones, 2)."""
        out = np.empty((self.n_drones, 2))
        for i, path in enumerate(self.paths):
            foot = path.parametric_point(self.initial_parameters[i])
            out[i] = foot + self.initial_offsets[i] * path.gradient(foot)
        return out


def load_mapping(path) -> dict:
    """Read a scenario document from a YAML file."""
    text = Path(path).read_text()
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ScenarioError([f"scenario file {path} is not a mapping"])
    return data


def apply_overrides(mapping: dict, overrides) -> dict:
    """Apply dotted key=value overrides onto a copy of the mapping.

    Values parse as YAML scalars, so numbers, booleans, nulls and
    inline lists all work: "consensus.r_m=25", "wind_mps=[0, 3.5]".
    Unknown keys are left for validation to flag.
    """
    out = copy.deepcopy(mapping)
    for item in overrides:
        if "=" not in item:
            raise ScenarioError([f"override {item!r} is not of the form key.path=value"])
        dotted, raw = item.split("=", 1)
        keys = [k for k in dotted.strip().split(".") if k]
        if not keys:
            raise ScenarioError([f"override {item!r} has an empty key path"])
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ScenarioError([f"override {item!r} has an unparsable value: {exc}"]) from exc
        node = out
        for key in keys[:-1]:
            nxt = node.get(key)
            if not isinstance(nxt, dict):
                nxt = {}
                node[key] = nxt
            node = nxt
        node[keys[-1]] = value
    return out


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _pos_num(x) -> bool:
    return _is_num(x) and math.isfinite(x) and x > 0


def _section(mapping: dict, key: str, allowed: set, bad: list) -> dict:
    sec = mapping.get(key, {})
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        bad.append(f"{key}: must be a mapping")
        return {}
    for k in sec:
        if k not in allowed:
            bad.append(f"{key}.{k}: unknown key")
    return sec


def _per_drone(value, n: int, label: str, bad: list) -> np.ndarray | None:
    """Accept a scalar or a length-n list of numbers."""
    if _is_num(value):
        return np.full(n, float(value))
    if isinstance(value, (list, tuple)):
        if len(value) != n or not all(_is_num(v) for v in value):
            bad.append(f"{label}: expected a number or {n} numbers")
            return None
        return np.array([float(v) for v in value])
    bad.append(f"{label}: expected a number or {n} numbers")
    return None


def validate_mapping(mapping: dict) -> list[str]:
    """Check a raw scenario mapping; returns violations, empty if valid."""
    bad: list[str] = []
    if not isinstance(mapping, dict):
        return ["scenario document must be a mapping"]
    for k in mapping:
        if k not in _TOP_KEYS:
            bad.append(f"{k}: unknown key")

    name = mapping.get("name", "scenario")
    if not isinstance(name, str) or not name:
        bad.append("name: must be a non-empty string")

    speed_raw = mapping.get("speed_mps")
    speed = None
    if isinstance(speed_raw, (list, tuple)):
        if speed_raw and all(_pos_num(v) for v in speed_raw):
            vals = {float(v) for v in speed_raw}
            if len(vals) == 1:
                speed = vals.pop()
            else:
                bad.append("speed_mps: all drones must share one ground speed")
        else:
            bad.append("speed_mps: must be a positive number or equal positive numbers")
    elif _pos_num(speed_raw):
        speed = float(speed_raw)
    else:
        bad.append("speed_mps: required positive number")

    dt = mapping.get("dt_s")
    if not _pos_num(dt):
        bad.append("dt_s: required positive number")
        dt = None
    t_end = mapping.get("t_end_s")
    if not _pos_num(t_end):
        bad.append("t_end_s: required positive number")
        t_end = None
    if dt is not None and t_end is not None and t_end < dt:
        bad.append(f"t_end_s: must cover at least one step of dt_s ({t_end} < {dt})")

    seed = mapping.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        bad.append("seed: must be a non-negative integer or absent")

    wind = mapping.get("wind_mps", [0.0, 0.0])
    if not (
        isinstance(wind, (list, tuple))
        and len(wind) == 2
        and all(_is_num(w) and math.isfinite(w) for w in wind)
    ):
        bad.append("wind_mps: must be two finite numbers [east, north]")

    threshold = mapping.get("convergence_threshold_m", 1.0)
    if not _pos_num(threshold):
        bad.append("convergence_threshold_m: must be a positive number")

    # graph
    gsec = _section(mapping, "graph", _GRAPH_KEYS, bad)
    n = gsec.get("n_drones")
    graph = None
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        bad.append("graph.n_drones: required integer >= 1")
        n = None
    else:
        edges = gsec.get("edges", [])
        if edges is None:
            edges = []
        ok_shape = isinstance(edges, (list, tuple)) and all(
            isinstance(e, (list, tuple))
            and len(e) == 2
            and all(isinstance(v, int) and not isinstance(v, bool) for v in e)
            for e in edges
        )
        if not ok_shape:
            bad.append("graph.edges: must be a list of 1-based [i, j] pairs")
        else:
            try:
                graph = Graph.from_one_based(n, edges)
            except ValueError as exc:
                bad.append(f"graph.edges: {exc}")
        if graph is not None:
            check = graph.check_spanning_tree()
            if not check.is_tree:
                bad.append(f"graph: must be a spanning tree, {check.message}")

    # paths
    psec = _section(mapping, "paths", _PATH_KEYS, bad)
    alpha = psec.get("alpha_rad", 0.0)
    if not (_is_num(alpha) and math.isfinite(alpha)):
        bad.append("paths.alpha_rad: must be a finite number")
    origin = psec.get("origin_m", [0.0, 0.0])
    if not (
        isinstance(origin, (list, tuple))
        and len(origin) == 2
        and all(_is_num(v) and math.isfinite(v) for v in origin)
    ):
        bad.append("paths.origin_m: must be two finite numbers")
    origins = psec.get("origins_m")
    spacing = psec.get("spacing_m")
    if origins is not None:
        ok = isinstance(origins, (list, tuple)) and (n is None or len(origins) == n) and all(
            isinstance(o, (list, tuple))
            and len(o) == 2
            and all(_is_num(v) and math.isfinite(v) for v in o)
            for o in origins
        )
        if not ok:
            bad.append("paths.origins_m: must list one [x, y] per drone")
    else:
        if n is not None and n > 1 and not (_is_num(spacing) and math.isfinite(spacing)):
            bad.append("paths.spacing_m: required (finite number) when origins_m is absent")

    # gvf gains
    vsec = _section(mapping, "gvf", _GVF_KEYS, bad)
    if n is not None:
        for key in ("k_e", "k_n"):
            arr = _per_drone(vsec.get(key, 1.0), n, f"gvf.{key}", bad)
            if arr is not None and not np.all(arr > 0):
                bad.append(f"gvf.{key}: must be positive")

    # oscillation
    osec = _section(mapping, "oscillation", _OSC_KEYS, bad)
    w = osec.get("w_gamma_rad_s")
    if not _pos_num(w):
        bad.append("oscillation.w_gamma_rad_s: required positive number")
        w = None
    k_a = osec.get("k_a", 1.35)
    if not (_is_num(k_a) and k_a > 1.0):
        bad.append("oscillation.k_a: must exceed 1")
        k_a = None
    cap = osec.get("amplitude_cap_m", "auto")
    if cap != "auto":
        if not _pos_num(cap):
            bad.append("oscillation.amplitude_cap_m: must be a positive number or 'auto'")
            cap = None
        elif speed is not None and w is not None and cap > speed / w * (1.0 + 1e-9):
            bad.append(
                f"oscillation.amplitude_cap_m: {cap} exceeds the kinematic limit v/w = {speed / w:.6g}"
            )
    tau_a = osec.get("tau_a_s", "auto")
    if tau_a != "auto" and not _pos_num(tau_a):
        bad.append("oscillation.tau_a_s: must be a positive number or 'auto'")
    fixed = osec.get("fixed_amplitude_m")
    if fixed is not None:
        if not (_is_num(fixed) and fixed >= 0.0):
            bad.append("oscillation.fixed_amplitude_m: must be a non-negative number or null")
        elif speed is not None and w is not None and fixed > speed / w * (1.0 + 1e-9):
            bad.append(
                f"oscillation.fixed_amplitude_m: {fixed} exceeds the kinematic limit v/w = {speed / w:.6g}"
            )
    if dt is not None and w is not None and dt >= 0.1 / w:
        bad.append(
            f"dt_s: {dt} too coarse for the oscillation, need dt < 0.1/w_gamma = {0.1 / w:.6g}"
        )

    # consensus
    csec = _section(mapping, "consensus", _CONS_KEYS, bad)
    k_u = csec.get("k_u")
    if not _pos_num(k_u):
        bad.append("consensus.k_u: required positive number")
        k_u = None
    r = csec.get("r_m")
    if not _pos_num(r):
        bad.append("consensus.r_m: required positive number")
    tau_l = csec.get("tau_l", 0.0)
    if not (_is_num(tau_l) and tau_l >= 0.0):
        bad.append("consensus.tau_l: must be non-negative")
        tau_l = None
    tau_h = csec.get("tau_h", "auto")
    if tau_h != "auto" and not _pos_num(tau_h):
        bad.append("consensus.tau_h: must be a positive number or 'auto'")
    elif (
        tau_h != "auto"
        and None not in (speed, k_a, k_u, tau_l)
    ):
        auto = (speed - epsilon(speed, k_a)) / k_u
        if abs(tau_h - auto) > _TAU_H_RTOL * auto:
            bad.append(
                f"consensus.tau_h: {tau_h} disagrees with (v - eps)/k_u = {auto:.9g}; "
                "set 'auto' or match it"
            )
        if tau_l is not None and tau_h <= tau_l:
            bad.append("consensus.tau_h: must exceed tau_l")
    delay = csec.get("comm_delay_ticks", 0)
    if not isinstance(delay, int) or isinstance(delay, bool) or delay < 0:
        bad.append("consensus.comm_delay_ticks: must be a non-negative integer")

    # initial conditions
    isec = _section(mapping, "initial", _INIT_KEYS, bad)
    params = isec.get("parameters_m")
    span = isec.get("parameter_span_m")
    if (params is None) == (span is None):
        bad.append("initial: give exactly one of parameters_m or parameter_span_m")
    if params is not None and n is not None:
        if not (
            isinstance(params, (list, tuple))
            and len(params) == n
            and all(_is_num(v) and math.isfinite(v) for v in params)
        ):
            bad.append(f"initial.parameters_m: must list {n} finite numbers")
    if span is not None:
        ok = (
            isinstance(span, (list, tuple))
            and len(span) == 2
            and all(_is_num(v) and math.isfinite(v) for v in span)
            and span[0] <= span[1]
        )
        if not ok:
            bad.append("initial.parameter_span_m: must be [low, high] with low <= high")
        if seed is None:
            bad.append("seed: required when initial.parameter_span_m is used")
    if n is not None:
        off = isec.get("offsets_m", 0.0)
        _per_drone(off, n, "initial.offsets_m", bad)
        headings = isec.get("headings_rad", "auto")
        if headings != "auto":
            _per_drone(headings, n, "initial.headings_rad", bad)
    return bad


def build_scenario(mapping: dict) -> Scenario:
    """Validate and construct the typed scenario."""
    bad = validate_mapping(mapping)
    if bad:
        raise ScenarioError(bad)

    name = mapping.get("name", "scenario")
    speed_raw = mapping.get("speed_mps")
    speed = float(speed_raw[0]) if isinstance(speed_raw, (list, tuple)) else float(speed_raw)
    dt = float(mapping["dt_s"])
    t_end = float(mapping["t_end_s"])
    seed = mapping.get("seed")
    wind = np.array([float(v) for v in mapping.get("wind_mps", [0.0, 0.0])])
    threshold = float(mapping.get("convergence_threshold_m", 1.0))

    gsec = mapping.get("graph", {})
    n = int(gsec["n_drones"])
    graph = Graph.from_one_based(n, gsec.get("edges") or [])

    psec = mapping.get("paths") or {}
    alpha = float(psec.get("alpha_rad", 0.0))
    origin = psec.get("origin_m", [0.0, 0.0])
    origins = psec.get("origins_m")
    if origins is None:
        spacing = float(psec.get("spacing_m", 0.0))
        base = np.array([float(origin[0]), float(origin[1])])
        normal = np.array([-math.sin(alpha), math.cos(alpha)])
        origins = [base + i * spacing * normal for i in range(n)]
    paths = tuple(
        StraightLinePath(origin=(float(o[0]), float(o[1])), alpha_rad=alpha) for o in origins
    )

    vsec = mapping.get("gvf") or {}
    scratch: list[str] = []
    k_e = _per_drone(vsec.get("k_e", 1.0), n, "gvf.k_e", scratch)
    k_n = _per_drone(vsec.get("k_n", 1.0), n, "gvf.k_n", scratch)

    osec = mapping.get("oscillation", {})
    w = float(osec["w_gamma_rad_s"])
    k_a = float(osec.get("k_a", 1.35))
    cap = osec.get("amplitude_cap_m", "auto")
    tau_a = osec.get("tau_a_s", "auto")
    oscillation = OscillationConfig(
        speed=speed,
        w_gamma=w,
        k_a=k_a,
        amplitude_cap=None if cap == "auto" else float(cap),
        tau_a=None if tau_a == "auto" else float(tau_a),
    )
    fixed = osec.get("fixed_amplitude_m")
    fixed = None if fixed is None else float(fixed)

    csec = mapping.get("consensus", {})
    k_u = float(csec["k_u"])
    r = float(csec["r_m"])
    tau_l = float(csec.get("tau_l", 0.0))
    tau_h = csec.get("tau_h", "auto")
    if tau_h == "auto":
        tau_h = (speed - epsilon(speed, k_a)) / k_u
    saturation = SaturationParams(tau_l=tau_l, tau_h=float(tau_h), r=r)
    delay = int(csec.get("comm_delay_ticks", 0))

    isec = mapping.get("initial", {})
    if isec.get("parameters_m") is not None:
        initial_parameters = np.array([float(v) for v in isec["parameters_m"]])
    else:
        lo, hi = isec["parameter_span_m"]
        rng = np.random.default_rng(seed)
        initial_parameters = rng.uniform(float(lo), float(hi), size=n)
    initial_offsets = _per_drone(isec.get("offsets_m", 0.0), n, "initial.offsets_m", scratch)
    headings = isec.get("headings_rad", "auto")
    if headings == "auto":
        initial_headings = np.full(n, alpha)
    else:
        initial_headings = _per_drone(headings, n, "initial.headings_rad", scratch)

    return Scenario(
        name=str(name),
        speed=speed,
        dt=dt,
        t_end=t_end,
        seed=None if seed is None else int(seed),
        graph=graph,
        paths=paths,
        k_e=k_e,
        k_n=k_n,
        oscillation=oscillation,
        saturation=saturation,
        k_u=k_u,
        comm_delay_ticks=delay,
        fixed_amplitude=fixed,
        initial_parameters=initial_parameters,
        initial_offsets=initial_offsets,
        initial_headings=initial_headings,
        wind=wind,
        convergence_threshold=threshold,
    )
