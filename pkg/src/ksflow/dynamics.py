"""Broken-trajectory flow for ``p(x, xi) = |xi|^2 + V(x)``.

Away from the singular sites Hamilton's equations ``x' = 2 xi``, ``xi' = -grad V`` are
integrated directly.  Inside a small ball around a site the state is lifted to KS
coordinates ``(z, zeta)`` and the regularized Hamiltonian::

    H(z, zeta) = |zeta|^2 / 4 + f_j(K_j(z)) + |z|^2 (W_j(K_j(z)) - tau)

is integrated in fictitious time ``s`` with ``dt/ds = |z|^2``.  Collisions (``z = 0``) are
regular points of that flow.  They are recorded and traversed without special
handling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (
    AtSingularity,
    BudgetExceeded,
    EventOverflow,
    KSFlowError,
    LiftFailure,
    StepRejected,
    ZeroBasePoint,
)
from .potential import PotentialSpec, RegularizedChart, ZeroField
from .quat_hopf import bilinear_constraint, hopf, ks_lift, ks_project

TRAJECTORY_SCHEMA_VERSION = 1
# solve_ivp refuses relative tolerances below 100 eps
_MIN_RTOL = 1e-13


@dataclass(frozen=True)
class PhaseState:
    x: np.ndarray
    xi: np.ndarray
    chart: str = "physical"

    @classmethod
    def of(cls, x, xi) -> PhaseState:
        return cls(np.asarray(x, dtype=float).reshape(3).copy(),
                   np.asarray(xi, dtype=float).reshape(3).copy())

    def reversed(self) -> PhaseState:
        return PhaseState(self.x, -self.xi, self.chart)


@dataclass(frozen=True)
class ExtendedState:
    t: float
    tau: float
    z: np.ndarray
    zeta: np.ndarray
    s: float


@dataclass(frozen=True)
class CollisionEvent:
    t0: float
    site: int
    v: np.ndarray
    energy: float


@dataclass(frozen=True)
class IntegratorOptions:
    rtol: float = 1e-10
    atol: float = 1e-10
    method: str = "DOP853"
    switch_factor: float = 0.25
    # KS segments are short; a tighter tolerance there keeps the regularized
    # Hamiltonian drift well below the physical-chart tolerance at little cost
    ks_tol_factor: float = 0.01
    # leave the KS chart a little outside the entry sphere so charts cannot chatter
    exit_factor: float = 1.1
    regularize_repulsive: bool = True
    lift_angle: float = 0.0
    collision_threshold: float = 1e-12
    max_steps: int = 2_000_000
    max_events_per_segment: int = 100_000
    s_max: float = 1e9

    def switch_radius(self, spec: PotentialSpec, j: int) -> float:
        return spec.switch_radius(j, self.switch_factor)


DEFAULT_OPTIONS = IntegratorOptions()


def hamiltonian(spec: PotentialSpec, state: PhaseState) -> float:
    spec.check_regular(state.x)
    return float(state.xi @ state.xi + spec.value(state.x))


# ---------------------------------------------------------------------------
# right-hand sides


def _grad_function(spec: PotentialSpec):
    """Single-point gradient; scalar arithmetic when every coefficient is constant."""
    if not spec._all_const:
        return spec.grad
    terms = [(float(s[0]), float(s[1]), float(s[2]), float(c))
             for s, c in zip(spec.sites, spec._const)]
    background = None if isinstance(spec.background, ZeroField) else spec.background

    def grad(x):
        x0, x1, x2 = x.tolist()
        g0 = g1 = g2 = 0.0
        for sx, sy, sz, f in terms:
            d0, d1, d2 = x0 - sx, x1 - sy, x2 - sz
            r2 = d0 * d0 + d1 * d1 + d2 * d2
            c = f / (r2 * math.sqrt(r2))
            g0 -= c * d0
            g1 -= c * d1
            g2 -= c * d2
        out = np.array([g0, g1, g2])
        if background is not None:
            out += background.grad(x)
        return out

    return grad


def _physical_rhs(spec: PotentialSpec):
    grad = _grad_function(spec)

    def rhs(t, y):
        out = np.empty(6)
        out[:3] = 2.0 * y[3:]
        out[3:] = -grad(y[:3])
        return out

    return rhs


def _ks_rhs(chart: RegularizedChart):
    def rhs(s, y):
        z = y[1:5]
        out = np.empty(9)
        out[0] = z @ z
        out[1:5] = 0.5 * y[5:]
        out[5:] = -chart.grad1(z)
        return out

    return rhs


def regularized_hamiltonian(chart: RegularizedChart, z, zeta):
    z = np.asarray(z, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    return 0.25 * np.sum(zeta * zeta, axis=-1) + chart.f0 + chart.value(z)


def _check_status(sol) -> None:
    if sol.status == -1:
        raise StepRejected(sol.message)


# ---------------------------------------------------------------------------
# segments


class Segment:
    """One chart's worth of a trajectory with dense output.

    ``chart`` is ``"physical"`` or ``"ks"``; KS segments carry the site index ``site``,
    the energy parameter ``tau`` and a solution in fictitious time whose first
    component is physical time.
    """

    def __init__(self, chart, sol, nodes, values, site=None, tau=None, regularized=None):
        self.chart = chart
        self.sol = sol
        self.nodes = np.asarray(nodes)
        self.values = np.asarray(values)
        self.site = site
        self.tau = tau
        self.regularized = regularized
        if chart == "physical":
            self.times = self.nodes
        else:
            self.times = self.values[0]
        self.t_start = float(self.times[0])
        self.t_end = float(self.times[-1])

    @property
    def label(self) -> str:
        return "physical" if self.chart == "physical" else f"ks:{self.site}"

    @property
    def n_steps(self) -> int:
        return max(len(self.nodes) - 1, 0)

    @property
    def opening_step(self) -> float | None:
        """First accepted step; seeds the next segment in the same chart."""
        if len(self.nodes) < 3:
            return None
        return float(self.nodes[1] - self.nodes[0])

    def _s_at(self, t: float) -> float:
        k = int(np.searchsorted(self.times, t))
        if k <= 0:
            return float(self.nodes[0])
        if k >= len(self.times):
            return float(self.nodes[-1])
        lo, hi = float(self.nodes[k - 1]), float(self.nodes[k])
        if self.times[k] == t:
            return hi
        return brentq(lambda s: self.sol(s)[0] - t, lo, hi, xtol=1e-15, rtol=1e-15)

    def state_at(self, t: float) -> PhaseState:
        if self.chart == "physical":
            y = self.sol(t)
            return PhaseState(y[:3].copy(), y[3:].copy())
        y = self.sol(self._s_at(t))
        x, xi = ks_project(y[1:5], y[5:])
        return PhaseState(x + self.regularized.site, xi, self.label)

    def sample_arrays(self):
        """Node times and projected ``(x, xi)`` arrays."""
        if self.chart == "physical":
            return self.times, self.values[:3].T, self.values[3:].T
        z = self.values[1:5].T
        zeta = self.values[5:].T
        with np.errstate(divide="ignore", invalid="ignore"):
            x, xi = ks_project(z, zeta, tol=-1.0)
        return self.times, x + self.regularized.site, xi

    def extended_states(self) -> list[ExtendedState]:
        if self.chart == "physical":
            return []
        return [
            ExtendedState(float(y[0]), self.tau, y[1:5].copy(), y[5:].copy(), float(s))
            for s, y in zip(self.nodes, self.values.T)
        ]

    def ks_invariants(self):
        """``(H_reg, l)`` along the KS nodes."""
        z = self.values[1:5].T
        zeta = self.values[5:].T
        return regularized_hamiltonian(self.regularized, z, zeta), bilinear_constraint(z, zeta)


def direct_step(spec: PotentialSpec, state: PhaseState, dt: float,
                opts: IntegratorOptions = DEFAULT_OPTIONS) -> PhaseState:
    """Advance ``state`` by physical time ``dt`` in the physical chart."""
    spec.check_regular(state.x)
    y0 = np.concatenate([state.x, state.xi])
    sol = solve_ivp(_physical_rhs(spec), (0.0, dt), y0, method=opts.method,
                    rtol=opts.rtol, atol=opts.atol)
    _check_status(sol)
    y = sol.y[:, -1]
    spec.check_regular(y[:3])
    return PhaseState(y[:3].copy(), y[3:].copy())


def _physical_segment(spec, state, t_start, t_end, opts, ks_sites, escape_radius,
                      first_step=None):
    events = []
    for j in ks_sites:
        s_j = spec.sites[j]
        r_sw = opts.switch_radius(spec, j)

        def enter(t, y, s_j=s_j, r_sw=r_sw):
            d = y[:3] - s_j
            return math.sqrt(d @ d) - r_sw

        enter.terminal = True
        enter.direction = -1
        events.append(enter)
    if escape_radius is not None:
        def escape(t, y):
            x = y[:3]
            return min(math.sqrt(x @ x) - escape_radius, x @ y[3:])

        escape.terminal = True
        escape.direction = 1
        events.append(escape)
    y0 = np.concatenate([state.x, state.xi])
    if first_step is not None:
        first_step = min(first_step, t_end - t_start)
    sol = solve_ivp(_physical_rhs(spec), (t_start, t_end), y0, method=opts.method,
                    rtol=opts.rtol, atol=opts.atol, dense_output=True,
                    events=events or None, first_step=first_step or None)
    _check_status(sol)
    seg = Segment("physical", sol.sol, sol.t, sol.y)
    fired = None
    if sol.status == 1:
        for k, hits in enumerate(sol.t_events):
            if len(hits):
                fired = "escape" if k == len(ks_sites) else ks_sites[k]
                break
    return seg, fired


def ks_segment(spec: PotentialSpec, j: int, entry: PhaseState, tau: float,
               s_max: float | None = None, t_start: float = 0.0,
               t_end: float = math.inf, opts: IntegratorOptions = DEFAULT_OPTIONS,
               first_step: float | None = None):
    """Integrate the regularized flow at site ``j`` from the physical state ``entry``.

    Stops when the projected point leaves the exit sphere, when physical time
    reaches ``t_end`` or after fictitious time ``s_max``.  Returns
    ``(segment, exit_state, collisions)``; ``exit_state`` is ``None`` unless the
    segment ended by leaving the chart.
    """
    chart = RegularizedChart(spec, j, tau)
    rel = np.asarray(entry.x, dtype=float) - chart.site
    try:
        lift = ks_lift(rel, entry.xi, opts.lift_angle)
    except ZeroBasePoint as exc:
        raise LiftFailure(f"entry state sits on site {j}") from exc
    r_sw = opts.switch_radius(spec, j)
    r_exit = opts.exit_factor * r_sw

    def leave(s, y):
        z = y[1:5]
        return z @ z - r_exit

    leave.terminal = True
    leave.direction = 1

    def clock(s, y):
        return y[0] - t_end

    clock.terminal = True
    clock.direction = 1

    def closest(s, y):
        return y[1:5] @ y[5:]

    closest.direction = 1

    y0 = np.concatenate([[t_start], lift.z, lift.zeta])
    span = opts.s_max if s_max is None else s_max
    events = [leave, closest] + ([clock] if math.isfinite(t_end) else [])
    sol = solve_ivp(_ks_rhs(chart), (0.0, span), y0, method=opts.method,
                    rtol=max(opts.rtol * opts.ks_tol_factor, _MIN_RTOL),
                    atol=opts.atol * opts.ks_tol_factor,
                    dense_output=True, events=events,
                    first_step=min(first_step, span) if first_step else None)
    _check_status(sol)
    seg = Segment("ks", sol.sol, sol.t, sol.y, site=j, tau=tau, regularized=chart)

    collisions = []
    threshold = opts.collision_threshold * r_sw * r_sw
    if len(sol.t_events[1]) > opts.max_events_per_segment:
        raise EventOverflow(f"{len(sol.t_events[1])} periapsis events in one KS segment")
    for y in sol.y_events[1]:
        z, zeta = y[1:5], y[5:]
        if z @ z < threshold:
            if chart.f0 > 0:
                raise KSFlowError(f"collision with repulsive site {j}")
            k = hopf(zeta)
            collisions.append(CollisionEvent(float(y[0]), j, -k / np.linalg.norm(k),
                                             float(tau)))

    exit_state = None
    if len(sol.t_events[0]):
        y = sol.y_events[0][0]
        x, xi = ks_project(y[1:5], y[5:])
        exit_state = PhaseState(x + chart.site, xi)
    return seg, exit_state, collisions


# ---------------------------------------------------------------------------
# broken trajectories


@dataclass
class BrokenTrajectory:
    """Dense broken trajectory on ``[0, T]`` (or ``[T, 0]`` when ``reversed``)."""

    segments: list[Segment]
    collisions: list[CollisionEvent]
    initial: PhaseState
    energy: float
    reversed: bool = False
    stop_reason: str = "time"
    spec: PotentialSpec | None = field(default=None, repr=False)

    @property
    def t_final(self) -> float:
        t = self.segments[-1].t_end if self.segments else 0.0
        return -t if self.reversed else t

    @property
    def final_state(self) -> PhaseState:
        return self.state_at(self.t_final)

    def collision_times(self) -> list[float]:
        return [c.t0 for c in self.collisions]

    def _forward_state(self, t: float) -> PhaseState:
        for seg in self.segments:
            if t <= seg.t_end:
                return seg.state_at(max(t, seg.t_start))
        return self.segments[-1].state_at(self.segments[-1].t_end)

    def state_at(self, t: float) -> PhaseState:
        if self.reversed:
            return self._forward_state(-t).reversed()
        return self._forward_state(t)

    def samples(self) -> Iterator[tuple[float, str, np.ndarray, np.ndarray]]:
        """Yield ``(t, chart, x, xi)`` at every integrator node in time order."""
        rows = []
        for seg in self.segments:
            ts, xs, xis = seg.sample_arrays()
            for t, x, xi in zip(ts, xs, xis):
                rows.append((float(t), seg.label, x, xi))
        if self.reversed:
            rows = [(-t, c, x, -xi) for t, c, x, xi in reversed(rows)]
        return iter(rows)

    @property
    def n_steps(self) -> int:
        return sum(seg.n_steps for seg in self.segments)

    def energy_drift(self) -> float:
        """Largest ``|p - lambda| / max(lambda, 1)`` over physical-chart nodes."""
        worst = 0.0
        scale = max(abs(self.energy), 1.0)
        for seg in self.segments:
            if seg.chart != "physical":
                continue
            x = seg.values[:3].T
            xi = seg.values[3:].T
            p = np.sum(xi * xi, axis=1) + self.spec.value(x)
            worst = max(worst, float(np.max(np.abs(p - self.energy))) / scale)
        return worst

    def ks_drift(self) -> tuple[float, float]:
        """Largest per-segment drift of ``(H_reg, l)`` across KS segments."""
        worst_h = worst_l = 0.0
        for seg in self.segments:
            if seg.chart != "ks":
                continue
            h, ell = seg.ks_invariants()
            worst_h = max(worst_h, float(np.max(np.abs(h - h[0]))))
            worst_l = max(worst_l, float(np.max(np.abs(ell - ell[0]))))
        return worst_h, worst_l

    def records(self, meta: dict | None = None) -> Iterator[dict]:
        """JSON-lines records; ``meta`` entries are merged into the header."""
        header = {"type": "header", "version": TRAJECTORY_SCHEMA_VERSION,
                  "lambda": self.energy, "x0": self.initial.x.tolist(),
                  "xi0": self.initial.xi.tolist(), "t_final": self.t_final,
                  "stop_reason": self.stop_reason}
        header.update(meta or {})
        yield header
        events = sorted(
            [(c.t0 * (-1 if self.reversed else 1), c) for c in self.collisions],
            key=lambda item: item[0],
        )
        k = 0
        for t, chart, x, xi in self.samples():
            while k < len(events) and events[k][0] <= t:
                t0, c = events[k]
                yield {"type": "collision", "t0": t0, "site": c.site, "v": c.v.tolist()}
                k += 1
            with np.errstate(all="ignore"):
                p = float(xi @ xi + self.spec.value(x)) if self.spec is not None else None
            yield {"type": "sample", "t": t, "chart": chart, "x": x.tolist(),
                   "xi": xi.tolist(), "p": p}
        for t0, c in events[k:]:
            yield {"type": "collision", "t0": t0, "site": c.site, "v": c.v.tolist()}

    def write_jsonl(self, path, meta: dict | None = None) -> None:
        with open(path, "w") as fh:
            for rec in self.records(meta):
                fh.write(json.dumps(rec) + "\n")


def _ks_sites(spec: PotentialSpec, opts: IntegratorOptions) -> list[int]:
    return [j for j, s in enumerate(spec.singularities)
            if s.attractive or opts.regularize_repulsive]


def _chart_for(spec, x, ks_sites, opts) -> int | None:
    for j in ks_sites:
        if np.linalg.norm(x - spec.sites[j]) <= opts.switch_radius(spec, j):
            return j
    return None


def propagate(spec: PotentialSpec, initial: PhaseState, T: float,
              opts: IntegratorOptions = DEFAULT_OPTIONS,
              escape_radius: float | None = None) -> BrokenTrajectory:
    """Broken trajectory through ``initial`` over ``[0, T]``.

    Negative ``T`` integrates ``(x, -xi)`` forward and reverses the result.  With
    ``escape_radius`` set, integration stops at the first physical-chart point with
    ``|x| >= escape_radius`` moving outward (inward when going backward).
    """
    initial = PhaseState.of(initial.x, initial.xi)
    spec.check_regular(initial.x)
    energy = hamiltonian(spec, initial)
    if T < 0:
        fwd = propagate(spec, initial.reversed(), -T, opts, escape_radius)
        return replace(fwd, initial=initial, reversed=True)

    ks_sites = _ks_sites(spec, opts)
    segments: list[Segment] = []
    collisions: list[CollisionEvent] = []
    state = initial
    t = 0.0
    stop = "time"
    j = _chart_for(spec, state.x, ks_sites, opts)
    opening: dict = {}
    while True:
        if j is None:
            seg, fired = _physical_segment(spec, state, t, T, opts, ks_sites, escape_radius,
                                           opening.get(None))
            segments.append(seg)
            if fired == "escape":
                stop = "escaped"
                break
            state = seg.state_at(seg.t_end)
            j = fired
        else:
            seg, exit_state, hits = ks_segment(spec, j, state, energy, t_start=t,
                                               t_end=T, opts=opts, first_step=opening.get(j))
            segments.append(seg)
            collisions.extend(hits)
            if exit_state is None:
                break
            state = exit_state
            j = None
        if seg.opening_step:
            opening[seg.site] = seg.opening_step
        t = seg.t_end
        if sum(s.n_steps for s in segments) > opts.max_steps:
            raise BudgetExceeded(f"more than {opts.max_steps} integrator steps")
        if t >= T:
            break
    return BrokenTrajectory(segments, collisions, initial, energy, stop_reason=stop, spec=spec)
