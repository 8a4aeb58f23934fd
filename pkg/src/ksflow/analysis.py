"""Trapping and non-trapping diagnostics at a fixed energy.

Verdicts are three-valued.  ``Escapes`` is a proof for the computed trajectory, because
past the escape radius an outward-moving point can never turn back.
``TrappedWithinBudget`` only says the orbit stayed inside the escape radius for the
time we looked.  ``Undetermined`` covers everything else.
"""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .dynamics import DEFAULT_OPTIONS, IntegratorOptions, PhaseState, hamiltonian, propagate
from .errors import EmptyShell, GridTooSmall, NoRadiusFound, WrongFamily
from .potential import PotentialSpec, ScalarField
from .quat_hopf import hopf, ks_matrix


def dilation_bracket(spec: PotentialSpec, state: PhaseState) -> float:
    """``{p, x.xi} = 2|xi|^2 - x.grad V(x)``, the time derivative of ``x.xi``."""
    spec.check_regular(state.x)
    x = np.asarray(state.x, dtype=float)
    return float(2.0 * state.xi @ state.xi - x @ spec.grad(x))


# ---------------------------------------------------------------------------
# escape radius


@dataclass(frozen=True)
class EscapeData:
    lam: float
    R1: float
    margin: float
    R_far: float
    n_checked: int


def fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    polar = np.arccos(1.0 - 2.0 * k / n)
    azimuth = math.pi * (1.0 + math.sqrt(5.0)) * k
    return np.stack([np.cos(azimuth) * np.sin(polar), np.sin(azimuth) * np.sin(polar),
                     np.cos(polar)], axis=-1)


def _worst_bracket(spec, lam, x):
    # the bracket grows with p, so the lowest admissible energy max(lam/2, V) is the worst case
    v = spec.value(x)
    radial = np.sum(x * spec.grad(x), axis=-1)
    return 2.0 * (np.maximum(lam / 2.0, v) - v) - radial


def escape_radius(spec: PotentialSpec, lam: float, growth: float = 1.25,
                  n_directions: int = 256, substeps: int = 4) -> EscapeData:
    """Smallest grid radius ``R1 >= R0`` past which ``{p, x.xi} >= lam/2`` whenever ``p >= lam/2``.

    Shells between ``R0`` and ``R_far`` are sampled on ``n_directions`` points.  Beyond
    ``R_far`` the declared decay constants give the bound analytically.
    """
    if lam <= 0:
        raise ValueError("escape radius needs lam > 0")
    if spec.decay is None:
        raise NoRadiusFound("potential declares no decay constants")
    rho, c0, c1 = spec.decay.rho, spec.decay.C0, spec.decay.C1
    if rho <= 0 or c0 < 0 or c1 < 0:
        raise NoRadiusFound("declared decay constants are inconsistent")
    # |2V + x.grad V| <= (2 C0 + C1) <x>^-rho
    amp = 2.0 * c0 + c1
    japanese_far = (2.0 * amp / lam) ** (1.0 / rho) if amp > 0 else 0.0
    R_far = max(spec.R0, math.sqrt(max(japanese_far**2 - 1.0, 0.0)))
    if not math.isfinite(R_far) or R_far > 1e8:
        raise NoRadiusFound(f"analytic tail bound only holds beyond |x| = {R_far:.3g}")

    grid = [spec.R0]
    while grid[-1] < R_far:
        grid.append(grid[-1] * growth)
    shells = []
    for a, b in zip(grid[:-1], grid[1:]):
        shells.extend(a * (b / a) ** (np.arange(substeps) / substeps))
    shells.append(grid[-1])
    shells = np.array(shells)

    dirs = fibonacci_sphere(n_directions)
    worst = np.empty(len(shells))
    for i, r in enumerate(shells):
        x = r * dirs
        jp = math.sqrt(1.0 + r * r)
        v = spec.value(x)
        g = np.linalg.norm(spec.grad(x), axis=-1)
        slack = 1.0 + 1e-9
        if np.max(np.abs(v)) * jp**rho > c0 * slack or np.max(g) * jp ** (rho + 1) > c1 * slack:
            raise NoRadiusFound(f"decay constants violated on the shell |x| = {r:.4g}")
        worst[i] = np.min(_worst_bracket(spec, lam, x))

    ok = worst >= lam / 2.0
    # R1 is the first grid radius past which every sampled shell is fine
    bad = np.nonzero(~ok)[0]
    if len(bad) == 0:
        R1 = grid[0]
    else:
        last_bad = shells[bad[-1]]
        R1 = next((g for g in grid if g > last_bad), None)
        if R1 is None:
            raise NoRadiusFound("bracket still below lam/2 at the analytic radius")
    tail = lam - amp * (1.0 + R_far**2) ** (-rho / 2.0)
    sampled = worst[shells >= R1 * (1 - 1e-12)]
    margin = float(min(np.min(sampled) if len(sampled) else np.inf, tail))
    return EscapeData(float(lam), float(R1), margin, float(R_far), len(shells) * n_directions)


# ---------------------------------------------------------------------------
# classification


class Verdict(str, enum.Enum):
    ESCAPES = "Escapes"
    TRAPPED = "TrappedWithinBudget"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class TrappingVerdict:
    forward: Verdict
    backward: Verdict
    escape_times: tuple[float | None, float | None]
    T_max: float
    collisions: int
    energy_drift: float
    R1: float

    @property
    def escapes_both(self) -> bool:
        return self.forward is Verdict.ESCAPES and self.backward is Verdict.ESCAPES

    def to_dict(self) -> dict:
        return {"forward": self.forward.value, "backward": self.backward.value,
                "escape_times": list(self.escape_times), "T_max": self.T_max,
                "collisions": self.collisions, "energy_drift": self.energy_drift,
                "R1": self.R1}


def _one_direction(spec, state, T_max, R1, opts):
    x, xi = state.x, state.xi
    if np.linalg.norm(x) >= R1 and x @ xi > 0:
        return Verdict.ESCAPES, 0.0, 0, 0.0
    tr = propagate(spec, state, T_max, opts, escape_radius=R1)
    if tr.stop_reason == "escaped":
        verdict = Verdict.ESCAPES
    elif np.linalg.norm(tr.final_state.x) <= R1:
        verdict = Verdict.TRAPPED
    else:
        verdict = Verdict.UNDETERMINED
    t_esc = tr.t_final if verdict is Verdict.ESCAPES else None
    return verdict, t_esc, len(tr.collisions), tr.energy_drift()


def classify(spec: PotentialSpec, initial: PhaseState, T_max: float,
             escape: EscapeData | float | None = None,
             opts: IntegratorOptions = DEFAULT_OPTIONS) -> TrappingVerdict:
    """Forward and backward verdicts for the orbit through ``initial``."""
    lam = hamiltonian(spec, initial)
    if lam <= 0:
        raise ValueError("classify needs positive energy")
    if escape is None:
        escape = escape_radius(spec, lam)
    R1 = escape.R1 if isinstance(escape, EscapeData) else float(escape)
    fwd = _one_direction(spec, initial, T_max, R1, opts)
    bwd = _one_direction(spec, initial.reversed(), T_max, R1, opts)
    # times of the backward run are measured backward from 0
    t_bwd = None if bwd[1] is None else -bwd[1]
    return TrappingVerdict(fwd[0], bwd[0], (fwd[1], t_bwd), float(T_max),
                           fwd[2] + bwd[2], max(fwd[3], bwd[3]), R1)


def _uniform_ball(rng, radius, n):
    u = rng.normal(size=(n, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return radius * rng.random(n)[:, None] ** (1.0 / 3.0) * u


def _allowed(spec, lam, x):
    with np.errstate(all="ignore"):
        v = spec.value(x)
    keep = v < lam
    if spec.n_sites:
        keep &= np.min(spec.site_distances(x), axis=-1) > 1e3 * spec.floor
    return keep, v


def sampling_radius(spec: PotentialSpec, lam: float, R1: float, rng: np.random.Generator,
                    min_fraction: float = 0.01, n_probe: int = 4096, growth: float = 1.25,
                    max_growth: int = 60) -> float:
    """``R1``, or the first ``R1 growth^k`` whose ball is at least ``min_fraction`` allowed.

    When ``{V < lam}`` misses the ball of radius ``R1`` altogether the shell inside is
    empty, yet incoming states just outside still need a trajectory to be classified.
    """
    radius = R1
    for _ in range(max_growth):
        keep, _ = _allowed(spec, lam, _uniform_ball(rng, radius, n_probe))
        if keep.mean() >= min_fraction:
            return float(radius)
        radius *= growth
    raise EmptyShell(f"no point with V < {lam} inside |x| <= {radius:.4g}")


def sample_shell(spec: PotentialSpec, lam: float, radius: float, n: int,
                 rng: np.random.Generator, max_tries: int = 1000) -> list[PhaseState]:
    """``n`` shell points with ``x`` uniform in ``{V < lam, |x| <= radius}``."""
    out: list[PhaseState] = []
    for _ in range(max_tries):
        batch = max(64, 2 * (n - len(out)))
        x = _uniform_ball(rng, radius, batch)
        dirs = rng.normal(size=(batch, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        keep, v = _allowed(spec, lam, x)
        for xk, vk, dk in zip(x[keep], np.atleast_1d(v)[keep], dirs[keep]):
            if len(out) == n:
                return out
            out.append(PhaseState.of(xk, math.sqrt(lam - vk) * dk))
        if len(out) == n:
            return out
    raise EmptyShell(f"could not draw {n} points with V < {lam} inside |x| <= {radius}")


def _classify_job(args):
    spec, state, T_max, R1, opts = args
    return classify(spec, state, T_max, R1, opts)


@dataclass
class ScanReport:
    lam: float
    seed: int | None
    R1: float
    radius: float
    states: list[PhaseState]
    verdicts: list[TrappingVerdict]
    runtime: float = field(default=0.0, compare=False)

    @property
    def escape_fraction(self) -> float:
        if not self.verdicts:
            return 1.0
        return sum(v.escapes_both for v in self.verdicts) / len(self.verdicts)

    def counts(self) -> dict:
        out = {"forward": {}, "backward": {}}
        for v in Verdict:
            out["forward"][v.value] = sum(r.forward is v for r in self.verdicts)
            out["backward"][v.value] = sum(r.backward is v for r in self.verdicts)
        out["both_escape"] = sum(r.escapes_both for r in self.verdicts)
        return out

    def non_escaping(self) -> list[dict]:
        return [
            {"index": k, "x": s.x.tolist(), "xi": s.xi.tolist(), **v.to_dict()}
            for k, (s, v) in enumerate(zip(self.states, self.verdicts))
            if not v.escapes_both
        ]

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "seed": self.seed,
            "n_samples": len(self.verdicts),
            "R1": self.R1,
            "sampling_radius": self.radius,
            "verdict_counts": self.counts(),
            "escape_fraction": self.escape_fraction,
            "non_escaping": self.non_escaping(),
            "max_energy_drift": max((v.energy_drift for v in self.verdicts), default=0.0),
            "collisions": sum(v.collisions for v in self.verdicts),
            "timing": {"runtime": self.runtime},
        }


def nontrap_scan(spec: PotentialSpec, lam: float, n_samples: int, T_max: float,
                 seed: int | None = 0, extra_states=(), threads: int = 1,
                 opts: IntegratorOptions = DEFAULT_OPTIONS) -> ScanReport:
    """Classify random points of the energy shell ``p = lam`` inside the escape radius.

    The ball is widened past ``R1`` only when it holds (almost) no allowed points,
    see :func:`sampling_radius`.
    ``extra_states`` are classified after the random samples (targeted seeds).
    Results are ordered by sample index whatever ``threads`` is.
    """
    if lam <= 0:
        raise ValueError("scan needs lam > 0")
    start = time.perf_counter()
    esc = escape_radius(spec, lam)
    rng = np.random.default_rng(seed)
    radius = esc.R1
    states = []
    if n_samples:
        radius = sampling_radius(spec, lam, esc.R1, rng)
        states = sample_shell(spec, lam, radius, n_samples, rng)
    states += [PhaseState.of(s.x, s.xi) for s in extra_states]
    jobs = [(spec, s, T_max, esc.R1, opts) for s in states]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            verdicts = list(pool.map(_classify_job, jobs))
    else:
        verdicts = [_classify_job(j) for j in jobs]
    return ScanReport(float(lam), seed, esc.R1, radius, states, verdicts,
                      time.perf_counter() - start)


def nontrap_threshold_repulsive(spec: PotentialSpec) -> float:
    """``(sum_j |s_j| / f_j)^-1``; below it every orbit of a repulsive Coulomb sum escapes."""
    if spec.family != "multi-coulomb" or spec.n_sites == 0:
        raise WrongFamily("threshold needs a multi-coulomb potential with sites")
    coeffs = spec._const
    if not np.all(coeffs > 0):
        raise WrongFamily("threshold needs every coefficient positive")
    total = float(np.sum(np.linalg.norm(spec.sites, axis=1) / coeffs))
    return math.inf if total == 0.0 else 1.0 / total


# ---------------------------------------------------------------------------
# Hill region topology


@dataclass
class HillTopology:
    lam: float
    bounds: tuple
    resolution: tuple
    count: int
    boxes: list
    cells: list
    site_component: list
    contains_attractive: list
    labels: np.ndarray = field(repr=False, compare=False)

    @property
    def trapping_certified(self) -> bool:
        return self.count >= 2

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "bounds": [list(b) for b in self.bounds],
            "resolution": list(self.resolution),
            "component_count": self.count,
            "components": [
                {"box": box, "cells": n, "contains_attractive_site": att}
                for box, n, att in zip(self.boxes, self.cells, self.contains_attractive)
            ],
            "site_component": self.site_component,
            "trapping_certified": self.trapping_certified,
        }

    def voxel_rows(self):
        idx = np.argwhere(self.labels > 0)
        for i, j, k in idx:
            yield int(i), int(j), int(k), int(self.labels[i, j, k])


def hill_components(spec: PotentialSpec, lam: float, bounds, resolution) -> HillTopology:
    """Connected components (6-connectivity) of ``{V >= lam} U S`` on a cell grid."""
    if lam <= 0:
        raise ValueError("hill topology needs lam > 0")
    bounds = tuple((float(a), float(b)) for a, b in bounds)
    if isinstance(resolution, int):
        resolution = (resolution,) * 3
    resolution = tuple(int(n) for n in resolution)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    n = np.array(resolution)
    h = (hi - lo) / n
    axes = [lo[d] + (np.arange(n[d]) + 0.5) * h[d] for d in range(3)]

    mask = np.zeros(resolution, dtype=bool)
    yy, zz = np.meshgrid(axes[1], axes[2], indexing="ij")
    for i, xv in enumerate(axes[0]):
        pts = np.stack([np.full_like(yy, xv), yy, zz], axis=-1)
        with np.errstate(all="ignore"):
            v = spec.value(pts)
        mask[i] = v >= lam
        if spec.n_sites:
            mask[i] |= np.min(spec.site_distances(pts), axis=-1) < spec.floor

    site_cells = []
    for s in spec.sites:
        c = np.floor((s - lo) / h).astype(int)
        if np.any(c < 0) or np.any(c >= n):
            raise GridTooSmall(f"site {s.tolist()} lies outside the grid")
        mask[tuple(c)] = True
        site_cells.append(tuple(c))

    faces = [mask[0], mask[-1], mask[:, 0], mask[:, -1], mask[:, :, 0], mask[:, :, -1]]
    if any(f.any() for f in faces):
        raise GridTooSmall("the Hill region touches the grid boundary")

    labels, count = ndimage.label(mask, structure=ndimage.generate_binary_structure(3, 1))
    boxes, cells = [], []
    for k, sl in enumerate(ndimage.find_objects(labels), start=1):
        boxes.append([[float(lo[d] + sl[d].start * h[d]), float(lo[d] + sl[d].stop * h[d])]
                      for d in range(3)])
        cells.append(int(np.count_nonzero(labels[sl] == k)))
    site_component = [int(labels[c]) for c in site_cells]
    attractive = [False] * count
    for sing, comp in zip(spec.singularities, site_component):
        if sing.attractive:
            attractive[comp - 1] = True
    return HillTopology(float(lam), bounds, resolution, int(count), boxes, cells,
                        site_component, attractive, labels)


# ---------------------------------------------------------------------------
# regularized virial identity


def regularized_virial_residual(f_const: float, W: ScalarField, tau: float, z, zeta,
                                relative: bool = False) -> float:
    """Left minus right side of the bracket identity for ``p~ = |zeta|^2 - c + |z|^2 (W o K - tau)``.

    With ``c = -f_const`` and ``b0 = zeta.z`` the identity reads::

        {p~, b0} = 2 p~ + 2c + |z|^2 (4 tau - 4 W o K - z.grad(W o K)).

    The left side goes through the chain rule ``grad(W o K) = 2 Lambda(z)^T grad W``.
    The right side uses the Euler relation ``z.grad(W o K) = 2 K(z).grad W``.
    """
    z = np.asarray(z, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    c = -float(f_const)
    x = hopf(z)
    w = float(W.value(x))
    gw = np.asarray(W.grad(x), dtype=float)
    r2 = float(z @ z)
    z2 = float(zeta @ zeta)
    p_tilde = z2 - c + r2 * (w - tau)
    grad_z = 2.0 * z * (w - tau) + r2 * 2.0 * (ks_matrix(z).T @ gw)
    bracket = 2.0 * z2 - float(z @ grad_z)
    euler = 2.0 * float(x @ gw)
    rhs = 2.0 * p_tilde + 2.0 * c + r2 * (4.0 * tau - 4.0 * w - euler)
    res = bracket - rhs
    if relative:
        scale = 2.0 * z2 + abs(c) + r2 * (abs(w) + abs(tau) + abs(euler))
        return res / scale if scale else res
    return res
