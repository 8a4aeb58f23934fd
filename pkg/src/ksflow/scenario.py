"""Scenario documents, the built-in catalogue and deterministic report files.

A scenario is a JSON object::

    {
      "name": "repulsive-pair",
      "potential": {"family": "multi-coulomb", "sites": [[1, 0, 0], [-1, 0, 0]],
                    "coefficients": [1, 1]},
      "energy": 0.4,
      "energies": [0.1, 0.2, 0.3, 0.4],
      "initial_conditions": [{"x": [0, 3, 0], "xi": [0, -0.3, 0]},
                             {"x": [0, 3, 0], "direction": [0, -1, 0]}],
      "sampler": {"n_samples": 200, "seed": 7},
      "budget": {"T": 10, "T_max": 200, "max_steps": 2000000,
                 "rtol": 1e-10, "atol": 1e-10},
      "hill_grid": {"energy": 10, "bounds": [[-2, 2], [-2, 2], [-2, 2]], "resolution": 128}
    }

Only ``potential`` is mandatory.  An initial condition given by ``direction`` gets
``|xi| = sqrt(energy - V(x))``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import IntegratorOptions, PhaseState
from .errors import AtSingularity, ConfigError, KSFlowError
from .potential import PotentialSpec, potential_from_dict

_DEFAULT_BUDGET = {"T": 10.0, "T_max": 200.0, "max_steps": 2_000_000,
                   "rtol": 1e-10, "atol": 1e-10, "switch_factor": 0.25}

_PAIR = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]

BUILTIN = {
    "free": {
        "potential": {"family": "multi-coulomb", "sites": [], "coefficients": []},
        "energy": 1.0,
        "initial_conditions": [{"x": [-5.0, 0.5, 0.0], "xi": [1.0, 0.0, 0.0]}],
        "sampler": {"n_samples": 20, "seed": 1},
        "budget": {"T": 10.0, "T_max": 50.0},
    },
    "kepler-radial": {
        "potential": {"family": "multi-coulomb", "sites": [[0.0, 0.0, 0.0]],
                      "coefficients": [-1.0]},
        "energy": 0.5,
        "initial_conditions": [{"x": [2.0, 0.0, 0.0], "direction": [-1.0, 0.0, 0.0]}],
        "budget": {"T": 10.0, "T_max": 100.0},
    },
    "kepler-circular": {
        "potential": {"family": "multi-coulomb", "sites": [[0.0, 0.0, 0.0]],
                      "coefficients": [-1.0]},
        "initial_conditions": [{"x": [1.0, 0.0, 0.0], "xi": [0.0, 0.7071067811865476, 0.0]}],
        "budget": {"T": 20.0},
    },
    "repulsive-pair": {
        "potential": {"family": "multi-coulomb", "sites": _PAIR, "coefficients": [1.0, 1.0]},
        "energy": 0.4,
        "energies": [0.1, 0.2, 0.3, 0.4, 0.45],
        "initial_conditions": [{"x": [0.0, 6.0, 0.0], "direction": [0.0, -1.0, 0.0]}],
        "sampler": {"n_samples": 200, "seed": 7},
        "budget": {"T": 20.0, "T_max": 200.0},
        "hill_grid": {"energy": 10.0, "bounds": [[-2, 2], [-2, 2], [-2, 2]],
                      "resolution": 128},
    },
    "two-attractive-shuttle": {
        "potential": {"family": "multi-coulomb", "sites": _PAIR,
                      "coefficients": [-1.0, -1.0]},
        "energy": 0.1,
        "initial_conditions": [{"x": [0.0, 0.0, 0.0], "direction": [1.0, 0.0, 0.0]}],
        "budget": {"T": 20.0, "T_max": 1000.0},
    },
    "attractive-repulsive": {
        "potential": {"family": "multi-coulomb", "sites": [[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
                      "coefficients": [-1.0, 1.0]},
        "energy": 1.0,
        "initial_conditions": [{"x": [0.0, 2.0, 0.0], "direction": [0.0, -1.0, 0.0]}],
        "budget": {"T": 10.0, "T_max": 200.0},
        "hill_grid": {"bounds": [[-2, 3], [-2, 3], [-2, 3]], "resolution": 128},
    },
    "yukawa": {
        "potential": {"family": "yukawa", "strength": 1.0, "screening": 1.0,
                      "site": [0.0, 0.0, 0.0]},
        "energy": 0.1,
        "energies": [0.005, 0.01, 0.02, 0.05, 0.1],
        "initial_conditions": [{"x": [0.0, 1.5, 0.0], "direction": [1.0, 0.0, 0.0]}],
        "sampler": {"n_samples": 100, "seed": 3},
        "budget": {"T": 20.0, "T_max": 200.0},
    },
    "molecular": {
        "potential": {"family": "smeared-molecular", "e0": 1.0,
                      "nuclei": [{"site": [0.7, 0.0, 0.0], "charge": 1.0},
                                 {"site": [-0.7, 0.0, 0.0], "charge": 1.0}],
                      "clouds": [{"center": [0.7, 0.0, 0.0], "a": 1.0, "q": 1.0},
                                 {"center": [-0.7, 0.0, 0.0], "a": 1.0, "q": 1.0}]},
        "energy": 0.5,
        "initial_conditions": [{"x": [0.0, 2.0, 0.0], "direction": [0.1, -1.0, 0.0]}],
        "budget": {"T": 20.0, "T_max": 200.0},
    },
}


# ---------------------------------------------------------------------------
# canonical JSON


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return obj


def canonical_dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"))


def digest(obj) -> str:
    return hashlib.sha256(canonical_dumps(obj).encode()).hexdigest()


def report_digest(report: dict) -> str:
    """Hash of a report with its ``timing`` block and own ``digest`` left out."""
    return digest({k: v for k, v in report.items() if k not in ("timing", "digest")})


def write_report(path, body: dict, scenario_hash: str) -> dict:
    """Write ``body`` as canonical, indented JSON.

    Wall-clock figures under ``timing`` go to a ``.timing.json`` sidecar, so the report
    itself is byte-identical across reruns with the same inputs.
    """
    path = Path(path)
    body = dict(body)
    timing = body.pop("timing", None)
    doc = {"tool": {"name": "ksflow", "version": __version__},
           "scenario_hash": scenario_hash, **body}
    doc["digest"] = report_digest(doc)
    path.write_text(json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n")
    if timing is not None:
        side = path.with_name(path.stem + ".timing.json")
        side.write_text(json.dumps(_clean(timing), sort_keys=True, indent=2) + "\n")
    return doc


# ---------------------------------------------------------------------------
# scenarios


@dataclass
class Scenario:
    name: str
    doc: dict
    spec: PotentialSpec
    energy: float | None
    energies: list[float] | None
    initial: list[PhaseState]
    sampler: dict | None
    budget: dict
    hill_grid: dict | None

    @property
    def hash(self) -> str:
        return digest(self.doc)

    def options(self) -> IntegratorOptions:
        b = self.budget
        return IntegratorOptions(rtol=b["rtol"], atol=b["atol"], max_steps=b["max_steps"],
                                 switch_factor=b["switch_factor"])


def _number(v, what, positive=False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{what} must be a number")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{what} must be finite")
    if positive and v <= 0:
        raise ConfigError(f"{what} must be positive")
    return v


def _vector(v, what) -> np.ndarray:
    if not isinstance(v, (list, tuple)) or len(v) != 3:
        raise ConfigError(f"{what} must be a list of 3 numbers")
    return np.array([_number(c, what) for c in v])


def _initial_state(item, k, spec, energy) -> PhaseState:
    if not isinstance(item, dict) or "x" not in item:
        raise ConfigError(f"initial condition {k} needs an 'x' entry")
    x = _vector(item["x"], f"initial_conditions[{k}].x")
    try:
        spec.check_regular(x)
    except AtSingularity as exc:
        raise ConfigError(f"initial condition {k} sits on a singular site") from exc
    if "xi" in item:
        return PhaseState.of(x, _vector(item["xi"], f"initial_conditions[{k}].xi"))
    if "direction" not in item:
        raise ConfigError(f"initial condition {k} needs 'xi' or 'direction'")
    d = _vector(item["direction"], f"initial_conditions[{k}].direction")
    if energy is None:
        raise ConfigError(f"initial condition {k} gives a direction but no energy is set")
    gap = energy - float(spec.value(x))
    norm = float(np.linalg.norm(d))
    if gap < 0 or norm == 0:
        raise ConfigError(f"initial condition {k} is not on the energy shell")
    return PhaseState.of(x, math.sqrt(gap) * d / norm)


def scenario_from_dict(doc: dict, name: str | None = None, seed: int | None = None,
                       rtol: float | None = None, atol: float | None = None) -> Scenario:
    """Validate a scenario document.  Command-line overrides are folded into ``doc``."""
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a JSON object")
    doc = copy.deepcopy(doc)
    if "potential" not in doc:
        raise ConfigError("scenario needs a 'potential' entry")
    if seed is not None:
        doc.setdefault("sampler", {})
        if isinstance(doc["sampler"], dict):
            doc["sampler"]["seed"] = int(seed)
    budget = dict(_DEFAULT_BUDGET)
    budget.update(doc.get("budget") or {})
    if rtol is not None:
        budget["rtol"] = rtol
    if atol is not None:
        budget["atol"] = atol
    for key in ("T", "T_max", "rtol", "atol", "switch_factor"):
        budget[key] = _number(budget[key], f"budget.{key}", positive=True)
    if not isinstance(budget["max_steps"], int) or budget["max_steps"] <= 0:
        raise ConfigError("budget.max_steps must be a positive integer")
    doc["budget"] = budget
    doc["name"] = name = doc.get("name", name or "scenario")

    try:
        spec = potential_from_dict(doc["potential"])
    except ConfigError:
        raise
    except (KSFlowError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"bad potential: {exc}") from exc

    energy = doc.get("energy")
    if energy is not None:
        energy = _number(energy, "energy")
    energies = doc.get("energies")
    if energies is not None:
        if not isinstance(energies, list):
            raise ConfigError("energies must be a list")
        energies = [_number(e, "energies") for e in energies]

    initial = [_initial_state(item, k, spec, energy)
               for k, item in enumerate(doc.get("initial_conditions") or [])]

    sampler = doc.get("sampler")
    if sampler is not None:
        if not isinstance(sampler, dict):
            raise ConfigError("sampler must be an object")
        n = sampler.get("n_samples", 0)
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise ConfigError("sampler.n_samples must be a non-negative integer")
        if n > 0 and not isinstance(sampler.get("seed"), int):
            raise ConfigError("sampler.seed is required when sampling is requested")

    hill = doc.get("hill_grid")
    if hill is not None:
        if not isinstance(hill, dict) or "bounds" not in hill:
            raise ConfigError("hill_grid needs 'bounds'")
        b = hill["bounds"]
        if not isinstance(b, list) or len(b) != 3:
            raise ConfigError("hill_grid.bounds must hold three [lo, hi] pairs")
        for pair in b:
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError("hill_grid.bounds must hold three [lo, hi] pairs")
            lo, hi = (_number(v, "hill_grid.bounds") for v in pair)
            if lo >= hi:
                raise ConfigError("hill_grid.bounds need lo < hi")
        res = hill.get("resolution", 64)
        res_list = res if isinstance(res, list) else [res]
        if not all(isinstance(r, int) and not isinstance(r, bool) and r > 0 for r in res_list) \
                or len(res_list) not in (1, 3):
            raise ConfigError("hill_grid.resolution must be a positive integer or three of them")
        if "energy" in hill:
            _number(hill["energy"], "hill_grid.energy")

    return Scenario(name, doc, spec, energy, energies, initial, sampler, budget, hill)


def load_scenario(path, **overrides) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc, name=Path(path).stem, **overrides)


def builtin_scenario(name: str, **overrides) -> Scenario:
    if name not in BUILTIN:
        raise ConfigError(f"unknown built-in scenario {name!r}")
    return scenario_from_dict(BUILTIN[name], name=name, **overrides)
