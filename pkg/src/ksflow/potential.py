"""Potentials with Coulomb singularities.

A potential is ``V(x) = sum_j f_j(x) / |x - s_j| + B(x)``.  Here the ``f_j`` are smooth
coefficient fields and ``B`` is a smooth background.  Near a site ``s_j`` this is
``f_j(x)/|x - s_j| + W_j(x)``, where the local smooth part ``W_j`` collects the other
Coulomb terms and the background.

Scalar fields evaluate on arrays of shape ``(..., 3)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AtSingularity, BadIndex, ConfigError
from .quat_hopf import hopf, ks_matrix

HARD_FLOOR = 1e-14


# ---------------------------------------------------------------------------
# scalar fields


class ScalarField:
    """Smooth real function on R^3 with an analytic gradient."""

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)

    def __add__(self, other: ScalarField) -> ScalarField:
        return FieldSum([self, other])

    def to_dict(self) -> dict:
        raise ConfigError(f"{type(self).__name__} is not serializable")


class Constant(ScalarField):
    def __init__(self, c: float):
        self.c = float(c)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], self.c) if x.ndim > 1 else self.c

    def grad(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def to_dict(self):
        return {"kind": "constant", "c": self.c}


class FieldSum(ScalarField):
    def __init__(self, parts: Sequence[ScalarField]):
        flat: list[ScalarField] = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, FieldSum) else [p])
        self.parts = flat

    def value(self, x):
        total = 0.0
        for p in self.parts:
            total = total + p.value(x)
        return total

    def grad(self, x):
        total = np.zeros_like(np.asarray(x, dtype=float))
        for p in self.parts:
            total = total + p.grad(x)
        return total


class ZeroField(Constant):
    def __init__(self):
        super().__init__(0.0)

    def to_dict(self):
        return {"kind": "zero"}


class FunctionField(ScalarField):
    """Wraps user callables ``value(x)`` and ``grad(x)`` for a custom field."""

    def __init__(self, value: Callable, grad: Callable):
        self._value = value
        self._grad = grad

    def value(self, x):
        return self._value(np.asarray(x, dtype=float))

    def grad(self, x):
        return np.asarray(self._grad(np.asarray(x, dtype=float)), dtype=float)


class RadialField(ScalarField):
    """``g(|x - c|)``; subclasses give ``g(r)`` and ``g'(r)/r`` (finite at 0)."""

    def __init__(self, center=(0.0, 0.0, 0.0)):
        self.center = np.asarray(center, dtype=float).reshape(3)

    def profile(self, r):
        raise NotImplementedError

    def dprofile_over_r(self, r):
        raise NotImplementedError

    def value(self, x):
        d = np.asarray(x, dtype=float) - self.center
        return self.profile(np.sqrt(np.sum(d * d, axis=-1)))

    def grad(self, x):
        d = np.asarray(x, dtype=float) - self.center
        r = np.sqrt(np.sum(d * d, axis=-1))
        return self.dprofile_over_r(r)[..., None] * d


def _series(coeffs, u):
    out = np.zeros_like(u)
    for c in reversed(coeffs):
        out = out * u + c
    return out


# h(u) = (1 - e^{-2u}(1+u)) / u and h'(u)/u near u = 0
_SMEARED_H = [1.0, 0.0, -2 / 3, 2 / 3, -2 / 5, 8 / 45, -4 / 63, 2 / 105, -2 / 405]
_SMEARED_DH = [-4 / 3, 2.0, -8 / 5, 8 / 9, -8 / 21, 2 / 15, -16 / 405, 16 / 1575, -8 / 3465]
_SERIES_CUT = 0.05


class SmearedCoulomb(RadialField):
    """Potential ``-q int rho(y)/|y - x| dy`` of the density ``q e^{-2|y|/a} / (pi a^3)``.

    Closed form ``-(q/r)(1 - e^{-2r/a}(1 + r/a))``, equal to ``-q/a`` at the center.
    """

    def __init__(self, a: float, q: float = 1.0, center=(0.0, 0.0, 0.0)):
        if a <= 0:
            raise ConfigError("smeared charge needs a > 0")
        super().__init__(center)
        self.a = float(a)
        self.q = float(q)

    def profile(self, r):
        u = np.asarray(r, dtype=float) / self.a
        small = u < _SERIES_CUT
        us = np.where(small, 1.0, u)
        h = np.where(
            small,
            _series(_SMEARED_H, u),
            (-np.expm1(-2.0 * us) - us * np.exp(-2.0 * us)) / us,
        )
        return -self.q * h / self.a

    def dprofile_over_r(self, r):
        u = np.asarray(r, dtype=float) / self.a
        small = u < _SERIES_CUT
        us = np.where(small, 1.0, u)
        # h'(u) u^2 = e^{-2u}(1 + 2u + 2u^2) - 1
        direct = (np.exp(-2.0 * us) * (1.0 + 2.0 * us + 2.0 * us * us) - 1.0) / us**3
        dh_over_u = np.where(small, _series(_SMEARED_DH, u), direct)
        return -self.q * dh_over_u / self.a**3

    def to_dict(self):
        return {"kind": "smeared", "a": self.a, "q": self.q, "center": self.center.tolist()}


def smeared_coulomb(a: float, q: float = 1.0, center=(0.0, 0.0, 0.0)) -> SmearedCoulomb:
    return SmearedCoulomb(a, q, center)


# w(v) = (1 - e^{-v}) / v and w'(v) near 0
_YUK_W = [1.0, -1 / 2, 1 / 6, -1 / 24, 1 / 120, -1 / 720, 1 / 5040, -1 / 40320, 1 / 362880]
_YUK_DW = [-1 / 2, 1 / 3, -1 / 8, 1 / 30, -1 / 144, 1 / 840, -1 / 5760, 1 / 45360]


class YukawaRemainder(RadialField):
    """``g (1 - e^{-k r}) / r``: the smooth part left after removing ``-g/r`` from Yukawa."""

    def __init__(self, strength: float, screening: float, center=(0.0, 0.0, 0.0)):
        super().__init__(center)
        self.g = float(strength)
        self.k = float(screening)

    def profile(self, r):
        v = self.k * np.asarray(r, dtype=float)
        small = v < _SERIES_CUT
        vs = np.where(small, 1.0, v)
        w = np.where(small, _series(_YUK_W, v), -np.expm1(-vs) / vs)
        return self.g * self.k * w

    def dprofile_over_r(self, r):
        r = np.asarray(r, dtype=float)
        v = self.k * r
        small = v < _SERIES_CUT
        vs = np.where(small, 1.0, v)
        dw = np.where(small, _series(_YUK_DW, v), (np.exp(-vs) * (1.0 + vs) - 1.0) / vs**2)
        # g'(r) = g k^2 w'(kr); it does not vanish at r = 0, so the gradient has a kink there
        safe_r = np.where(r > 0.0, r, 1.0)
        return np.where(r > 0.0, self.g * self.k**2 * dw / safe_r, 0.0)


class PolynomialGaussian(ScalarField):
    """``P(x) exp(-|x - c|^2 / (2 s^2))`` for a polynomial ``P`` given by monomials."""

    def __init__(self, coeffs: dict[tuple[int, int, int], float], width: float = 1.0,
                 center=(0.0, 0.0, 0.0)):
        self.coeffs = {tuple(k): float(v) for k, v in coeffs.items()}
        self.width = float(width)
        self.center = np.asarray(center, dtype=float).reshape(3)

    def _poly(self, x):
        p = 0.0
        dp = np.zeros_like(x)
        for (i, j, k), c in self.coeffs.items():
            xi, yj, zk = x[..., 0] ** i, x[..., 1] ** j, x[..., 2] ** k
            p = p + c * xi * yj * zk
            if i:
                dp[..., 0] += c * i * x[..., 0] ** (i - 1) * yj * zk
            if j:
                dp[..., 1] += c * j * xi * x[..., 1] ** (j - 1) * zk
            if k:
                dp[..., 2] += c * k * xi * yj * x[..., 2] ** (k - 1)
        return p, dp

    def value(self, x):
        x = np.asarray(x, dtype=float)
        p, _ = self._poly(x)
        d = x - self.center
        return p * np.exp(-np.sum(d * d, axis=-1) / (2.0 * self.width**2))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        p, dp = self._poly(x)
        d = x - self.center
        g = np.exp(-np.sum(d * d, axis=-1) / (2.0 * self.width**2))
        return (dp - np.asarray(p)[..., None] * d / self.width**2) * np.asarray(g)[..., None]


# ---------------------------------------------------------------------------
# potential specs


@dataclass(frozen=True)
class DecayBound:
    """Declared constants with ``|V| <= C0 <x>^-rho`` and ``|grad V| <= C1 <x>^(-rho-1)``."""

    rho: float
    C0: float
    C1: float


@dataclass(frozen=True)
class SingularityData:
    site: np.ndarray
    coeff: ScalarField
    local_smooth: ScalarField
    local_radius: float

    @property
    def coeff_at_site(self) -> float:
        return float(self.coeff.value(self.site))

    @property
    def attractive(self) -> bool:
        return self.coeff_at_site < 0.0


class _LocalSmooth(ScalarField):
    """``W_j``: every Coulomb term except site ``j``, plus the background."""

    def __init__(self, spec: PotentialSpec, j: int):
        self.spec = spec
        self.j = j

    def value(self, x):
        return self.spec._coulomb_value(x, skip=self.j) + self.spec.background.value(x)

    def grad(self, x):
        return self.spec._coulomb_grad(x, skip=self.j) + self.spec.background.grad(x)


def _as_field(c) -> ScalarField:
    return c if isinstance(c, ScalarField) else Constant(c)


@dataclass(frozen=True)
class _Params:
    family: str
    data: dict = field(default_factory=dict)


class PotentialSpec:
    """Immutable description of ``V``; see :func:`multi_coulomb` and friends."""

    def __init__(
        self,
        sites: Sequence[Sequence[float]] = (),
        coefficients: Sequence[float | ScalarField] = (),
        background: ScalarField | None = None,
        local_radii: Sequence[float] | None = None,
        decay: DecayBound | None = None,
        R0: float | None = None,
        family: str = "custom",
        params: dict | None = None,
        floor: float = HARD_FLOOR,
    ):
        sites = np.asarray(sites, dtype=float).reshape(-1, 3)
        if len(coefficients) != len(sites):
            raise ConfigError("need one coefficient per site")
        n = len(sites)
        for a in range(n):
            for b in range(a + 1, n):
                if np.linalg.norm(sites[a] - sites[b]) == 0.0:
                    raise ConfigError("singular sites must be pairwise distinct")
        coeffs = [_as_field(c) for c in coefficients]
        for s, c in zip(sites, coeffs):
            if float(c.value(s)) == 0.0:
                raise ConfigError(f"coefficient vanishes at site {s.tolist()}")
        if local_radii is None:
            local_radii = [self._default_radius(sites, j) for j in range(n)]
        if len(local_radii) != n or any(r <= 0 for r in local_radii):
            raise ConfigError("local radii must be positive, one per site")
        for a in range(n):
            for b in range(a + 1, n):
                gap = np.linalg.norm(sites[a] - sites[b])
                if local_radii[a] + local_radii[b] > gap:
                    raise ConfigError("local radii must describe disjoint balls")

        self._sites = sites
        self._coeffs = coeffs
        self._const = np.array(
            [c.c if isinstance(c, Constant) else np.nan for c in coeffs], dtype=float
        )
        self._all_const = bool(np.all(np.isfinite(self._const)))
        self.background = background if background is not None else ZeroField()
        self.decay = decay
        self.family = family
        self.params = params or {}
        self.floor = float(floor)
        if R0 is None:
            reach = [np.linalg.norm(s) + r for s, r in zip(sites, local_radii)]
            R0 = max([1.0] + [2.0 * float(np.linalg.norm(s)) for s in sites] + reach)
        self.R0 = float(R0)
        self.singularities = tuple(
            SingularityData(sites[j].copy(), coeffs[j], _LocalSmooth(self, j), float(local_radii[j]))
            for j in range(n)
        )

    @staticmethod
    def _default_radius(sites, j) -> float:
        others = [np.linalg.norm(sites[j] - s) for k, s in enumerate(sites) if k != j]
        return 0.5 * min(others) if others else 1.0

    # -- structure --------------------------------------------------------
    @property
    def sites(self) -> np.ndarray:
        return self._sites

    @property
    def n_sites(self) -> int:
        return len(self._sites)

    @property
    def n_attractive(self) -> int:
        return sum(s.attractive for s in self.singularities)

    def switch_radius(self, j: int, factor: float = 0.25) -> float:
        sing = self.singularities[j]
        limit = sing.local_radius
        if self.n_sites > 1:
            d = min(np.linalg.norm(sing.site - s) for k, s in enumerate(self._sites) if k != j)
            limit = min(limit, 0.5 * d)
        return factor * limit

    def site_distances(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.n_sites == 0:
            return np.full(x.shape[:-1] + (0,), np.inf)
        d = x[..., None, :] - self._sites
        return np.sqrt(np.sum(d * d, axis=-1))

    # -- evaluation -------------------------------------------------------
    def _coulomb_value(self, x, skip: int = -1):
        x = np.asarray(x, dtype=float)
        total = 0.0
        for j, (s, c) in enumerate(zip(self._sites, self._coeffs)):
            if j == skip:
                continue
            d = x - s
            r = np.sqrt(np.sum(d * d, axis=-1))
            total = total + c.value(x) / r
        return total

    def _coulomb_grad(self, x, skip: int = -1):
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for j, (s, c) in enumerate(zip(self._sites, self._coeffs)):
            if j == skip:
                continue
            d = x - s
            r = np.sqrt(np.sum(d * d, axis=-1))[..., None]
            if isinstance(c, Constant):
                total = total - c.c * d / r**3
            else:
                total = total + c.grad(x) / r - np.asarray(c.value(x))[..., None] * d / r**3
        return total

    def value(self, x):
        """Unchecked, vectorized ``V(x)``."""
        return self._coulomb_value(x) + self.background.value(x)

    def grad(self, x):
        return self._coulomb_grad(x) + self.background.grad(x)

    def check_regular(self, x) -> None:
        if self.n_sites and np.min(self.site_distances(x)) < self.floor:
            raise AtSingularity(f"x = {np.asarray(x).tolist()} sits on a singular site")

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        if self.family == "custom":
            raise ConfigError("custom potentials cannot be serialized")
        out = {"family": self.family, **self.params}
        out["local_radii"] = [s.local_radius for s in self.singularities]
        out["R0"] = self.R0
        if self.decay is not None:
            out["decay"] = {"rho": self.decay.rho, "C0": self.decay.C0, "C1": self.decay.C1}
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> PotentialSpec:
        return potential_from_dict(doc)

    def __repr__(self):
        return f"PotentialSpec(family={self.family!r}, n_sites={self.n_sites})"


def _vec3(v, what: str) -> list[float]:
    try:
        arr = np.asarray(v, dtype=float).reshape(3)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what} must be a 3-vector") from exc
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{what} must be finite")
    return arr.tolist()


def _coulomb_decay(total_charge: float, rho: float = 1.0) -> DecayBound:
    # for |x| >= max(1, 2|s_j|): |x - s_j| >= |x|/2 and <x> <= sqrt(2)|x|
    return DecayBound(rho=rho, C0=2.0 * math.sqrt(2.0) * total_charge, C1=8.0 * total_charge)


def multi_coulomb(sites, coefficients, local_radii=None, R0=None, decay=None) -> PotentialSpec:
    """``V(x) = sum_j f_j / |x - s_j|`` with constant ``f_j``; empty lists give ``V = 0``."""
    sites = [_vec3(s, "site") for s in sites]
    coefficients = [float(c) for c in coefficients]
    if decay is None:
        decay = _coulomb_decay(sum(abs(c) for c in coefficients))
    return PotentialSpec(
        sites, coefficients, local_radii=local_radii, decay=decay, R0=R0,
        family="multi-coulomb", params={"sites": sites, "coefficients": coefficients},
    )


def free() -> PotentialSpec:
    return multi_coulomb([], [])


def yukawa(strength: float = 1.0, screening: float = 1.0, site=(0.0, 0.0, 0.0),
           local_radius: float | None = None, R0=None) -> PotentialSpec:
    """``V(x) = -g e^{-k|x - s|} / |x - s|``, one attractive site with ``f = -g``."""
    site = _vec3(site, "site")
    g = float(strength)
    # <x>/r <= sqrt(2) and e^{-kr}(kr + 1) <= 1 beyond r = 1
    decay = DecayBound(rho=1.0, C0=math.sqrt(2.0) * abs(g), C1=2.0 * abs(g))
    radii = None if local_radius is None else [local_radius]
    return PotentialSpec(
        [site], [-g], background=YukawaRemainder(g, screening, site), local_radii=radii,
        decay=decay, R0=R0, family="yukawa",
        params={"site": site, "strength": g, "screening": float(screening)},
    )


def smeared_molecular(nuclei: Sequence[dict], clouds: Sequence[dict], e0: float = 1.0,
                      local_radii=None, R0=None) -> PotentialSpec:
    """Point nuclei plus exponential electron clouds, all scaled by the probe charge ``e0``.

    ``nuclei`` items: ``{"site": [...], "charge": Z}``; ``clouds`` items:
    ``{"center": [...], "a": a, "q": q}``.
    """
    nuclei = [{"site": _vec3(n["site"], "nucleus site"), "charge": float(n["charge"])}
              for n in nuclei]
    clouds = [{"center": _vec3(c.get("center", (0, 0, 0)), "cloud center"),
               "a": float(c["a"]), "q": float(c.get("q", 1.0))} for c in clouds]
    e0 = float(e0)
    bg = FieldSum([SmearedCoulomb(c["a"], e0 * c["q"], c["center"]) for c in clouds]) \
        if clouds else ZeroField()
    total = sum(abs(e0 * n["charge"]) for n in nuclei) + sum(abs(e0 * c["q"]) for c in clouds)
    spec = PotentialSpec(
        [n["site"] for n in nuclei], [e0 * n["charge"] for n in nuclei], background=bg,
        local_radii=local_radii, decay=_coulomb_decay(total), R0=R0,
        family="smeared-molecular", params={"nuclei": nuclei, "clouds": clouds, "e0": e0},
    )
    if R0 is None:
        spec.R0 = max([spec.R0] + [2.0 * float(np.linalg.norm(c["center"])) for c in clouds])
    return spec


def potential_from_dict(doc: dict) -> PotentialSpec:
    if not isinstance(doc, dict) or "family" not in doc:
        raise ConfigError("potential document needs a 'family' field")
    fam = doc["family"]
    common = {"local_radii": doc.get("local_radii"), "R0": doc.get("R0")}
    try:
        if fam == "multi-coulomb":
            spec = multi_coulomb(doc.get("sites", []), doc.get("coefficients", []), **common)
        elif fam == "yukawa":
            radii = common["local_radii"]
            spec = yukawa(doc.get("strength", 1.0), doc.get("screening", 1.0),
                          doc.get("site", (0, 0, 0)),
                          local_radius=radii[0] if radii else None, R0=common["R0"])
        elif fam == "smeared-molecular":
            spec = smeared_molecular(doc.get("nuclei", []), doc.get("clouds", []),
                                     doc.get("e0", 1.0), **common)
        else:
            raise ConfigError(f"unknown potential family {fam!r}")
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad {fam} document: {exc}") from exc
    if "decay" in doc and doc["decay"] is not None:
        d = doc["decay"]
        spec.decay = DecayBound(float(d["rho"]), float(d["C0"]), float(d["C1"]))
    return spec


# ---------------------------------------------------------------------------
# operations


def eval_potential(spec: PotentialSpec, x) -> float:
    x = np.asarray(x, dtype=float).reshape(3)
    spec.check_regular(x)
    return float(spec.value(x))


def eval_grad(spec: PotentialSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(3)
    spec.check_regular(x)
    return np.asarray(spec.grad(x), dtype=float)


def hill_member(spec: PotentialSpec, lam: float, x) -> bool:
    """True when ``V(x) >= lam`` or ``x`` is (within the hard floor of) a singular site."""
    x = np.asarray(x, dtype=float).reshape(3)
    if spec.n_sites and np.min(spec.site_distances(x)) < spec.floor:
        return True
    return bool(spec.value(x) >= lam)


class RegularizedChart:
    """KS chart data at site ``j`` for the shifted energy ``lam``.

    With ``x = s_j + K(z)``::

        f_j(x) + |z|^2 (W_j(x) - lam) = f0 + Wt(z),   Wt(0) = 0.
    """

    def __init__(self, spec: PotentialSpec, j: int, lam: float):
        if not 0 <= j < spec.n_sites:
            raise BadIndex(f"site index {j} out of range for {spec.n_sites} sites")
        sing = spec.singularities[j]
        self.site = sing.site
        self.coeff = sing.coeff
        self.smooth = sing.local_smooth
        self.lam = float(lam)
        self.f0 = sing.coeff_at_site
        self._const_coeff = isinstance(self.coeff, Constant)
        self._others = None
        if spec._all_const:
            self._others = [
                (float(s[0]), float(s[1]), float(s[2]), float(c))
                for k, (s, c) in enumerate(zip(spec.sites, spec._const)) if k != j
            ]
        self._background = None if isinstance(spec.background, ZeroField) else spec.background

    def position(self, z):
        return self.site + hopf(z)

    def value(self, z):
        z = np.asarray(z, dtype=float)
        x = self.position(z)
        r2 = np.sum(z * z, axis=-1)
        return (self.coeff.value(x) - self.f0) + r2 * (self.smooth.value(x) - self.lam)

    def grad(self, z):
        z = np.asarray(z, dtype=float)
        x = self.position(z)
        lam_t = np.swapaxes(ks_matrix(z), -1, -2)
        r2 = np.sum(z * z, axis=-1)[..., None]
        gw = np.einsum("...ij,...j->...i", lam_t, self.smooth.grad(x))
        out = 2.0 * z * (np.asarray(self.smooth.value(x))[..., None] - self.lam) + 2.0 * r2 * gw
        if not self._const_coeff:
            out = out + 2.0 * np.einsum("...ij,...j->...i", lam_t, self.coeff.grad(x))
        return out


    def grad1(self, z) -> np.ndarray:
        """Gradient at a single point; scalar arithmetic when coefficients are constant."""
        if self._others is None:
            return self.grad(z)
        z0, z1, z2, z3 = z.tolist()
        sx, sy, sz = self.site.tolist()
        x0 = sx + z0 * z0 - z1 * z1 - z2 * z2 + z3 * z3
        x1 = sy + 2.0 * (z0 * z1 - z2 * z3)
        x2 = sz + 2.0 * (z0 * z2 + z1 * z3)
        w = 0.0
        g0 = g1 = g2 = 0.0
        for ox, oy, oz, f in self._others:
            d0, d1, d2 = x0 - ox, x1 - oy, x2 - oz
            r2 = d0 * d0 + d1 * d1 + d2 * d2
            r = math.sqrt(r2)
            w += f / r
            c = f / (r2 * r)
            g0 -= c * d0
            g1 -= c * d1
            g2 -= c * d2
        if self._background is not None:
            xv = np.array([x0, x1, x2])
            w += float(self._background.value(xv))
            gb = self._background.grad(xv)
            g0 += float(gb[0])
            g1 += float(gb[1])
            g2 += float(gb[2])
        a = 2.0 * (w - self.lam)
        b = 2.0 * (z0 * z0 + z1 * z1 + z2 * z2 + z3 * z3)
        return np.array([
            a * z0 + b * (z0 * g0 + z1 * g1 + z2 * g2),
            a * z1 + b * (-z1 * g0 + z0 * g1 + z3 * g2),
            a * z2 + b * (-z2 * g0 - z3 * g1 + z0 * g2),
            a * z3 + b * (z3 * g0 - z2 * g1 + z1 * g2),
        ])


def local_chart_data(spec: PotentialSpec, j: int, lambda_prime: float) -> RegularizedChart:
    return RegularizedChart(spec, j, lambda_prime)
