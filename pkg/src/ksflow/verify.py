"""Randomized checks of the Hopf/KS identities and the regularized virial identity.

Every check draws its own samples from a seeded generator, measures the worst error
and keeps the sample that produced it so a failure can be reproduced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis
from . import quat_hopf as qh
from .potential import PolynomialGaussian


@dataclass
class CheckResult:
    name: str
    n: int
    worst: float
    tol: float
    sample: dict | None

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tol)

    def to_dict(self) -> dict:
        return {"name": self.name, "n": self.n, "worst": self.worst, "tol": self.tol,
                "passed": self.passed, "worst_sample": self.sample}


def _worst(name, n, err, tol, samples) -> CheckResult:
    if n == 0:
        return CheckResult(name, 0, 0.0, tol, None)
    err = np.asarray(err, dtype=float)
    # NaN counts as a failure
    err = np.where(np.isnan(err), np.inf, err)
    k = int(np.argmax(err))
    return CheckResult(name, n, float(err[k]), tol,
                       {key: np.asarray(v[k]).tolist() for key, v in samples.items()})


def _ball(rng, n, dim=4, radius=1.0):
    u = rng.normal(size=(n, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return radius * rng.random(n)[:, None] ** (1.0 / dim) * u


def _separated_pairs(rng, n, min_sep):
    """Pairs in the unit 4-ball whose Hopf images are at least ``min_sep`` apart."""
    Z = np.empty((0, 4))
    X = np.empty((0, 4))
    while len(Z) < n:
        z = _ball(rng, 2 * n)
        x = _ball(rng, 2 * n)
        keep = np.linalg.norm(qh.hopf(z) - qh.hopf(x), axis=1) >= min_sep
        Z = np.concatenate([Z, z[keep]])
        X = np.concatenate([X, x[keep]])
    return Z[:n], X[:n]


def check_hopf_norm(rng, n, ulps=4.0) -> CheckResult:
    """``|K(z)| = |z|^2`` in units of the spacing at ``|z|^2``.

    The reference ``|z|^2`` is correctly rounded so only the error of ``|K(z)|`` counts.
    """
    z = rng.normal(size=(n, 4))
    r2 = np.array([math.fsum(row * row) for row in z])
    k = np.linalg.norm(qh.hopf(z), axis=1)
    # one ulp is the spacing at the larger of the two magnitudes
    err = np.abs(k - r2) / np.spacing(np.maximum(k, r2)) if n else []
    return _worst("hopf_norm", n, err, ulps, {"z": z})


def check_re_product(rng, n, tol=1e-13) -> CheckResult:
    a = rng.normal(size=(n, 4))
    b = rng.normal(size=(n, 4))
    scale = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
    err = np.abs(qh.re_product_identity_residual(a, b)) / scale if n else []
    return _worst("re_product", n, err, tol, {"A": a, "B": b})


def check_hopf_distance(rng, n, tol=1e-12, min_sep=0.1) -> CheckResult:
    Z, X = _separated_pairs(rng, n, min_sep)
    ref = np.linalg.norm(qh.hopf(Z) - qh.hopf(X), axis=1)
    err = np.abs(qh.hopf_distance(Z, X) - ref) / ref if n else []
    return _worst("hopf_distance", n, err, tol, {"Z": Z, "X": X})


def check_fiber_integral(rng, n, tol=1e-10, min_sep=0.1, n_nodes=512,
                         chunk=1000) -> CheckResult:
    """Trapezoid fiber average of ``|e^{theta I1} Z - X|^-2`` against ``2 pi / |K(Z) - K(X)|``."""
    Z, X = _separated_pairs(rng, n, min_sep)
    err = np.empty(n)
    for i in range(0, n, chunk):
        z, x = Z[i:i + chunk], X[i:i + chunk]
        exact = 2.0 * np.pi / np.linalg.norm(qh.hopf(z) - qh.hopf(x), axis=1)
        approx = qh.fiber_average_inverse_square(z, x, n_nodes=n_nodes)
        err[i:i + chunk] = np.abs(approx - exact) / exact
    return _worst("fiber_integral", n, err, tol, {"Z": Z, "X": X})


def check_round_trip(rng, n, tol=1e-12) -> CheckResult:
    """Lift then project; also the constraint of the lift, scaled by ``|z||zeta|``."""
    x = rng.normal(size=(n, 3)) * np.exp(rng.uniform(-3, 3, size=(n, 1)))
    xi = rng.normal(size=(n, 3))
    theta = rng.uniform(0, 2 * np.pi, size=n)
    err = np.empty(n)
    for k in range(n):
        lift = qh.ks_lift(x[k], xi[k], theta[k])
        xb, xib = qh.ks_project(lift)
        ell = abs(lift.constraint) / (np.linalg.norm(lift.z) * np.linalg.norm(lift.zeta))
        err[k] = max(np.linalg.norm(xb - x[k]) / np.linalg.norm(x[k]),
                     np.linalg.norm(xib - xi[k]) / np.linalg.norm(xi[k]), ell)
    return _worst("ks_round_trip", n, err, tol, {"x": x, "xi": xi, "theta": theta})


def random_smooth_field(rng) -> PolynomialGaussian:
    coeffs = {(i, j, k): float(rng.normal())
              for i in range(3) for j in range(3 - i) for k in range(3 - i - j)}
    return PolynomialGaussian(coeffs, width=float(rng.uniform(0.5, 2.0)),
                              center=rng.normal(size=3) * 0.3)


def check_virial(rng, n, tol=1e-10) -> CheckResult:
    """Regularized virial identity with random charge, shift and smooth remainder."""
    f = rng.uniform(-2.0, 2.0, size=n)
    tau = rng.uniform(-1.0, 2.0, size=n)
    z = rng.normal(size=(n, 4))
    zeta = rng.normal(size=(n, 4)) * 2.0
    err = np.empty(n)
    seeds = rng.integers(0, 2**32, size=n)
    for k in range(n):
        W = random_smooth_field(np.random.default_rng(seeds[k]))
        err[k] = abs(analysis.regularized_virial_residual(f[k], W, tau[k], z[k], zeta[k],
                                                          relative=True))
    return _worst("virial", n, err, tol,
                  {"f": f, "tau": tau, "z": z, "zeta": zeta, "field_seed": seeds})


CHECKS = {
    "hopf_norm": check_hopf_norm,
    "re_product": check_re_product,
    "hopf_distance": check_hopf_distance,
    "fiber_integral": check_fiber_integral,
    "ks_round_trip": check_round_trip,
    "virial": check_virial,
}


def run_identities(n: int = 10_000, seed: int = 0, only=None) -> list[CheckResult]:
    """Run the named checks (all by default), each on ``n`` samples.

    The virial check builds a fresh field per draw, so it gets ``n // 10`` samples.
    """
    out = []
    root = np.random.SeedSequence(seed)
    names = list(CHECKS) if only is None else list(only)
    for name, child in zip(names, root.spawn(len(names))):
        rng = np.random.default_rng(child)
        count = n // 10 if name == "virial" else n
        out.append(CHECKS[name](rng, count))
    return out
