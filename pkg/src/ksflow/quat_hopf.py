"""Quaternions, the Hopf map and the Kustaanheimo-Stiefel (KS) phase-space transform.

Two coordinate systems for R^4 appear here.

* Algebra coordinates ``(q0, q1, q2, q3)`` are the coefficients of a quaternion in
  the basis ``(I0, I1, I2, I3)`` of 2x2 complex matrices::

      I0 = [[1, 0], [0, 1]]    I1 = [[i, 0], [0, -i]]
      I2 = [[0, 1], [-1, 0]]   I3 = [[0, -i], [-i, 0]]

  With this basis ``I1 I2 = -I3``.  They are what :class:`Quaternion` stores.

* KS coordinates ``(z0, z1, z2, z3)`` are the ones in which the Hopf map reads
  ``K(z) = (z0^2 - z1^2 - z2^2 + z3^2, 2 z0 z1 - 2 z2 z3, 2 z0 z2 + 2 z1 z3)``.
  The matrix entries are ``w1 = z0 + i z3`` and ``w2 = z2 + i z1``, so that
  ``q = (z0, z3, -z2, z1)``.

Every function taking a "4-vector" accepts either a :class:`Quaternion` (converted
with :meth:`Quaternion.to_ks`) or a plain array read as KS coordinates.  All array
functions broadcast over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFiber, ZeroBasePoint

_MATRIX_BASIS = np.array(
    [
        [[1, 0], [0, 1]],
        [[1j, 0], [0, -1j]],
        [[0, 1], [-1, 0]],
        [[0, -1j], [-1j, 0]],
    ],
    dtype=complex,
)


# ---------------------------------------------------------------------------
# algebra (I-basis coordinates)


def qmul(a, b):
    """Quaternion product in algebra coordinates."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a0, av = a[..., 0], a[..., 1:]
    b0, bv = b[..., 0], b[..., 1:]
    scalar = a0 * b0 - np.sum(av * bv, axis=-1)
    # the cross term carries a minus sign because I1 I2 = -I3 in this basis
    vec = a0[..., None] * bv + b0[..., None] * av - np.cross(av, bv)
    return np.concatenate([scalar[..., None], vec], axis=-1)


def qconj(a):
    a = np.asarray(a, dtype=float)
    return a * np.array([1.0, -1.0, -1.0, -1.0])


def qre(a):
    """Real part ``tr(A)/2``."""
    return np.asarray(a, dtype=float)[..., 0]


def qnorm(a):
    return np.linalg.norm(np.asarray(a, dtype=float), axis=-1)


def basis_element(k: int) -> np.ndarray:
    out = np.zeros(4)
    out[k] = 1.0
    return out


def re_product_identity_residual(a, b):
    """``Re(AB) - [Re A Re B - sum_k Re(I_k A) Re(I_k B)]``; zero for every pair."""
    lhs = qre(qmul(a, b))
    rhs = qre(a) * qre(b)
    for k in (1, 2, 3):
        ik = basis_element(k)
        rhs = rhs - qre(qmul(ik, a)) * qre(qmul(ik, b))
    return lhs - rhs


@dataclass(frozen=True)
class Quaternion:
    """A single quaternion ``z0 I0 + z1 I1 + z2 I2 + z3 I3``."""

    z0: float
    z1: float
    z2: float
    z3: float

    @classmethod
    def from_array(cls, a) -> Quaternion:
        a = np.asarray(a, dtype=float).reshape(4)
        return cls(*(float(v) for v in a))

    @classmethod
    def from_ks(cls, z) -> Quaternion:
        z = np.asarray(z, dtype=float).reshape(4)
        return cls(float(z[0]), float(z[3]), float(-z[2]), float(z[1]))

    @classmethod
    def from_matrix(cls, m) -> Quaternion:
        m = np.asarray(m, dtype=complex)
        # <X, Y> = tr(X Y*)/2 and the basis is orthonormal for it
        coords = [np.trace(m @ b.conj().T).real / 2.0 for b in _MATRIX_BASIS]
        return cls(*coords)

    def to_array(self) -> np.ndarray:
        return np.array([self.z0, self.z1, self.z2, self.z3])

    def to_ks(self) -> np.ndarray:
        return np.array([self.z0, self.z3, -self.z2, self.z1])

    def to_matrix(self) -> np.ndarray:
        return np.tensordot(self.to_array(), _MATRIX_BASIS, axes=1)

    def conj(self) -> Quaternion:
        return Quaternion(self.z0, -self.z1, -self.z2, -self.z3)

    @property
    def re(self) -> float:
        return self.z0

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_array()))

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion.from_array(qmul(self.to_array(), other.to_array()))
        return Quaternion.from_array(self.to_array() * float(other))

    def __rmul__(self, other):
        return Quaternion.from_array(self.to_array() * float(other))

    def __add__(self, other: Quaternion) -> Quaternion:
        return Quaternion.from_array(self.to_array() + other.to_array())

    def __sub__(self, other: Quaternion) -> Quaternion:
        return Quaternion.from_array(self.to_array() - other.to_array())

    def __neg__(self) -> Quaternion:
        return Quaternion.from_array(-self.to_array())


I0, I1, I2, I3 = (Quaternion.from_array(basis_element(k)) for k in range(4))


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    return a * b


def ks_to_algebra(z):
    z = np.asarray(z, dtype=float)
    return np.stack([z[..., 0], z[..., 3], -z[..., 2], z[..., 1]], axis=-1)


def algebra_to_ks(q):
    q = np.asarray(q, dtype=float)
    return np.stack([q[..., 0], q[..., 3], -q[..., 2], q[..., 1]], axis=-1)


def _as_ks(z) -> np.ndarray:
    if isinstance(z, Quaternion):
        return z.to_ks()
    return np.asarray(z, dtype=float)


# ---------------------------------------------------------------------------
# Hopf map and circle action (KS coordinates)


def ks_matrix(z) -> np.ndarray:
    """The 3x4 matrix ``Lambda(z)`` with ``K(z) = Lambda(z) z`` and ``dK = 2 Lambda(z) dz``."""
    z = _as_ks(z)
    z0, z1, z2, z3 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    rows = [
        np.stack([z0, -z1, -z2, z3], axis=-1),
        np.stack([z1, z0, -z3, -z2], axis=-1),
        np.stack([z2, z3, z0, z1], axis=-1),
    ]
    return np.stack(rows, axis=-2)


def hopf(z) -> np.ndarray:
    z = _as_ks(z)
    z0, z1, z2, z3 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    return np.stack(
        [
            z0 * z0 - z1 * z1 - z2 * z2 + z3 * z3,
            2.0 * (z0 * z1 - z2 * z3),
            2.0 * (z0 * z2 + z1 * z3),
        ],
        axis=-1,
    )


def circle_act(theta, z) -> np.ndarray:
    """Left multiplication by ``exp(theta I1)``: rotates ``z0 + i z3`` and ``z2 + i z1``."""
    z = _as_ks(z)
    c = np.cos(theta)
    s = np.sin(theta)
    z0, z1, z2, z3 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    return np.stack(
        [c * z0 - s * z3, s * z2 + c * z1, c * z2 - s * z1, s * z0 + c * z3], axis=-1
    )


def bilinear_constraint(z, zeta):
    """The moment map ``l(z, zeta)`` of the circle action; zero on lifted states."""
    z = _as_ks(z)
    zeta = np.asarray(zeta, dtype=float)
    return (
        -z[..., 3] * zeta[..., 0]
        + z[..., 2] * zeta[..., 1]
        - z[..., 1] * zeta[..., 2]
        + z[..., 0] * zeta[..., 3]
    )


@dataclass(frozen=True)
class PhaseLift:
    """A point ``(z, zeta)`` of ``T*R^4`` in KS coordinates."""

    z: np.ndarray
    zeta: np.ndarray

    @property
    def constraint(self) -> float:
        return float(bilinear_constraint(self.z, self.zeta))


def section(x, theta: float = 0.0) -> np.ndarray:
    """A preimage of ``x`` under the Hopf map with fiber angle ``theta``.

    Uses the ``J+`` chart (``z0 + i z3`` has argument ``theta``) when ``x1 >= 0`` and
    ``J-`` (``z2 + i z1`` has argument ``theta``) otherwise.
    """
    x = np.asarray(x, dtype=float).reshape(3)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise ZeroBasePoint("the origin has no regular Hopf preimage")
    phase = np.exp(1j * theta)
    target = complex(x[2], -x[1])  # w1 * conj(w2)
    if x[0] >= 0.0:
        w1 = np.sqrt((r + x[0]) / 2.0) * phase
        w2 = (target / (2.0 * w1)).conjugate()
    else:
        w2 = np.sqrt((r - x[0]) / 2.0) * phase
        w1 = target / (2.0 * w2.conjugate())
    return np.array([w1.real, w2.imag, w2.real, w1.imag])


def ks_lift(x, xi, theta: float = 0.0) -> PhaseLift:
    z = section(x, theta)
    zeta = 2.0 * ks_matrix(z).T @ np.asarray(xi, dtype=float).reshape(3)
    return PhaseLift(z, zeta)


def ks_project(lift, zeta=None, tol: float = 1e-300):
    """Push ``(z, zeta)`` down to ``(x, xi)``.  Accepts a PhaseLift or two arrays."""
    if zeta is None:
        z, zeta = lift.z, lift.zeta
    else:
        z = lift
    z = _as_ks(z)
    zeta = np.asarray(zeta, dtype=float)
    r = np.sum(z * z, axis=-1)
    if np.any(r <= tol):
        raise ZeroBasePoint("cannot project a KS point with z = 0")
    lam = ks_matrix(z)
    x = np.einsum("...ij,...j->...i", lam, z)
    xi = np.einsum("...ij,...j->...i", lam, zeta) / (2.0 * r[..., None])
    return x, xi


# ---------------------------------------------------------------------------
# fiber identities


def hopf_distance(Z, X) -> float | np.ndarray:
    """``|K(Z) - K(X)|`` computed through quaternion real parts only."""
    qz = ks_to_algebra(_as_ks(Z))
    qx = ks_to_algebra(_as_ks(X))
    zx = qmul(qz, qconj(qx))
    re0 = qre(zx)
    re1 = qre(qmul(basis_element(1), zx))
    s = np.sum(qz * qz, axis=-1) + np.sum(qx * qx, axis=-1)
    arg = s * s - 4.0 * (re0 * re0 + re1 * re1)
    return np.sqrt(np.maximum(arg, 0.0))


def fiber_average_inverse_square(Z, X, n_nodes: int = 512, tol: float = 1e-8):
    """Trapezoid value of ``int_0^{2pi} |exp(theta I1) Z - X|^-2 dtheta``."""
    Z = _as_ks(Z)
    X = _as_ks(X)
    sep = np.linalg.norm(hopf(Z) - hopf(X), axis=-1)
    if np.any(sep < tol):
        raise DegenerateFiber(f"Hopf images are {np.min(sep):.3e} apart (< {tol:g})")
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    shape = (n_nodes,) + (1,) * (Z.ndim - 1) + (1,)
    rotated = circle_act(theta.reshape(shape[:-1]), Z[None, ...])
    d2 = np.sum((rotated - X[None, ...]) ** 2, axis=-1)
    return (2.0 * np.pi / n_nodes) * np.sum(1.0 / d2, axis=0)
