"""Ergotropy of a two-level system.

Two independent routes are provided: a spectral double sum over the
eigen-decompositions of the state and the Hamiltonian, and the closed form
in Bloch coordinates, ``W = (r*Delta + eps*sz + 2*Tc*sx) / 2``.

Conventions: hbar = 1, energies in units of the right tunnel rate.  The Bloch
vector uses the pseudospin convention of the transport model, i.e. with
basis state 0 = |L> (sz = +1) the density matrix is

    rho = [[(1 + sz)/2, (sx + i sy)/2],
           [(sx - i sy)/2, (1 - sz)/2]]

so ``sy = (rho_LR - rho_RL) / i``.  The Hamiltonian ``eps/2 sz + Tc sx``
carries no sy term, so the ergotropy does not depend on the sign of sy.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

R_TOL = 1e-12

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
# sign chosen so that tr(rho SIGMA_Y) = (rho_LR - rho_RL) / i
SIGMA_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class BlochState:
    """Qubit state stored as a Cartesian Bloch vector.

    Use :meth:`from_spherical` for the ``(r, theta, phi)`` view.
    """

    sx: float
    sy: float
    sz: float

    def __post_init__(self):
        comps = (self.sx, self.sy, self.sz)
        if not all(math.isfinite(c) for c in comps):
            raise ValueError(f"non-finite Bloch vector {comps}")
        r = math.sqrt(self.sx**2 + self.sy**2 + self.sz**2)
        if r > 1.0 + R_TOL:
            raise ValueError(f"Bloch norm r={r!r} exceeds 1")
        if r > 1.0:
            object.__setattr__(self, "sx", self.sx / r)
            object.__setattr__(self, "sy", self.sy / r)
            object.__setattr__(self, "sz", self.sz / r)

    @classmethod
    def from_spherical(cls, r: float, theta: float, phi: float) -> "BlochState":
        if not all(math.isfinite(x) for x in (r, theta, phi)):
            raise ValueError("non-finite spherical coordinates")
        if r < 0.0:
            raise ValueError(f"negative Bloch norm r={r!r}")
        if r > 1.0 + R_TOL:
            raise ValueError(f"Bloch norm r={r!r} exceeds 1")
        r = min(r, 1.0)
        return cls(
            r * math.sin(theta) * math.cos(phi),
            r * math.sin(theta) * math.sin(phi),
            r * math.cos(theta),
        )

    @classmethod
    def from_density_matrix(cls, rho: np.ndarray) -> "BlochState":
        rho = np.asarray(rho, dtype=complex)
        rho = rho / np.trace(rho).real
        return cls(
            float((rho[0, 1] + rho[1, 0]).real),
            float(((rho[0, 1] - rho[1, 0]) / 1j).real),
            float((rho[0, 0] - rho[1, 1]).real),
        )

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])

    @property
    def r(self) -> float:
        return math.sqrt(self.sx**2 + self.sy**2 + self.sz**2)

    @property
    def theta(self) -> float:
        r = self.r
        return 0.0 if r == 0.0 else math.acos(max(-1.0, min(1.0, self.sz / r)))

    @property
    def phi(self) -> float:
        return math.atan2(self.sy, self.sx) % (2 * math.pi)

    def density_matrix(self) -> np.ndarray:
        return 0.5 * (IDENTITY + self.sx * SIGMA_X + self.sy * SIGMA_Y + self.sz * SIGMA_Z)


@dataclass(frozen=True)
class QubitHamiltonian:
    """``H = eps/2 sigma_z + tc sigma_x``."""

    epsilon: float
    tc: float

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and math.isfinite(self.tc)):
            raise ValueError(f"non-finite Hamiltonian ({self.epsilon}, {self.tc})")

    @property
    def delta(self) -> float:
        """Gap between the two eigenvalues."""
        return math.hypot(self.epsilon, 2.0 * self.tc)

    @property
    def field(self) -> np.ndarray:
        """Bloch-space field ``(2 Tc, 0, eps)``; energy is ``field . s / 2``."""
        return np.array([2.0 * self.tc, 0.0, self.epsilon])

    @property
    def eigenvalues(self) -> tuple[float, float]:
        return -0.5 * self.delta, 0.5 * self.delta

    def matrix(self) -> np.ndarray:
        return 0.5 * self.epsilon * SIGMA_Z + self.tc * SIGMA_X

    def eigenvectors(self) -> np.ndarray:
        """Columns are the ground and excited eigenvectors.

        Basis order is (|L>, |R>) with sigma_z = diag(1, -1).  Falls back to
        the computational basis when the Hamiltonian is diagonal or zero.
        """
        eps, tc, delta = self.epsilon, self.tc, self.delta
        if tc == 0.0:
            if eps >= 0.0:
                return np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
            return np.eye(2, dtype=complex)
        # scale-free components; avoids subnormal precision loss
        eps, tc, delta = eps / delta, tc / delta, 1.0
        # components are (L, R); pick the form without eps - delta cancellation
        if eps >= 0.0:
            norm = math.hypot(2 * tc, eps + delta)
            excited = np.array([eps + delta, 2 * tc]) / norm
            ground = np.array([2 * tc, -(eps + delta)]) / norm
        else:
            norm = math.hypot(2 * tc, delta - eps)
            excited = np.array([2 * tc, delta - eps]) / norm
            ground = np.array([eps - delta, 2 * tc]) / norm
        return np.column_stack([ground, excited]).astype(complex)


@dataclass(frozen=True)
class SpectralDecomposition:
    values: np.ndarray
    vectors: np.ndarray

    @classmethod
    def of(cls, matrix: np.ndarray, descending: bool) -> "SpectralDecomposition":
        vals, vecs = np.linalg.eigh(matrix)
        if descending:
            vals, vecs = vals[::-1], vecs[:, ::-1]
        return cls(vals, vecs)

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def _spectral_sum(rho: np.ndarray, ham: np.ndarray) -> np.ndarray:
    """Batched ``sum_jk rho_j e_k (|<rho_j|e_k>|^2 - delta_jk)``."""
    p, pv = np.linalg.eigh(rho)
    e, ev = np.linalg.eigh(ham)
    p, pv = p[..., ::-1], pv[..., ::-1]
    overlap = np.abs(np.einsum("...ij,...ik->...jk", pv.conj(), ev)) ** 2
    kernel = overlap - np.eye(rho.shape[-1])
    return np.einsum("...j,...k,...jk->...", p, e, kernel)


def ergotropy_spectral_many(sx, sy, sz, epsilon, tc) -> np.ndarray:
    """Vectorised spectral route over broadcastable arrays."""
    sx, sy, sz, epsilon, tc = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (sx, sy, sz, epsilon, tc))
    )
    rho = 0.5 * (
        IDENTITY
        + sx[..., None, None] * SIGMA_X
        + sy[..., None, None] * SIGMA_Y
        + sz[..., None, None] * SIGMA_Z
    )
    ham = 0.5 * epsilon[..., None, None] * SIGMA_Z + tc[..., None, None] * SIGMA_X
    w = _spectral_sum(rho, ham)
    # degenerate spectra: every ordering is passive
    r = np.sqrt(sx**2 + sy**2 + sz**2)
    delta = np.hypot(epsilon, 2 * tc)
    return np.where((r == 0.0) | (delta == 0.0), 0.0, w)


def ergotropy_closed_form_many(sx, sy, sz, epsilon, tc) -> np.ndarray:
    r = np.sqrt(np.square(sx) + np.square(sy) + np.square(sz))
    delta = np.hypot(epsilon, 2 * np.asarray(tc))
    return 0.5 * (r * delta + np.asarray(epsilon) * sz + 2 * np.asarray(tc) * sx)


def ergotropy_spectral(state: BlochState, h: QubitHamiltonian) -> float:
    """Ergotropy from the eigen-decompositions of ``rho`` and ``H``."""
    return float(ergotropy_spectral_many(state.sx, state.sy, state.sz, h.epsilon, h.tc))


def ergotropy_closed_form(state: BlochState, h: QubitHamiltonian) -> float:
    return 0.5 * (state.r * h.delta + h.epsilon * state.sz + 2 * h.tc * state.sx)


def ergotropy_spherical(r: float, theta: float, phi: float, h: QubitHamiltonian) -> float:
    return 0.5 * r * (h.delta + h.epsilon * math.cos(theta) + 2 * h.tc * math.sin(theta) * math.cos(phi))


def passive_state(state: BlochState, h: QubitHamiltonian) -> BlochState:
    """Place the state's populations on the energy eigenbasis, largest on the ground level."""
    if state.r == 0.0 or h.delta == 0.0:
        return state
    rho = SpectralDecomposition.of(state.density_matrix(), descending=True)
    ham = SpectralDecomposition.of(h.matrix(), descending=False)
    passive = SpectralDecomposition(rho.values, ham.vectors).reconstruct()
    return BlochState.from_density_matrix(passive)


@dataclass(frozen=True)
class MaxErgotropy:
    value: float
    sx: float
    sy: float
    sz: float

    @property
    def state(self) -> BlochState:
        return BlochState(self.sx, self.sy, self.sz)


def max_ergotropy(h: QubitHamiltonian) -> MaxErgotropy:
    """Maximum over the Bloch ball: the excited eigenstate, worth ``Delta``."""
    delta = h.delta
    if delta == 0.0:
        return MaxErgotropy(0.0, 0.0, 0.0, 1.0)
    return MaxErgotropy(delta, 2 * h.tc / delta, 0.0, h.epsilon / delta)


def ergotropy_nc(r: float, h: QubitHamiltonian) -> float:
    """Ergotropy of an incoherent state at the +z pole with Bloch norm ``r``."""
    return 0.5 * r * (h.delta + h.epsilon)


@dataclass(frozen=True)
class ErgotropySurface:
    theta: np.ndarray  # (n_theta,)
    phi: np.ndarray  # (n_phi,)
    values: np.ndarray  # (n_theta, n_phi)

    def argmax(self) -> tuple[float, float, float]:
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.theta[i]), float(self.phi[j]), float(self.values[i, j])

    def argmin(self) -> tuple[float, float, float]:
        i, j = np.unravel_index(np.argmin(self.values), self.values.shape)
        return float(self.theta[i]), float(self.phi[j]), float(self.values[i, j])

    def records(self) -> list[dict]:
        return [
            {"theta": float(t), "phi": float(p), "ergotropy": float(self.values[i, j])}
            for i, t in enumerate(self.theta)
            for j, p in enumerate(self.phi)
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["theta", "phi", "ergotropy"])
        for i, t in enumerate(self.theta):
            for j, p in enumerate(self.phi):
                writer.writerow([repr(float(t)), repr(float(p)), repr(float(self.values[i, j]))])
        return buf.getvalue()


def ergotropy_surface(h: QubitHamiltonian, r: float, n_theta: int, n_phi: int) -> ErgotropySurface:
    if n_theta < 2 or n_phi < 2:
        raise ValueError("grid needs at least 2 points per axis")
    if not 0.0 <= r <= 1.0 + R_TOL:
        raise ValueError(f"Bloch norm r={r!r} outside [0, 1]")
    r = min(r, 1.0)
    theta = np.linspace(0.0, math.pi, n_theta)
    phi = np.linspace(0.0, 2 * math.pi, n_phi)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    values = 0.5 * r * (h.delta + h.epsilon * np.cos(tt) + 2 * h.tc * np.sin(tt) * np.cos(pp))
    return ErgotropySurface(theta, phi, values)
