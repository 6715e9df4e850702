"""Feedback-controlled transport through the double dot in pseudospin Liouville space.

State vectors are ordered ``(rho00, nocc, sx, sy, sz)`` where
``nocc = rho_LL + rho_RR``, ``sx = rho_LR + rho_RL``,
``sy = (rho_LR - rho_RL) / i`` and ``sz = rho_LL - rho_RR``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .ergotropy import BlochState, QubitHamiltonian
from .phonons import NO_PHONONS, PhononRates

LABELS = ("rho00", "nocc", "sx", "sy", "sz")
ACOS_TOL = 1e-9


class UnreachableTargetError(ValueError):
    """Target with ``sy < 0``; the feedback rotation cannot prepare it."""


class UnsupportedParameterError(ValueError):
    """Parameter point where the target-state expressions are singular."""


class NonUniqueSteadyStateWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LiouvilleVector:
    rho00: float
    nocc: float
    sx: float
    sy: float
    sz: float

    @classmethod
    def from_array(cls, v) -> "LiouvilleVector":
        return cls(*(float(x) for x in np.asarray(v, dtype=float)))

    @classmethod
    def empty(cls) -> "LiouvilleVector":
        return cls(1.0, 0.0, 0.0, 0.0, 0.0)

    @classmethod
    def occupied(cls, s) -> "LiouvilleVector":
        """Dot holding one electron with pseudospin ``s``."""
        sx, sy, sz = (float(x) for x in s)
        return cls(0.0, 1.0, sx, sy, sz)

    def as_array(self) -> np.ndarray:
        return np.array([self.rho00, self.nocc, self.sx, self.sy, self.sz])

    @property
    def trace(self) -> float:
        return self.rho00 + self.nocc

    @property
    def bloch_norm(self) -> float:
        return math.sqrt(self.sx**2 + self.sy**2 + self.sz**2)

    def density_matrix(self) -> np.ndarray:
        """3x3 density matrix in the basis (|0>, |L>, |R>)."""
        rho = np.zeros((3, 3), dtype=complex)
        rho[0, 0] = self.rho00
        rho[1, 1] = 0.5 * (self.nocc + self.sz)
        rho[2, 2] = 0.5 * (self.nocc - self.sz)
        rho[1, 2] = 0.5 * (self.sx + 1j * self.sy)
        rho[2, 1] = 0.5 * (self.sx - 1j * self.sy)
        return rho


@dataclass(frozen=True)
class ReservoirRates:
    gamma_l: float = 1.0
    gamma_r: float = 1.0

    def __post_init__(self):
        for name in ("gamma_l", "gamma_r"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"{name}={value!r} must be finite and >= 0")


@dataclass(frozen=True)
class ControlParams:
    """Feedback rotation ``exp(-i theta_c n.sigma)`` with ``n = (sin theta, 0, cos theta)``."""

    theta: float = 0.0
    theta_c: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.theta_c)):
            raise ValueError("control angles must be finite")

    @classmethod
    def identity(cls) -> "ControlParams":
        return cls(0.0, 0.0)

    @property
    def axis(self) -> np.ndarray:
        return np.array([math.sin(self.theta), 0.0, math.cos(self.theta)])

    def injected(self) -> np.ndarray:
        """Pseudospin of the electron right after the rotation acts on |L>."""
        th, tc = self.theta, self.theta_c
        return np.array(
            [
                math.sin(2 * th) * math.sin(tc) ** 2,
                math.sin(th) * math.sin(2 * tc),
                math.cos(th) ** 2 + math.cos(2 * tc) * math.sin(th) ** 2,
            ]
        )


@dataclass(frozen=True)
class TargetState:
    sx: float
    sy: float
    sz: float
    branch: int
    gamma_w: float

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])

    @property
    def bloch(self) -> BlochState:
        return BlochState(self.sx, self.sy, self.sz)


@dataclass(frozen=True)
class EffectiveHamiltonianSpectrum:
    eps_minus: complex
    eps_plus: complex

    @property
    def rate_minus(self) -> float:
        return -2.0 * self.eps_minus.imag

    @property
    def rate_plus(self) -> float:
        return -2.0 * self.eps_plus.imag

    def rate(self, branch: int) -> float:
        return self.rate_plus if branch > 0 else self.rate_minus


def build_liouvillian_free(
    h: QubitHamiltonian, rates: ReservoirRates, ph: PhononRates = NO_PHONONS
) -> np.ndarray:
    """Smooth-evolution generator between jumps, including phonon dephasing.

    The ``-gamma`` entry feeds the occupation into the sx equation; it is
    taken as given together with ``gamma_p`` and ``gamma_b``.
    """
    eps, tc = h.epsilon, h.tc
    gl, gr = rates.gamma_l, rates.gamma_r
    g, gp, gb = ph.gamma, ph.gamma_p, ph.gamma_b
    return np.array(
        [
            [-gl, 0.0, 0.0, 0.0, 0.0],
            [0.0, -0.5 * gr, 0.0, 0.0, 0.5 * gr],
            [0.0, -g, -0.5 * gr - gp, eps, gb],
            [0.0, 0.0, -eps, -0.5 * gr - gp, 2.0 * tc],
            [0.0, 0.5 * gr, 0.0, -2.0 * tc, -0.5 * gr],
        ]
    )


def build_jump_left_controlled(rates: ReservoirRates, ctrl: ControlParams) -> np.ndarray:
    m = np.zeros((5, 5))
    m[1, 0] = rates.gamma_l
    m[2:, 0] = rates.gamma_l * ctrl.injected()
    return m


def build_jump_right(rates: ReservoirRates) -> np.ndarray:
    m = np.zeros((5, 5))
    m[0, 1] = 0.5 * rates.gamma_r
    m[0, 4] = -0.5 * rates.gamma_r
    return m


def build_generator(
    h: QubitHamiltonian,
    rates: ReservoirRates,
    ctrl: ControlParams | None = None,
    ph: PhononRates = NO_PHONONS,
) -> np.ndarray:
    """Full generator; ``ctrl=None`` means no feedback (electron enters in |L>)."""
    ctrl = ctrl or ControlParams.identity()
    return build_liouvillian_free(h, rates, ph) + build_jump_left_controlled(rates, ctrl) + build_jump_right(rates)


def generator_to_json(generator: np.ndarray) -> str:
    generator = np.asarray(generator, dtype=float)
    if generator.shape != (5, 5):
        raise ValueError(f"expected a 5x5 generator, got {generator.shape}")
    payload = {"rows": list(LABELS), "columns": list(LABELS), "data": generator.tolist()}
    return json.dumps(payload, indent=2)


def generator_from_json(text: str) -> np.ndarray:
    payload = json.loads(text)
    if tuple(payload["rows"]) != LABELS or tuple(payload["columns"]) != LABELS:
        raise ValueError("generator labels do not match rho00,nocc,sx,sy,sz")
    return np.array(payload["data"], dtype=float)


def target_state(h: QubitHamiltonian, gamma_r: float, branch: int | None = None) -> TargetState:
    """Pure state the feedback must inject so that it is a no-jump eigenstate.

    ``branch`` is the sign of sz.  The default follows the excited eigenstate
    of H, which carries the maximum ergotropy as ``gamma_r -> 0``.  At
    ``gamma_r == 0`` the eigenstates of H are returned directly.  For finite
    ``gamma_r`` the differences ``X - gamma_w`` are rewritten through their
    conjugates, which is algebraically identical and stays accurate as
    ``gamma_r`` becomes small.
    """
    eps, tc = h.epsilon, h.tc
    if not (math.isfinite(gamma_r) and gamma_r >= 0.0):
        raise ValueError(f"gamma_r={gamma_r!r} must be finite and >= 0")
    if branch is None:
        # the branch tied to the excited eigenstate of H
        branch = 1 if eps >= 0.0 else -1
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")

    a = 4 * eps**2 + gamma_r**2 + 16 * tc**2
    # a**2 - 64 gr^2 Tc^2 factored exactly
    gamma_w = math.sqrt((4 * eps**2 + (gamma_r - 4 * abs(tc)) ** 2) * (a + 8 * gamma_r * abs(tc)))

    if gamma_r == 0.0:
        delta = h.delta
        if delta == 0.0:
            raise UnsupportedParameterError("target undefined for eps = Tc = 0")
        if eps == 0.0:
            # sz vanishes; branch +1 is the excited state
            return TargetState(branch * 2 * tc / delta, 0.0, 0.0, branch, gamma_w)
        sign = branch * (1.0 if eps > 0.0 else -1.0)
        return TargetState(sign * 2 * tc / delta, 0.0, sign * eps / delta, branch, gamma_w)

    if eps == 0.0:
        raise UnsupportedParameterError("sx expression divides by eps; eps = 0 unsupported for gamma_r > 0")
    if tc == 0.0:
        raise UnsupportedParameterError("target expressions divide by Tc; Tc = 0 unsupported for gamma_r > 0")

    # gamma_w**2 - b**2 = 16 gr^2 eps^2; the gr factor is cancelled by hand
    b = 4 * eps**2 + 16 * tc**2 - gamma_r**2
    if b > 0.0:
        sz = branch * 4 * abs(eps) / math.sqrt(2.0 * (gamma_w + b))
    else:
        radicand = gamma_w - b
        if radicand < 0.0:
            raise ValueError(f"negative radicand {radicand!r} in sz")
        sz = branch * math.sqrt(radicand) / (math.sqrt(2.0) * gamma_r)

    # a**2 - gamma_w**2 = 64 gr^2 Tc^2
    sy = 8 * gamma_r * tc / (a + gamma_w)

    # gamma_w**2 - c**2 = 256 Tc^2 eps^2
    c = 4 * eps**2 + gamma_r**2 - 16 * tc**2
    if c > 0.0:
        sx = 16 * eps * tc / (gamma_w + c) * sz
    else:
        sx = (gamma_w - c) / (16 * eps * tc) * sz
    return TargetState(sx, sy, sz, branch, gamma_w)


def solve_control_angles(target) -> ControlParams:
    """Axis angle and rotation angle that rotate |L> onto ``target``.

    Accepts a :class:`TargetState`, :class:`BlochState` or a 3-sequence.
    """
    sx, sy, sz = (float(x) for x in _as_vector(target))
    if sy < -ACOS_TOL:
        raise UnreachableTargetError(f"target sy={sy!r} < 0 cannot be reached by the feedback rotation")
    if 1.0 - sz <= ACOS_TOL:
        return ControlParams(0.0, 0.0, degenerate=True)
    theta = math.acos(_clamped(sx / math.sqrt(sx**2 + (sz - 1.0) ** 2)))
    theta_c = math.acos(_clamped(sy / math.sqrt(2.0 - 2.0 * sz)))
    return ControlParams(theta, theta_c)


def _clamped(x: float) -> float:
    if abs(x) > 1.0 + ACOS_TOL:
        raise ValueError(f"arccos argument {x!r} outside [-1, 1]")
    return max(-1.0, min(1.0, x))


def _as_vector(target) -> np.ndarray:
    if isinstance(target, (TargetState, BlochState)):
        return target.vector
    return np.asarray(target, dtype=float)


def effective_spectrum(h: QubitHamiltonian, gamma_r: float) -> EffectiveHamiltonianSpectrum:
    """Eigenvalues of the no-jump Hamiltonian on the occupied block."""
    eps, tc = h.epsilon, h.tc
    root = np.sqrt(complex(4 * eps**2 - gamma_r**2 + 16 * tc**2, 4 * eps * gamma_r))
    return EffectiveHamiltonianSpectrum(
        eps_minus=complex(0.25 * (-1j * gamma_r - root)),
        eps_plus=complex(0.25 * (-1j * gamma_r + root)),
    )


def target_rate(h: QubitHamiltonian, gamma_r: float, target: TargetState) -> float:
    """Effective drain rate of the electron sitting in ``target``.

    Picks the eigenvalue whose decay matches ``gamma_r * rho_RR`` of the
    target, which is how the two eigenstates are told apart.
    """
    spec = effective_spectrum(h, gamma_r)
    expected = 0.5 * gamma_r * (1.0 - target.sz)
    return min((spec.rate_minus, spec.rate_plus), key=lambda r: abs(r - expected))


def _null_basis(generator: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    _, s, vh = np.linalg.svd(generator)
    scale = max(s[0], 1.0)
    return vh[s <= rtol * scale].conj().T


def stationary_projection(generator: np.ndarray, v0: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Spectral projection of ``v0`` onto the zero eigenspace (its time average)."""
    w, vl, vr = scipy.linalg.eig(generator, left=True, right=True)
    zero = np.abs(w) <= tol * max(1.0, np.abs(w).max())
    out = np.zeros(5, dtype=complex)
    for k in np.flatnonzero(zero):
        left, right = vl[:, k], vr[:, k]
        out += right * (left.conj() @ v0) / (left.conj() @ right)
    return out.real


def steady_state(generator: np.ndarray, v0=None) -> LiouvilleVector:
    """Stationary vector of ``generator`` normalised to unit trace.

    With more than one stationary direction a warning is issued and the
    projection of ``v0`` onto the stationary subspace is returned.
    """
    generator = np.asarray(generator, dtype=float)
    basis = _null_basis(generator)
    if basis.shape[1] == 1:
        v = basis[:, 0]
        trace = v[0] + v[1]
        if abs(trace) < 1e-14:
            raise ValueError("stationary direction carries no probability")
        return LiouvilleVector.from_array(v / trace)
    warnings.warn(
        f"generator has {basis.shape[1]} stationary directions; projecting the initial condition",
        NonUniqueSteadyStateWarning,
        stacklevel=2,
    )
    if v0 is None:
        raise ValueError("non-unique steady state and no initial condition supplied")
    v0 = v0.as_array() if isinstance(v0, LiouvilleVector) else np.asarray(v0, dtype=float)
    return LiouvilleVector.from_array(stationary_projection(generator, v0))


def steady_state_controlled(
    h: QubitHamiltonian,
    rates: ReservoirRates,
    control=None,
    ph: PhononRates = NO_PHONONS,
    v0=None,
) -> LiouvilleVector:
    """Stationary state of the controlled generator.

    ``control`` may be a :class:`ControlParams`, a target (anything
    :func:`solve_control_angles` accepts) or ``None`` for no feedback.
    """
    if control is not None and not isinstance(control, ControlParams):
        control = solve_control_angles(control)
    return steady_state(build_generator(h, rates, control, ph), v0)


def steady_state_formula(h: QubitHamiltonian, rates: ReservoirRates, target: TargetState) -> LiouvilleVector:
    """Mixture of the empty dot and the target weighted by the in/out rates."""
    gj = target_rate(h, rates.gamma_r, target)
    gl = rates.gamma_l
    norm = gl + gj
    return LiouvilleVector(gj / norm, gl / norm, *(gl / norm * target.vector))
