"""Time integration of the pseudospin master equation and the charging protocol."""

from __future__ import annotations

import csv
import io
import math
import random
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .ergotropy import QubitHamiltonian
from .feedback import (
    LABELS,
    ControlParams,
    LiouvilleVector,
    ReservoirRates,
    build_generator,
    solve_control_angles,
    target_state,
)
from .phonons import NO_PHONONS, PhononParams, dephasing_rates

DEFAULT_DT = 1e-3
DEFAULT_RECORD_EVERY = 10
POSITIVITY_TOL = 1e-6
RATE_FLOOR = 1e-10

TRAJECTORY_COLUMNS = ("t", "stage", *LABELS, "bloch_norm", "ergotropy")
SUMMARY_COLUMNS = ("param_name", "param_value", "peak_ergotropy", "decay_time")
SWEEP_PARAMS = ("epsilon", "tc", "kT")


class IntegrationError(ArithmeticError):
    """The integrated state left the physical region (step too large)."""


class TruncationWarning(UserWarning):
    """A stage hit its time cap before the steady-state residual criterion."""


def rk4_step(generator: np.ndarray, v: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of ``dv/dt = G v``.

    ``v`` may be a matrix, in which case every column is stepped.
    """
    k1 = generator @ v
    k2 = generator @ (v + 0.5 * dt * k1)
    k3 = generator @ (v + 0.5 * dt * k2)
    k4 = generator @ (v + dt * k3)
    return v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_propagator(generator: np.ndarray, dt: float) -> np.ndarray:
    """Matrix of one RK4 step; exact for a linear time-independent system."""
    return rk4_step(generator, np.eye(generator.shape[0]), dt)


@dataclass
class Segment:
    t: np.ndarray
    states: np.ndarray
    converged: bool = True
    residual: float = math.nan


def _check_physical(v: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(v)):
        raise IntegrationError(f"non-finite state at t={t:g}")
    s2 = v[2] ** 2 + v[3] ** 2 + v[4] ** 2
    if s2 > v[1] ** 2 + POSITIVITY_TOL:
        raise IntegrationError(
            f"conditional qubit state unphysical at t={t:g}: |s|^2={s2:.3e} > nocc^2={v[1] ** 2:.3e}; reduce dt"
        )


def integrate(
    generator,
    v0,
    t_span,
    dt: float = DEFAULT_DT,
    record_every: int = DEFAULT_RECORD_EVERY,
    residual_tol: float | None = None,
    check_positivity: bool = True,
) -> Segment:
    """Fixed-step RK4 integration of ``dv/dt = G v`` over ``t_span = (t0, t1)``.

    Samples are recorded every ``record_every`` steps plus the final time.
    If ``residual_tol`` is given the run stops at the first record where
    ``||G v|| < residual_tol``; ``t1`` then acts as a cap and
    ``Segment.converged`` reports whether the criterion was met.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    generator = np.asarray(generator, dtype=float)
    v = v0.as_array() if isinstance(v0, LiouvilleVector) else np.array(v0, dtype=float)
    t0, t1 = (float(x) for x in t_span)
    if t1 < t0:
        raise ValueError("t_span must be increasing")

    n_steps = int(round((t1 - t0) / dt))
    step = rk4_propagator(generator, dt)
    hop = np.linalg.matrix_power(step, record_every)
    n_full, rem = divmod(n_steps, record_every)
    n_rec = n_full + (1 if rem else 0)

    t = np.empty(n_rec + 1)
    states = np.empty((n_rec + 1, v.size))
    t[0], states[0] = t0, v
    residual = float(np.linalg.norm(generator @ v))
    if residual_tol is not None and residual < residual_tol:
        return Segment(t[:1], states[:1], True, residual)

    k = 0
    for k in range(1, n_full + 1):
        v = hop @ v
        t[k] = t0 + k * record_every * dt
        states[k] = v
        if check_positivity:
            _check_physical(v, t[k])
        if residual_tol is not None:
            residual = float(np.linalg.norm(generator @ v))
            if residual < residual_tol:
                return Segment(t[: k + 1], states[: k + 1], True, residual)
    if rem:
        k = n_rec
        v = np.linalg.matrix_power(step, rem) @ v
        t[k] = t0 + n_steps * dt
        states[k] = v
        if check_positivity:
            _check_physical(v, t[k])
    residual = float(np.linalg.norm(generator @ v))
    converged = residual_tol is None or residual < residual_tol
    return Segment(t, states, converged, residual)


def observables(v, h: QubitHamiltonian) -> tuple[float, float]:
    """Bloch-vector length and ergotropy of the unconditioned pseudospin."""
    v = v.as_array() if isinstance(v, LiouvilleVector) else np.asarray(v, dtype=float)
    norm, erg = _observables(v[None, :], h)
    return float(norm[0]), float(erg[0])


def _observables(states: np.ndarray, h: QubitHamiltonian):
    s = states[:, 2:5]
    norm = np.sqrt(np.einsum("ij,ij->i", s, s))
    erg = 0.5 * (norm * h.delta + h.epsilon * s[:, 2] + 2.0 * h.tc * s[:, 0])
    return norm, erg


# stage control modes besides explicit ControlParams
CONTROL_LIMIT = "limit"  # target of the gamma_r -> 0 limit
CONTROL_STAGE = "stage"  # target computed at the stage's own gamma_r


@dataclass(frozen=True)
class Stage:
    """One stage-constant segment of a protocol.

    Exactly one of ``duration`` and ``residual_tol`` sets termination;
    a residual stage is capped at ``max_time``.
    """

    label: str
    rates: ReservoirRates
    control: ControlParams | str | None = None
    phonons: bool = True
    duration: float | None = None
    residual_tol: float | None = None
    max_time: float = 1e3
    record_every: int = DEFAULT_RECORD_EVERY

    def __post_init__(self):
        if (self.duration is None) == (self.residual_tol is None):
            raise ValueError(f"stage {self.label!r}: give exactly one of duration or residual_tol")
        if self.duration is not None and not (math.isfinite(self.duration) and self.duration >= 0.0):
            raise ValueError(f"stage {self.label!r}: duration must be >= 0")
        if self.residual_tol is not None and not self.residual_tol > 0.0:
            raise ValueError(f"stage {self.label!r}: residual_tol must be > 0")
        if not self.max_time > 0.0:
            raise ValueError(f"stage {self.label!r}: max_time must be > 0")
        if isinstance(self.control, str) and self.control not in (CONTROL_LIMIT, CONTROL_STAGE):
            raise ValueError(f"stage {self.label!r}: unknown control mode {self.control!r}")
        if self.record_every < 1:
            raise ValueError(f"stage {self.label!r}: record_every must be >= 1")

    def control_params(self, h: QubitHamiltonian) -> ControlParams | None:
        if self.control == CONTROL_LIMIT:
            return solve_control_angles(target_state(h, 0.0))
        if self.control == CONTROL_STAGE:
            return solve_control_angles(target_state(h, self.rates.gamma_r))
        return self.control

    def generator(self, h: QubitHamiltonian, phonons: PhononParams | None) -> np.ndarray:
        ph = dephasing_rates(h, phonons) if (self.phonons and phonons is not None) else NO_PHONONS
        return build_generator(h, self.rates, self.control_params(h), ph)


@dataclass(frozen=True)
class ProtocolSchedule:
    stages: tuple[Stage, ...]
    dt: float = DEFAULT_DT

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ValueError("a protocol needs at least one stage")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")


def staged_schedule(
    gamma_l: float = 1.0,
    gamma_r: float = 1.0,
    control: ControlParams | str | None = CONTROL_LIMIT,
    charge_gamma_r: float = 1e-3,
    discharge_time: float = 5000.0,
    dt: float = DEFAULT_DT,
    record_every: int = DEFAULT_RECORD_EVERY,
) -> ProtocolSchedule:
    """Empty dot -> uncontrolled steady state -> feedback charging -> decoupled.

    The charging stage keeps a small drain ``charge_gamma_r``: with the drain
    exactly zero the electron already present at the end of stage A is never
    replaced and the target is not reached.
    """
    return ProtocolSchedule(
        (
            Stage(
                "A",
                ReservoirRates(gamma_l, gamma_r),
                None,
                residual_tol=1e-8,
                max_time=1e3,
                record_every=record_every,
            ),
            Stage(
                "B",
                ReservoirRates(gamma_l, charge_gamma_r),
                control,
                residual_tol=1e-8,
                max_time=1e5,
                record_every=500,
            ),
            Stage("C", ReservoirRates(0.0, 0.0), None, duration=discharge_time, record_every=100),
        ),
        dt=dt,
    )


def direct_schedule(
    gamma_l: float = 1.0,
    control: ControlParams | str | None = CONTROL_LIMIT,
    charge_time: float = 20.0,
    discharge_time: float = 5000.0,
    dt: float = DEFAULT_DT,
    record_every: int = DEFAULT_RECORD_EVERY,
) -> ProtocolSchedule:
    """Feedback charging of the empty dot with the drain off, then decoupling.

    Charging takes a few ``1/gamma_l``, short against phonon times, so the
    discharge starts close to the maximum-ergotropy state.
    """
    return ProtocolSchedule(
        (
            Stage("A", ReservoirRates(gamma_l, 0.0), control, duration=charge_time, record_every=record_every),
            Stage("C", ReservoirRates(0.0, 0.0), None, duration=discharge_time, record_every=1000),
        ),
        dt=dt,
    )


@dataclass(frozen=True)
class StageReport:
    label: str
    t_start: float
    t_end: float
    converged: bool
    residual: float


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    stage: np.ndarray
    bloch_norm: np.ndarray
    ergotropy: np.ndarray
    reports: list[StageReport] = field(default_factory=list)

    def __len__(self):
        return self.t.size

    def state(self, i: int) -> LiouvilleVector:
        return LiouvilleVector.from_array(self.states[i])

    def segment(self, label: str) -> "Trajectory":
        """Samples of one stage, including the boundary state it started from."""
        idx = np.flatnonzero(self.stage == label)
        if idx.size == 0:
            raise KeyError(label)
        if idx[0] > 0:
            idx = np.r_[idx[0] - 1, idx]
        return Trajectory(
            self.t[idx],
            self.states[idx],
            self.stage[idx],
            self.bloch_norm[idx],
            self.ergotropy[idx],
            [r for r in self.reports if r.label == label],
        )

    def records(self) -> list[dict]:
        out = []
        for i in range(len(self)):
            row = {"t": float(self.t[i]), "stage": str(self.stage[i])}
            row.update({k: float(x) for k, x in zip(LABELS, self.states[i])})
            row["bloch_norm"] = float(self.bloch_norm[i])
            row["ergotropy"] = float(self.ergotropy[i])
            out.append(row)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for i in range(len(self)):
            writer.writerow(
                [repr(float(self.t[i])), self.stage[i]]
                + [repr(float(x)) for x in self.states[i]]
                + [repr(float(self.bloch_norm[i])), repr(float(self.ergotropy[i]))]
            )
        return buf.getvalue()


def run_protocol(
    schedule: ProtocolSchedule,
    h: QubitHamiltonian,
    phonons: PhononParams | None = None,
    v0=None,
) -> Trajectory:
    """Run every stage in order, each starting from where the previous ended."""
    v = LiouvilleVector.empty().as_array() if v0 is None else np.asarray(
        v0.as_array() if isinstance(v0, LiouvilleVector) else v0, dtype=float
    )
    times, states, labels, reports = [], [], [], []
    t0 = 0.0
    for k, st in enumerate(schedule.stages):
        gen = st.generator(h, phonons)
        if st.duration is not None:
            seg = integrate(gen, v, (t0, t0 + st.duration), schedule.dt, st.record_every)
        else:
            seg = integrate(gen, v, (t0, t0 + st.max_time), schedule.dt, st.record_every, st.residual_tol)
            if not seg.converged:
                warnings.warn(
                    f"stage {st.label!r} stopped at t={seg.t[-1]:g} with residual {seg.residual:.3e} "
                    f"> {st.residual_tol:g}",
                    TruncationWarning,
                    stacklevel=2,
                )
        first = 0 if k == 0 else 1
        times.append(seg.t[first:])
        states.append(seg.states[first:])
        labels.append(np.full(seg.t.size - first, st.label, dtype=object))
        reports.append(StageReport(st.label, float(seg.t[0]), float(seg.t[-1]), seg.converged, seg.residual))
        v = seg.states[-1]
        t0 = float(seg.t[-1])
    states_arr = np.concatenate(states)
    norm, erg = _observables(states_arr, h)
    return Trajectory(np.concatenate(times), states_arr, np.concatenate(labels), norm, erg, reports)


@dataclass(frozen=True)
class DecayFit:
    peak: float
    t_peak: float
    rate: float
    complete: bool = True  # False when W never fell below peak/10

    @property
    def decay_time(self) -> float:
        return 1.0 / self.rate if self.rate > RATE_FLOOR else math.inf


def fit_decay(t, w) -> DecayFit:
    """Exponential rate from a least-squares line through ``log W``.

    The window runs from the maximum of ``w`` to the last sample before it
    falls below a tenth of that maximum.
    """
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    i0 = int(np.argmax(w))
    peak = float(w[i0])
    if not peak > 0.0:
        return DecayFit(peak, float(t[i0]), math.nan)
    below = np.flatnonzero(w[i0:] < peak / 10.0)
    i1 = i0 + (int(below[0]) if below.size else w.size - i0)
    tw, ww = t[i0:i1], w[i0:i1]
    if tw.size < 2:
        return DecayFit(peak, float(t[i0]), math.nan, bool(below.size))
    slope = np.polyfit(tw - tw[0], np.log(ww), 1)[0]
    return DecayFit(peak, float(t[i0]), float(-slope), bool(below.size))


@dataclass
class SweepPoint:
    param_name: str
    param_value: float
    fit: DecayFit
    t: np.ndarray
    ergotropy: np.ndarray

    @property
    def peak_ergotropy(self) -> float:
        return self.fit.peak

    @property
    def decay_time(self) -> float:
        return self.fit.decay_time


@dataclass
class SweepResult:
    points: list[SweepPoint]

    def records(self) -> list[dict]:
        return [
            {
                "param_name": p.param_name,
                "param_value": float(p.param_value),
                "peak_ergotropy": float(p.peak_ergotropy),
                "decay_time": float(p.decay_time),
            }
            for p in self.points
        ]

    def curve_records(self) -> list[dict]:
        return [
            {"param_name": p.param_name, "param_value": float(p.param_value), "t": float(ti), "ergotropy": float(wi)}
            for p in self.points
            for ti, wi in zip(p.t, p.ergotropy)
        ]

    def to_csv(self) -> str:
        return _records_to_csv(SUMMARY_COLUMNS, self.records())

    def curves_to_csv(self) -> str:
        return _records_to_csv(("param_name", "param_value", "t", "ergotropy"), self.curve_records())


def _records_to_csv(columns, records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in (rec[c] for c in columns)])
    return buf.getvalue()


def _sweep_point(param, value, h, phonons, schedule) -> SweepPoint:
    if param == "epsilon":
        h = QubitHamiltonian(value, h.tc)
    elif param == "tc":
        h = QubitHamiltonian(h.epsilon, value)
    else:
        phonons = replace(phonons, beta=1.0 / value)
    traj = run_protocol(schedule, h, phonons)
    tail = traj.segment(schedule.stages[-1].label)
    t = tail.t - tail.t[0]
    fit = fit_decay(t, tail.ergotropy)
    if not fit.complete and fit.rate > RATE_FLOOR:
        warnings.warn(
            f"{param}={value:g}: ergotropy did not fall to a tenth of its peak; "
            "decay fitted over the whole final stage",
            TruncationWarning,
            stacklevel=3,
        )
    return SweepPoint(param, float(value), fit, t, tail.ergotropy)


def self_discharge_sweep(
    param: str,
    values,
    h: QubitHamiltonian,
    phonons: PhononParams,
    schedule: ProtocolSchedule | None = None,
    workers: int | None = None,
    seed: int | None = None,
) -> SweepResult:
    """Decay of the stored ergotropy in the final stage across a parameter grid.

    ``param`` is one of ``epsilon``, ``tc`` or ``kT``.  Points run on a thread
    pool; ``seed`` only shuffles the submission order and results come back
    in the order of ``values``.
    """
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {SWEEP_PARAMS}")
    values = [float(x) for x in values]
    if not values:
        raise ValueError("sweep needs at least one value")
    if param == "kT" and any(not x > 0.0 for x in values):
        raise ValueError("temperatures must be positive")
    schedule = schedule or direct_schedule()
    order = list(range(len(values)))
    if seed is not None:
        random.Random(seed).shuffle(order)
    results: dict[int, SweepPoint] = {}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {i: pool.submit(_sweep_point, param, values[i], h, phonons, schedule) for i in order}
        for i, fut in futures.items():
            results[i] = fut.result()
    return SweepResult([results[i] for i in range(len(values))])
