"""Method-of-lines heat network with ghost-node Neumann boundaries and explicit Euler.

Each agent obeys q_t = theta q_ss on [0, 1] with q_s(0) = 0 and
q_s(1) = u + psi. Ghost values q_{-1} = q_1 and q_n = q_{n-2} + 2 h (u + psi)
close the second-difference stencil at the two ends.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from heatnet.disturbance import DisturbanceSpec, eval_disturbance
from heatnet.errors import CflViolation, IncompatibleICs, NumericalBlowup, ValidationError
from heatnet.field import AgentField, Grid, derivative_array
from heatnet.protocols import advance_control

log = logging.getLogger(__name__)

COMPAT_TOL = 1e-6


@dataclass(frozen=True)
class PlantParams:
    diffusivity: float = 1.0

    def __post_init__(self):
        if not (self.diffusivity > 0 and np.isfinite(self.diffusivity)):
            raise ValidationError("diffusivity must be > 0", path="plant.diffusivity")


@dataclass(frozen=True, eq=False)
class NetworkState:
    q: AgentField
    z: AgentField | None
    u: np.ndarray
    time: float = 0.0
    fresh: bool = False


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_end: float
    record_stride: int = 100

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("dt must be > 0", path="sim.dt")
        if not self.t_end > 0:
            raise ValidationError("t_end must be > 0", path="sim.t_end")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValidationError("record_stride must be a positive integer", path="sim.record_stride")

    @property
    def steps(self):
        return int(round(self.t_end / self.dt))

    def check_cfl(self, params, grid, allow_unstable=False):
        limit = cfl_limit(params, grid)
        if self.dt > limit and not allow_unstable:
            raise CflViolation(
                f"dt={self.dt:g} exceeds the explicit stability limit h^2/(2 theta)={limit:.4g}",
                path="sim.dt",
            )
        return limit


def cfl_limit(params, grid):
    h = grid.spacing
    return h * h / (2.0 * params.diffusivity)


def rhs_array(q, u_eff, theta, h):
    """Semi-discrete right-hand side on a raw (N, n) array."""
    out = np.empty_like(q)
    c = theta / (h * h)
    out[:, 1:-1] = c * (q[:, :-2] - 2.0 * q[:, 1:-1] + q[:, 2:])
    out[:, 0] = c * (2.0 * q[:, 1] - 2.0 * q[:, 0])
    out[:, -1] = c * (2.0 * q[:, -2] - 2.0 * q[:, -1] + 2.0 * h * u_eff)
    return out


def heat_rhs(q, u, params):
    u = np.broadcast_to(np.asarray(u, dtype=float), (q.agent_count,))
    return q.with_values(rhs_array(q.values, u, params.diffusivity, q.grid.spacing))


def euler_step(state, rhs, dt):
    q = state.q.with_values(state.q.values + dt * rhs.values)
    return NetworkState(q=q, z=rhs, u=state.u, time=state.time + dt, fresh=True)


@dataclass
class RunRecord:
    """Everything a run produced; series are sampled every ``record_stride`` steps."""

    metadata: dict
    grid: Grid
    times: list = field(default_factory=list)
    q: list = field(default_factory=list)      # (N, n) arrays
    z: list = field(default_factory=list)      # (N, n) arrays, RHS at the recorded state
    u: list = field(default_factory=list)      # applied control (without disturbance)
    psi: list = field(default_factory=list)
    status: str = "running"
    error: str | None = None
    report: object = None

    def __len__(self):
        return len(self.times)

    def append(self, t, q, z, u, psi):
        self.times.append(float(t))
        self.q.append(np.array(q))
        self.z.append(np.array(z))
        self.u.append(np.array(u))
        self.psi.append(np.array(psi))

    def arrays(self):
        return (np.array(self.times), np.array(self.q), np.array(self.z),
                np.array(self.u), np.array(self.psi))


@dataclass(frozen=True, eq=False)
class StepInfo:
    """Passed to ``on_step`` after every Euler step."""

    step: int
    t: float
    q: np.ndarray       # state before the step
    z: np.ndarray       # RHS at that state
    u: np.ndarray       # control applied during the step
    psi: np.ndarray
    du: np.ndarray      # control increment produced by the step
    q_next: np.ndarray


def boundary_slopes(q0):
    """Second-order one-sided slopes q_s(0), q_s(1) of a sampled field."""
    d = derivative_array(q0.values, q0.grid.spacing, 1)
    return d[:, 0], d[:, -1]


def check_compatibility(q0, u0, psi0, slopes=None, tol=COMPAT_TOL):
    """Return the worst boundary-slope mismatch; ``slopes`` overrides the discrete estimate."""
    left, right = slopes if slopes is not None else boundary_slopes(q0)
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    mismatch = max(np.abs(left).max(), np.abs(right - (u0 + psi0)).max())
    scale = tol * (1.0 + float(np.linalg.norm(q0.values)))
    return mismatch, mismatch <= scale


def simulate(topology, q0, protocol, disturbance, params, config, *, recorder=None,
             ic_slopes=None, compatibility="error", allow_unstable=False,
             on_step=None, metadata=None):
    """Run the closed loop from ``q0`` to ``config.t_end``.

    Per step: disturbance, control, RHS with the effective input u + psi,
    sliding-law rates from the fresh RHS, then Euler on state and
    integrators. ``recorder`` (a RunRecord) is filled every
    ``record_stride`` steps including the final state.
    """
    grid = q0.grid
    N = q0.agent_count
    if topology.agent_count != N:
        raise ValidationError(f"IC has {N} agents, graph has {topology.agent_count}")
    if disturbance is None:
        disturbance = DisturbanceSpec.none(N)
    if disturbance.agent_count != N:
        raise ValidationError("disturbance length does not match agent count", path="disturbance")
    limit = config.check_cfl(params, grid, allow_unstable)
    if config.dt > limit:
        log.warning("dt=%g exceeds stability limit %.4g; running anyway", config.dt, limit)

    theta = params.diffusivity
    h = grid.spacing
    dt = config.dt
    q = np.array(q0.values)
    ctrl = protocol.initial_state() if protocol.dynamic else None

    psi0 = eval_disturbance(disturbance, 0.0)
    u0 = ctrl.u if ctrl is not None else protocol.control(q[:, -1])
    mismatch, ok = check_compatibility(q0, u0, psi0, ic_slopes)
    meta = dict(metadata or {})
    meta["ic_compatibility_mismatch"] = float(mismatch)
    meta["ic_compatible"] = bool(ok)
    if not ok:
        msg = f"initial profile violates the boundary conditions (slope mismatch {mismatch:.3g})"
        if compatibility == "error":
            raise IncompatibleICs(msg)
        if compatibility == "warn":
            log.warning(msg)

    record = recorder if recorder is not None else RunRecord(meta, grid)
    record.metadata.update(meta)
    record.metadata["cfl_limit"] = limit
    stride = config.record_stride
    steps = config.steps

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps + 1):
            t = k * dt
            psi = eval_disturbance(disturbance, t)
            u = ctrl.u if ctrl is not None else protocol.control(q[:, -1])
            z = rhs_array(q, u + psi, theta, h)
            finite = np.isfinite(z).all() and np.isfinite(u).all()
            if (k % stride == 0 or k == steps) and finite:
                record.append(t, q, z, u, psi)
            if not finite:
                record.status = "blowup"
                record.error = f"non-finite state at t={t:.6g}"
                raise NumericalBlowup(record.error, record)
            if k == steps:
                break
            if ctrl is not None:
                r1, r2 = protocol.rates(q[:, -1], z[:, -1])
                ctrl, du = advance_control(ctrl, r1, r2, dt)
            else:
                du = None
            q_next = q + dt * z
            if not np.isfinite(q_next).all():
                if k % stride != 0:
                    record.append(t, q, z, u, psi)
                record.status = "blowup"
                record.error = f"non-finite state at t={(k + 1) * dt:.6g}"
                raise NumericalBlowup(record.error, record)
            if on_step is not None:
                if du is None:
                    du = protocol.control(q_next[:, -1]) - u
                on_step(StepInfo(k, t, q, z, u, psi, du, q_next))
            q = q_next
    record.status = "ok"
    return record


def final_state(record):
    grid = record.grid
    return NetworkState(
        q=AgentField(record.q[-1], grid), z=AgentField(record.z[-1], grid),
        u=record.u[-1], time=record.times[-1], fresh=True,
    )
