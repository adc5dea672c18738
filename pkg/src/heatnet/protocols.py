"""Boundary interaction laws: static linear averaging and the integrated sliding-mode law."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from heatnet.errors import ValidationError


@dataclass(frozen=True)
class SlidingGains:
    a: float
    b: float
    w1: float
    w2: float
    w3: float

    def __post_init__(self):
        for name in ("a", "b", "w1", "w2", "w3"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"gain {name} must be finite and >= 0, got {v}", path=name)


ZERO_GAINS = SlidingGains(0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True, eq=False)
class ControlState:
    u1: np.ndarray
    u2: np.ndarray

    @property
    def u(self):
        return self.u1 + self.u2

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n))


def sign_vec(x, dead_band=0.0):
    """Componentwise sign with the selection sign(0) = 0 inside ``[-dead_band, dead_band]``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out[x > dead_band] = 1.0
    out[x < -dead_band] = -1.0
    return out


def linear_control(q_right, L):
    return -(L.entries @ _vec(q_right))


def sliding_rate_components(q_right, qt_right, L, gains, dead_band=0.0):
    """Return the discontinuous part and the linear part of the control rate."""
    q = _vec(q_right)
    qt = _vec(qt_right)
    Lq = L.entries @ q
    Lqt = L.entries @ qt
    r1 = -gains.a * sign_vec(Lq, dead_band) - gains.b * sign_vec(Lqt, dead_band)
    r2 = -gains.w1 * Lq - gains.w2 * Lqt - gains.w3 * qt
    return r1, r2


def sliding_rate(q_right, qt_right, L, gains, dead_band=0.0):
    r1, r2 = sliding_rate_components(q_right, qt_right, L, gains, dead_band)
    return r1 + r2


def control_rate_bound(q_right, qt_right, L, gains):
    """Upper bound on |rate|_inf: a + b + w1|Lq|_inf + w2|Lq_t|_inf + w3|q_t|_inf.

    Summed with the same association as the rate itself, so that the bound
    also holds exactly in floating point.
    """
    q = _vec(q_right)
    qt = _vec(qt_right)
    X = np.abs(L.entries @ q).max()
    Y = np.abs(L.entries @ qt).max()
    Z = np.abs(qt).max()
    return (gains.a + gains.b) + ((gains.w1 * X + gains.w2 * Y) + gains.w3 * Z)


def advance_control(state, u1_rate, u2_rate, dt):
    """Explicit Euler on both integrators; returns ``(new_state, increment)``."""
    if dt <= 0:
        raise ValidationError("dt must be positive")
    d1 = dt * np.asarray(u1_rate, dtype=float)
    d2 = dt * np.asarray(u2_rate, dtype=float)
    return ControlState(state.u1 + d1, state.u2 + d2), dt * (u1_rate + u2_rate)


@dataclass(frozen=True)
class Check:
    name: str
    margin: float
    passed: bool


@dataclass(frozen=True)
class GainsReport:
    pi: float
    checks: tuple

    @property
    def compliant(self):
        return all(c.passed for c in self.checks)

    def violations(self):
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self):
        return {
            "pi": self.pi,
            "compliant": self.compliant,
            **{c.name: {"margin": c.margin, "passed": c.passed} for c in self.checks},
        }


def validate_gains(gains, pi_bound):
    if pi_bound < 0:
        raise ValidationError("rate bound must be >= 0")
    margins = (
        ("a > b + pi", gains.a - gains.b - pi_bound),
        ("b > pi", gains.b - pi_bound),
        ("w1 > 0", gains.w1),
        ("w2 > 0", gains.w2),
        ("w3 > 0", gains.w3),
    )
    return GainsReport(
        float(pi_bound), tuple(Check(name, float(m), bool(m > 0)) for name, m in margins)
    )


def _vec(trace):
    return np.asarray(getattr(trace, "values", trace), dtype=float)


class ZeroProtocol:
    """U = 0 for all time."""

    dynamic = False
    name = "zero"

    def __init__(self, agent_count):
        self.agent_count = agent_count

    def control(self, q_right):
        return np.zeros(self.agent_count)


class LinearProtocol:
    """U = -L Q(1, t)."""

    dynamic = False
    name = "linear"

    def __init__(self, L):
        self.L = L
        self.agent_count = L.n

    def control(self, q_right):
        return -(self.L.entries @ q_right)


class SlidingProtocol:
    """Integrated second-order sliding law; rates drive the two integrators."""

    dynamic = True
    name = "sliding"

    def __init__(self, L, gains, dead_band=0.0):
        self.L = L
        self.gains = gains
        self.dead_band = float(dead_band)
        self.agent_count = L.n

    def initial_state(self):
        return ControlState.zeros(self.agent_count)

    def rates(self, q_right, qt_right):
        return sliding_rate_components(q_right, qt_right, self.L, self.gains, self.dead_band)
