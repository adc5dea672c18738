"""Matched boundary disturbances psi_i(t) = 4 k_i t + sin(k_i pi t) [+ alpha_i t^2]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from heatnet.errors import UnboundedRate, ValidationError

KINDS = ("none", "ramp_sine", "ramp_sine_quadratic")
K_RANGE = (0.0, 2.0)
ALPHA_RANGE = (0.0, 20.0)
# Worst case k_i = 2 of the ramp-sine family.
A_PRIORI_PI = 8.0 + 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class DisturbanceSpec:
    kind: str
    k: np.ndarray
    alpha: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown disturbance kind {self.kind!r}", path="disturbance.kind")
        k = np.array(self.k, dtype=float)
        alpha = np.array(self.alpha, dtype=float)
        if k.shape != alpha.shape or k.ndim != 1:
            raise ValidationError("k and alpha must be vectors of equal length", path="disturbance")
        if np.any(k < K_RANGE[0]) or np.any(k > K_RANGE[1]):
            raise ValidationError(f"k entries must lie in {list(K_RANGE)}", path="disturbance.k")
        if np.any(alpha < ALPHA_RANGE[0]) or np.any(alpha > ALPHA_RANGE[1]):
            raise ValidationError(
                f"alpha entries must lie in {list(ALPHA_RANGE)}", path="disturbance.alpha"
            )
        k.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "alpha", alpha)

    @property
    def agent_count(self):
        return self.k.size

    @classmethod
    def none(cls, agent_count):
        return cls("none", np.zeros(agent_count), np.zeros(agent_count))

    @classmethod
    def from_seed(cls, kind, agent_count, seed):
        """Draw k then alpha, each in agent order, from PCG64 seeded with ``seed``."""
        rng = np.random.default_rng(seed)
        k = rng.uniform(*K_RANGE, size=agent_count)
        alpha = rng.uniform(*ALPHA_RANGE, size=agent_count)
        if kind != "ramp_sine_quadratic":
            alpha = np.zeros(agent_count)
        if kind == "none":
            k = np.zeros(agent_count)
        return cls(kind, k, alpha, seed)


@dataclass(frozen=True)
class BoundSummary:
    pi: float
    pi_a_priori: float


def eval_disturbance(spec, t):
    if spec.kind == "none":
        return np.zeros(spec.agent_count)
    k = spec.k
    psi = 4.0 * k * t + np.sin(k * np.pi * t)
    if spec.kind == "ramp_sine_quadratic":
        psi = psi + spec.alpha * t * t
    return psi


def eval_disturbance_rate(spec, t):
    if spec.kind == "none":
        return np.zeros(spec.agent_count)
    k = spec.k
    rate = 4.0 * k + k * np.pi * np.cos(k * np.pi * t)
    if spec.kind == "ramp_sine_quadratic":
        rate = rate + 2.0 * spec.alpha * t
    return rate


def rate_bound(spec):
    """Sup-norm bound on the disturbance rate (attained at t = 0)."""
    if spec.kind == "ramp_sine_quadratic":
        raise UnboundedRate("quadratic disturbance has an unbounded rate")
    if spec.kind == "none":
        return BoundSummary(0.0, A_PRIORI_PI)
    return BoundSummary(float(np.max(spec.k) * (4.0 + np.pi)), A_PRIORI_PI)
