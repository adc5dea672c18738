"""Multi-agent fields sampled on a uniform grid of [0, 1], with discrete Sobolev norms.

Integrals use the composite trapezoid rule. Derivatives use central
differences inside and second-order one-sided stencils at the two ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from heatnet.errors import GridTooCoarse, NonFiniteField, ValidationError


@dataclass(frozen=True)
class Grid:
    node_count: int

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 3:
            raise GridTooCoarse(f"grid needs at least 3 nodes, got {self.node_count}")

    @property
    def spacing(self):
        return 1.0 / (self.node_count - 1)

    @property
    def nodes(self):
        x = np.arange(self.node_count) * self.spacing
        x[-1] = 1.0
        return x

    @property
    def weights(self):
        w = np.full(self.node_count, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w


@dataclass(frozen=True, eq=False)
class AgentField:
    values: np.ndarray  # (N, n)
    grid: Grid

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[1] != self.grid.node_count:
            raise ValidationError(
                f"field shape {v.shape} does not match grid of {self.grid.node_count} nodes"
            )
        if not np.isfinite(v).all():
            raise NonFiniteField("field contains NaN or Inf")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def agent_count(self):
        return self.values.shape[0]

    def with_values(self, values):
        return AgentField(values, self.grid)


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    values: np.ndarray


@dataclass(frozen=True)
class TrigProfile:
    """offset + sum of amplitude * cos|sin(wavenumber * pi * s)."""

    offset: float
    terms: tuple = dc_field(default_factory=tuple)  # (amplitude, wavenumber, "cos"|"sin")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.full_like(s, float(self.offset))
        for amp, wn, kind in self.terms:
            arg = wn * np.pi * s
            out = out + amp * (np.cos(arg) if kind == "cos" else np.sin(arg))
        return out

    def slope(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for amp, wn, kind in self.terms:
            arg = wn * np.pi * s
            k = wn * np.pi
            out = out + (-amp * k * np.sin(arg) if kind == "cos" else amp * k * np.cos(arg))
        return out

    def curvature(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for amp, wn, kind in self.terms:
            arg = wn * np.pi * s
            k2 = (wn * np.pi) ** 2
            out = out - amp * k2 * (np.cos(arg) if kind == "cos" else np.sin(arg))
        return out

    def integral(self):
        """Exact integral over [0, 1]."""
        total = float(self.offset)
        for amp, wn, kind in self.terms:
            if wn == 0:
                total += amp if kind == "cos" else 0.0
                continue
            k = wn * np.pi
            total += amp * (np.sin(k) / k if kind == "cos" else (1.0 - np.cos(k)) / k)
        return total


def sample_profile(grid, profiles):
    """Sample one callable profile per agent at the grid nodes."""
    x = grid.nodes
    return AgentField(np.vstack([np.broadcast_to(p(x), x.shape) for p in profiles]), grid)


def constant_field(grid, agent_count, c):
    return AgentField(np.full((agent_count, grid.node_count), float(c)), grid)


def _d1(v, h):
    return np.gradient(v, h, axis=-1, edge_order=2)


def _d2(v, h):
    out = np.empty_like(v)
    out[..., 1:-1] = (v[..., :-2] - 2.0 * v[..., 1:-1] + v[..., 2:]) / (h * h)
    out[..., 0] = (2.0 * v[..., 0] - 5.0 * v[..., 1] + 4.0 * v[..., 2] - v[..., 3]) / (h * h)
    out[..., -1] = (2.0 * v[..., -1] - 5.0 * v[..., -2] + 4.0 * v[..., -3] - v[..., -4]) / (h * h)
    return out


def derivative_array(values, h, order):
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    if order == 0:
        return values
    if order == 1:
        if n < 3:
            raise GridTooCoarse("first derivative needs n >= 3")
        return _d1(values, h)
    if order == 2:
        if n < 5:
            raise GridTooCoarse("second derivative needs n >= 5")
        return _d2(values, h)
    raise ValueError(f"derivative order must be 1 or 2, got {order}")


def spatial_derivative(f, order):
    return f.with_values(derivative_array(f.values, f.grid.spacing, order))


def trapezoid(values, grid):
    """Trapezoid integral along the last axis."""
    return np.asarray(values, dtype=float) @ grid.weights


def h_norm_array(values, grid, order):
    if order not in (0, 1, 2):
        raise ValueError(f"Sobolev order must be 0, 1 or 2, got {order}")
    if order == 2 and grid.node_count < 5:
        raise GridTooCoarse("H2 norm needs n >= 5")
    h = grid.spacing
    total = 0.0
    for k in range(order + 1):
        d = derivative_array(values, h, k)
        total += float(np.sum(trapezoid(d * d, grid)))
    return np.sqrt(total)


def h_norm(f, order):
    """Discrete H^{r,N} norm of the stacked agent field."""
    return h_norm_array(f.values, f.grid, order)


def boundary_trace(f, side):
    if side == "left":
        return BoundaryTrace(f.values[:, 0].copy())
    if side == "right":
        return BoundaryTrace(f.values[:, -1].copy())
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def lemma1_residual(f, side):
    """2(|b(i)|^2 + |b_s|^2_H0) - |b|^2_H0 on the discrete field; nonnegative for smooth b."""
    if f.grid.node_count < 5:
        raise GridTooCoarse("needs n >= 5")
    b_i = boundary_trace(f, side).values
    db = spatial_derivative(f, 1)
    return 2.0 * (float(b_i @ b_i) + h_norm(db, 0) ** 2) - h_norm(f, 0) ** 2
