"""Randomized property oracles for the graph, field and functional inequalities.

Each runner returns an OracleResult whose ``worst`` is the smallest
normalized slack seen; a value >= -tol means the property held.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from heatnet.analysis import certificate_constants, disagreement, v_functional, v_tilde
from heatnet.dynamics import PlantParams
from heatnet.field import Grid, TrigProfile, lemma1_residual, sample_profile
from heatnet.graph import (
    centering,
    holder_young_residuals,
    laplacian,
    lemma2_residuals,
    random_topology,
    spectrum,
    ten_agent_topology,
)
from heatnet.protocols import SlidingGains


@dataclass(frozen=True)
class OracleResult:
    name: str
    trials: int
    worst: float
    tol: float

    @property
    def passed(self):
        return self.worst >= -self.tol

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.trials} trials, worst slack {self.worst:.3e} (tol {self.tol:g})"


def random_zero_sum(rng, n, scale=None):
    scale = 10.0 ** rng.uniform(-3, 3) if scale is None else scale
    x = rng.normal(size=n) * scale
    return x - x.mean()


def random_profile(rng, max_terms=4, max_wavenumber=4.0):
    terms = tuple(
        (float(rng.normal() * 3.0), float(rng.uniform(0.0, max_wavenumber)),
         "cos" if rng.random() < 0.5 else "sin")
        for _ in range(int(rng.integers(1, max_terms + 1)))
    )
    return TrigProfile(float(rng.normal() * 5.0), terms)


def random_field(rng, grid, agent_count, **kw):
    return sample_profile(grid, [random_profile(rng, **kw) for _ in range(agent_count)])


def laplacian_oracle(rng, graphs=20, vectors=1000, n_range=(3, 30)):
    """Laplacian inequalities on random zero-sum vectors over random connected graphs."""
    worst = np.inf
    per = vectors // graphs
    for g in range(graphs):
        N = int(rng.integers(n_range[0], n_range[1] + 1))
        L = laplacian(random_topology(N, rng))
        spec = spectrum(L)
        count = per + (1 if g < vectors - per * graphs else 0)
        for _ in range(count):
            x = random_zero_sum(rng, N)
            r = lemma2_residuals(L, spec, x).minimum()
            worst = min(worst, r / (1.0 + float(x @ x)))
    return OracleResult("laplacian inequalities", vectors, float(worst), 1e-9)


def holder_young_oracle(rng, trials=1000):
    worst = np.inf
    for _ in range(trials):
        n = int(rng.integers(1, 20))
        x, y = rng.normal(size=n), rng.normal(size=n)
        scale = 1.0 + float(x @ x) + float(y @ y)
        for p in (1, 2):
            h, yg = holder_young_residuals(x, y, p)
            worst = min(worst, h / scale, np.inf if yg is None else yg / scale)
    return OracleResult("holder / young", trials, float(worst), 1e-12)


def boundary_trace_oracle(rng, trials=200, nodes=101):
    """Boundary-trace inequality on random smooth fields, both endpoints."""
    grid = Grid(nodes)
    worst = np.inf
    for _ in range(trials):
        f = random_field(rng, grid, 1)
        for side in ("left", "right"):
            worst = min(worst, lemma1_residual(f, side))
    return OracleResult("boundary trace inequality", trials, float(worst), 1e-6)


def sandwich_oracle(rng, trials=1000, topology=None, nodes=30, gains=None, params=None):
    """alpha1 V~ <= V <= alpha2 V~ on random centred disagreement pairs."""
    topology = topology or ten_agent_topology()
    L = laplacian(topology)
    spec = spectrum(L)
    Lc = centering(L.n)
    grid = Grid(nodes)
    params = params or PlantParams()
    gains = gains or SlidingGains(40.0, 20.0, 5.0, 5.0, 5.0)
    consts = certificate_constants(spec, gains, params, 0.0, 1.0, L, strict=False)
    worst = np.inf
    for _ in range(trials):
        q = random_field(rng, grid, L.n)
        z = random_field(rng, grid, L.n)
        d = disagreement(q, z, Lc)
        vt = v_tilde(d, gains, params)
        v = v_functional(d, L, gains, params)
        slack = min(v - consts.alpha1 * vt, consts.alpha2 * vt - v)
        worst = min(worst, slack / (1.0 + vt))
    return OracleResult("functional sandwich", trials, float(worst), 1e-9)


def run_all(seed=0, trials=None):
    """Every oracle with its own child generator; ``trials`` scales all counts."""
    children = np.random.default_rng(seed).spawn(4)
    f = 1.0 if trials is None else trials / 1000.0

    def n(base):
        return max(1, int(round(base * f)))

    return [
        laplacian_oracle(children[0], graphs=min(20, n(1000)), vectors=n(1000)),
        holder_young_oracle(children[1], trials=n(1000)),
        boundary_trace_oracle(children[2], trials=n(200)),
        sandwich_oracle(children[3], trials=n(1000)),
    ]
