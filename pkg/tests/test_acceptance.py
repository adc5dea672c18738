"""End-to-end acceptance checks, each at its stated tolerance."""

import time

import numpy as np
import pytest
import yaml

from heatnet.analysis import average_target, certificate_constants, disagreement, v_functional
from heatnet.disturbance import rate_bound
from heatnet.dynamics import PlantParams, SimConfig, heat_rhs, simulate
from heatnet.errors import CflViolation
from heatnet.experiments import cli
from heatnet.experiments.runner import run
from heatnet.experiments.scenario import ic_profiles, load_preset, parse_scenario, preset_text
from heatnet.field import Grid, TrigProfile, sample_profile
from heatnet.graph import centering, laplacian, path_topology, spectrum
from heatnet.oracles import boundary_trace_oracle, laplacian_oracle, sandwich_oracle
from heatnet.protocols import SlidingGains, ZeroProtocol, control_rate_bound, validate_gains

PI = 8 + 2 * np.pi
Q_STAR = 7.9637
Q_STAR_EXACT = (79 + 5 / (2.5 * np.pi)) / 10


class StepAudit:
    """Per-step mass, V1 and control-increment checks fed by the simulator hook."""

    def __init__(self, scenario, L=None):
        self.w = scenario.grid.weights
        self.dt = scenario.sim.dt
        self.L = L
        self.gains = scenario.protocol.gains
        self.mass0 = None
        self.mass_drift = 0.0
        self.dv1_excess = -np.inf
        self.du_excess = -np.inf

    def __call__(self, info):
        m_next = float(np.sum(info.q_next @ self.w))
        if self.mass0 is None:
            self.mass0 = float(np.sum(info.q @ self.w))
        self.mass_drift = max(self.mass_drift, abs(m_next - self.mass0))
        v1 = 0.5 * float(np.sum((info.q * info.q) @ self.w))
        v1_next = 0.5 * float(np.sum((info.q_next * info.q_next) @ self.w))
        self.dv1_excess = max(self.dv1_excess, v1_next - v1 - 1e-9 * (1 + v1))
        if self.gains is not None:
            bound = self.dt * control_rate_bound(info.q[:, -1], info.z[:, -1], self.L, self.gains)
            self.du_excess = max(self.du_excess, float(np.abs(info.du).max() - bound))


def timed_run(scenario, out, audit=None):
    t0 = time.perf_counter()
    record, _ = run(scenario, out, on_step=audit)
    return record, time.perf_counter() - t0


@pytest.fixture(scope="module")
def test1(tmp_path_factory):
    s = load_preset("test1")
    audit = StepAudit(s)
    record, secs = timed_run(s, tmp_path_factory.mktemp("test1"), audit)
    return s, record, secs, audit


@pytest.fixture(scope="module")
def test2(tmp_path_factory):
    s = load_preset("test2")
    audit = StepAudit(s, laplacian(s.topology))
    record, secs = timed_run(s, tmp_path_factory.mktemp("test2"), audit)
    return s, record, secs, audit


@pytest.fixture(scope="module")
def test3(tmp_path_factory):
    s = load_preset("test3")
    record, secs = timed_run(s, tmp_path_factory.mktemp("test3"))
    return s, record, secs


def test_c01_average_consensus_value(test1, criterion_log):
    s, record, secs, _ = test1
    q_end = record.q[-1]
    err = float(np.abs(q_end - Q_STAR).max())
    q0 = sample_profile(s.grid, ic_profiles("test1"))
    fine = sample_profile(Grid(301), ic_profiles("test1"))
    target_ok = all(abs(average_target(f).q_star - Q_STAR) <= 5e-4 for f in (q0, fine))
    oracle_ok = abs(Q_STAR_EXACT - Q_STAR) <= 5e-4
    ok = err <= 1e-2 and target_ok and oracle_ok and secs < 30
    criterion_log(1, "average consensus value", ok,
                  f"max |Q(t_end)-Q*| = {err:.4f} (tol 1e-2), Q*(n=30) = "
                  f"{average_target(q0).q_star:.6f}, closed form {Q_STAR_EXACT:.6f}, runtime {secs:.1f}s")
    assert target_ok and oracle_ok
    assert secs < 30
    assert err <= 1e-2


def test_c02_disagreement_decay(test1, criterion_log):
    _, record, _, _ = test1
    t = record.report.column("t")
    d1 = record.report.column("d1_h2n")
    ratio = d1[-1] / d1[0]
    late = d1[t >= 0.1]
    ripple = float(np.diff(late).max())
    ok = ratio < 0.01 and ripple <= 1e-6
    criterion_log(2, "disagreement decay", ok,
                  f"final/initial = {ratio:.4g} (< 0.01), max increase after t=0.1 = {ripple:.3g} (<= 1e-6)")
    assert ok


def test_c03_mass_conservation(test1, criterion_log):
    _, record, _, audit = test1
    m0 = audit.mass0
    ok = audit.mass_drift <= 1e-5 * (1 + abs(m0)) and record.report.verdicts["mass_constant"].passed
    criterion_log(3, "mass conservation", ok,
                  f"max |m(t)-m(0)| over every step = {audit.mass_drift:.3g} (tol {1e-5 * (1 + abs(m0)):.3g})")
    assert ok


def test_c04_v1_dissipation(test1, criterion_log):
    _, record, _, audit = test1
    ok = audit.dv1_excess <= 0 and record.report.verdicts["v1_nonincreasing"].passed
    criterion_log(4, "V1 dissipation", ok,
                  f"max over steps of dV1 - 1e-9(1+V1) = {audit.dv1_excess:.3g} (<= 0)")
    assert ok


def test_c05_robust_synchronization(test2, criterion_log):
    s, record, secs, _ = test2
    pi = rate_bound(s.disturbance).pi
    d1 = record.report.column("d1_h2n")
    ratio = d1[-1] / d1.max()
    gap = record.report.samples[-1].sup_gap
    ok = ratio < 0.01 and gap < 1e-2 and secs < 60 and abs(pi - PI) < 1e-12
    criterion_log(5, "robust synchronization", ok,
                  f"final/peak = {ratio:.3g} (< 0.01), sup_gap = {gap:.3g} (< 1e-2), "
                  f"Pi of pinned k = {pi:.6f}, runtime {secs:.1f}s")
    assert ok


def test_c06_control_continuity(test2, criterion_log):
    _, _, _, audit = test2
    ok = audit.du_excess <= 0
    criterion_log(6, "control continuity", ok,
                  f"max over steps of |du|_inf - dt*bound = {audit.du_excess:.3g} (<= 0 exactly)")
    assert ok


def test_c07_divergence(test3, criterion_log):
    _, record, _ = test3
    d1 = record.report.column("d1_h2n")
    rebound = d1[-1] / d1.min()
    ok = record.report.trend == "diverging" and rebound >= 10
    criterion_log(7, "divergence under violated tuning", ok,
                  f"trend = {record.report.trend}, final/min = {rebound:.3g} (>= 10)")
    assert ok


def test_c08_laplacian_inequalities(criterion_log):
    t0 = time.perf_counter()
    res = laplacian_oracle(np.random.default_rng(8), graphs=20, vectors=1000, n_range=(3, 30))
    secs = time.perf_counter() - t0
    ok = res.passed and secs < 10
    criterion_log(8, "Laplacian inequality oracle", ok,
                  f"worst normalized slack {res.worst:.3g} (>= -1e-9), runtime {secs:.2f}s")
    assert ok


def test_c09_boundary_trace_oracle(criterion_log):
    res = boundary_trace_oracle(np.random.default_rng(9), trials=200, nodes=101)
    criterion_log(9, "boundary trace oracle", res.passed,
                  f"worst residual {res.worst:.3g} (>= -1e-6) over 200 fields, both ends")
    assert res.passed


def test_c10_sandwich(criterion_log):
    res = sandwich_oracle(np.random.default_rng(10), trials=1000)
    criterion_log(10, "functional sandwich", res.passed,
                  f"worst normalized slack {res.worst:.3g} (>= -1e-9) over 1000 pairs")
    assert res.passed


def test_c11_certificate_positivity(criterion_log):
    s = load_preset("test2")
    L = laplacian(s.topology)
    spec = spectrum(L)
    q0 = sample_profile(s.grid, s.profiles)
    z0 = heat_rhs(q0, np.zeros(10), s.params)
    R = v_functional(disagreement(q0, z0, centering(10)), L, s.protocol.gains, s.params)
    c = certificate_constants(spec, s.protocol.gains, s.params, PI, R, L)
    names = ("c1", "c2", "c3", "c4", "gamma1", "gamma2", "rho_r")
    positive = all(getattr(c, n) > 0 for n in names)
    report = validate_gains(SlidingGains(40, PI, 5, 5, 5), PI)
    ok = positive and report.violations() == ["b > pi"]
    criterion_log(11, "certificate positivity", ok,
                  ", ".join(f"{n}={getattr(c, n):.3g}" for n in names)
                  + f"; b = Pi violations: {report.violations()}")
    assert ok


def _mode_error(n, dt):
    g = Grid(n)
    mode = TrigProfile(0.0, ((1.0, 1.0, "cos"),))
    q0 = sample_profile(g, [mode] * 2)
    slopes = (np.full(2, float(mode.slope(0.0))), np.full(2, float(mode.slope(1.0))))
    rec = simulate(path_topology(2), q0, ZeroProtocol(2), None, PlantParams(1.0),
                   SimConfig(dt, 0.1, 10**9), ic_slopes=slopes)
    exact = np.exp(-np.pi**2 * 0.1) * np.cos(np.pi * g.nodes)
    assert rec.times[-1] == pytest.approx(0.1)
    return float(np.abs(rec.q[-1] - exact).max())


def test_c12_scheme_convergence(criterion_log):
    coarse, fine = _mode_error(21, 2e-4), _mode_error(41, 5e-5)
    ratio = coarse / fine
    ok = 3 <= ratio <= 5
    criterion_log(12, "scheme verification", ok,
                  f"max error n=21: {coarse:.3g}, n=41: {fine:.3g}, ratio {ratio:.3f} (in [3, 5])")
    assert ok


def test_c13_cfl_guard(tmp_path, criterion_log):
    data = yaml.safe_load(preset_text("test1"))
    data["sim"]["dt"] = 1e-3
    rejected = False
    try:
        parse_scenario(data)
    except CflViolation:
        rejected = True
    path = tmp_path / "unstable.yaml"
    path.write_text(yaml.safe_dump(data))
    out = tmp_path / "out"
    code = cli.main(["run", str(path), "--out", str(out), "--allow-unstable"])
    meta = yaml.safe_load((out / "meta.txt").read_text()) if (out / "meta.txt").exists() else {}
    rows = (out / "functionals.csv").read_text().splitlines() if (out / "functionals.csv").exists() else []
    partial = meta.get("status") == "blowup" and len(rows) > 1
    ok = rejected and code == 3 and partial
    criterion_log(13, "CFL guard", ok,
                  f"dt=1e-3 rejected: {rejected}; --allow-unstable exit {code} (3 = blow-up), "
                  f"partial samples written: {len(rows) - 1}")
    assert ok
