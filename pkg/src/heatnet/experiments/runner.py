"""Execute a scenario, evaluate expectations, and write CSV / plot-data outputs."""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path

import numpy as np
import yaml

from heatnet.analysis import Verdict, monitor
from heatnet.dynamics import RunRecord, simulate
from heatnet.errors import NumericalBlowup
from heatnet.field import sample_profile
from heatnet.graph import laplacian, spectrum
from heatnet.protocols import LinearProtocol, SlidingProtocol, ZeroProtocol, validate_gains

log = logging.getLogger(__name__)

FUNCTIONAL_COLUMNS = ("t", "v1", "v", "vbar", "vr", "d1_h2n", "mass", "sup_gap")
TRACE_COLUMNS = ("t", "agent", "q_right", "u", "psi")
SNAPSHOT_COLUMNS = ("t", "agent", "node", "ς", "q")


def build_protocol(scenario, L):
    p = scenario.protocol
    if p.kind == "linear":
        return LinearProtocol(L)
    if p.kind == "sliding":
        return SlidingProtocol(L, p.gains, p.dead_band)
    return ZeroProtocol(L.n)


def initial_field(scenario):
    return sample_profile(scenario.grid, scenario.profiles)


def ic_slopes(scenario):
    return (np.array([p.slope(0.0) for p in scenario.profiles], dtype=float),
            np.array([p.slope(1.0) for p in scenario.profiles], dtype=float))


def simulate_scenario(scenario, on_step=None, config=None):
    """Run the closed loop for ``scenario`` and attach the monitor report.

    ``config`` overrides the scenario's SimConfig (horizon studies).
    On blow-up the partial record is monitored before re-raising.
    """
    L = laplacian(scenario.topology)
    spec = spectrum(L)
    protocol = build_protocol(scenario, L)
    meta = {"scenario": scenario.echo(), "source": scenario.source,
            "spectrum": {"eigenvalues": spec.eigenvalues.tolist(),
                         "lambda2": spec.lambda2, "lambdaN": spec.lambdaN}}
    gains = scenario.protocol.gains
    pi = scenario.pi_bound()
    if gains is not None:
        report = validate_gains(gains, pi)
        meta["gains_compliance"] = report.as_dict()
        meta["rate_assumption_holds"] = scenario.rate_assumption_holds()
        meta["tuning_compliant"] = report.compliant and meta["rate_assumption_holds"]
    record = RunRecord(meta, scenario.grid)
    try:
        simulate(scenario.topology, initial_field(scenario), protocol, scenario.disturbance,
                 scenario.params, config or scenario.sim, recorder=record,
                 ic_slopes=ic_slopes(scenario), compatibility=scenario.compatibility,
                 allow_unstable=scenario.allow_unstable, on_step=on_step)
    except NumericalBlowup:
        # the last finite samples may still overflow in the quadratic functionals
        with np.errstate(over="ignore", invalid="ignore"):
            record.report = monitor(record, L, scenario.params, gains,
                                    pi if gains is not None else None, spec=spec)
        raise
    record.report = monitor(record, L, scenario.params, gains,
                            pi if gains is not None else None, spec=spec)
    if record.report.constants is not None:
        meta["certificate_constants"] = record.report.constants.as_dict()
    return record


def evaluate_expectations(record, expect):
    """Asserted verdicts for the ``expect`` block of a scenario."""
    rep = record.report
    out = []
    if not rep.samples:
        return [Verdict("nonempty_record", False, 0, "no samples recorded")]
    d1 = rep.column("d1_h2n")
    if "consensus_tol" in expect:
        err = rep.verdicts["consensus_error"].value
        out.append(Verdict("consensus_tol", err <= expect["consensus_tol"], err,
                           f"max |Q(t_end) - Q*| <= {expect['consensus_tol']:g}, Q*={rep.q_star:.6g}"))
    if "sup_gap_tol" in expect:
        gap = rep.samples[-1].sup_gap
        out.append(Verdict("sup_gap_tol", gap <= expect["sup_gap_tol"], gap,
                           f"final sup gap <= {expect['sup_gap_tol']:g}"))
    if "d1_final_ratio" in expect:
        ratio = d1[-1] / d1.max() if d1.max() > 0 else 0.0
        out.append(Verdict("d1_final_ratio", ratio < expect["d1_final_ratio"], ratio,
                           f"final/peak disagreement < {expect['d1_final_ratio']:g}"))
    for key in ("v1_nonincreasing", "mass_constant"):
        if expect.get(key):
            v = rep.verdicts[key]
            out.append(Verdict(key, v.passed, v.value, v.detail))
    if "trend" in expect:
        out.append(Verdict("trend", rep.trend == expect["trend"], rep.trend,
                           f"expected {expect['trend']}"))
    if "rebound_factor" in expect:
        ratio = d1[-1] / d1.min() if d1.min() > 0 else math.inf
        out.append(Verdict("rebound_factor", ratio >= expect["rebound_factor"], ratio,
                           f"final / min disagreement >= {expect['rebound_factor']:g}"))
    return out


def run(scenario, out_dir, on_step=None):
    """Simulate, then write functionals/traces/snapshots/meta and plot data into ``out_dir``.

    Returns ``(record, verdicts)``. Partial outputs are written before a
    NumericalBlowup propagates.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        record = simulate_scenario(scenario, on_step=on_step)
    except NumericalBlowup as exc:
        record = exc.record
        write_outputs(record, scenario, out, [])
        raise
    verdicts = evaluate_expectations(record, scenario.expect)
    write_outputs(record, scenario, out, verdicts)
    return record, verdicts


def _fmt(x):
    return repr(float(x))


def write_outputs(record, scenario, out, verdicts):
    report = record.report
    with open(out / "functionals.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FUNCTIONAL_COLUMNS)
        for s in (report.samples if report else []):
            w.writerow([_fmt(getattr(s, c)) for c in FUNCTIONAL_COLUMNS])
    with open(out / "traces.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for t, q, u, psi in zip(record.times, record.q, record.u, record.psi):
            for i in range(q.shape[0]):
                w.writerow([_fmt(t), i + 1, _fmt(q[i, -1]), _fmt(u[i]), _fmt(psi[i])])
    nodes = record.grid.nodes
    with open(out / "snapshots.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SNAPSHOT_COLUMNS)
        every = max(1, scenario.snapshot_every)
        last = len(record) - 1
        for k, (t, q) in enumerate(zip(record.times, record.q)):
            if k % every and k != last:
                continue
            for i in range(q.shape[0]):
                for j in range(q.shape[1]):
                    w.writerow([_fmt(t), i + 1, j, _fmt(nodes[j]), _fmt(q[i, j])])
    meta = {
        "status": record.status,
        "error": record.error,
        "samples": len(record),
        **_plain(record.metadata),
    }
    if report is not None:
        meta["q_star"] = float(report.q_star) if report.samples else None
        meta["monitor"] = {k: _plain(v.__dict__) for k, v in report.verdicts.items()}
    meta["verdicts"] = [_plain(v.__dict__) for v in verdicts]
    (out / "meta.txt").write_text(yaml.safe_dump(meta, sort_keys=True, allow_unicode=True))
    emit_plots(record, out, agent=scenario.plots.get("agent", 1),
               pair=tuple(scenario.plots.get("pair", (1, 2))))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def emit_plots(record, out_dir, agent=6, pair=(6, 10)):
    """Surface data for one agent and one agent pair, plus the disagreement-norm series.

    Returns the written paths; an empty record writes nothing.
    """
    out = Path(out_dir)
    if len(record) == 0 or record.report is None or not record.report.samples:
        log.warning("empty record: no plot data written")
        return []
    N = record.q[0].shape[0]
    agent = min(max(1, int(agent)), N)
    i, j = (min(max(1, int(p)), N) for p in pair)
    nodes = record.grid.nodes
    paths = []

    def surface(path, rows):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [_fmt(s) for s in nodes])
            for t, row in zip(record.times, rows):
                w.writerow([_fmt(t)] + [_fmt(v) for v in row])
        paths.append(path)

    surface(out / f"surface_agent{agent}.csv", [q[agent - 1] for q in record.q])
    surface(out / f"mismatch_{i}_{j}.csv", [q[i - 1] - q[j - 1] for q in record.q])

    t = record.report.column("t")
    d1 = record.report.column("d1_h2n")
    path = out / "d1_h2n.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "d1_h2n"])
        for a, b in zip(t, d1):
            w.writerow([_fmt(a), _fmt(b)])
    paths.append(path)
    path = out / "d1_h2n.svg"
    path.write_text(line_chart_svg(t, d1, title="disagreement H2 norm", xlabel="t [s]",
                                   log_y=True))
    paths.append(path)
    return paths


def line_chart_svg(x, y, title="", xlabel="", log_y=False, width=640, height=400):
    """Self-contained SVG line chart; non-finite points (and non-positive ones on a log axis) are dropped."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y)
    if log_y:
        keep &= y > 0
    x, y = x[keep], y[keep]
    if log_y:
        y = np.log10(y)
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="14">{title}</text>']
    if x.size:
        x0, x1 = float(x.min()), float(x.max())
        if log_y:
            y0, y1 = math.floor(float(y.min())), math.ceil(float(y.max()))
        else:
            y0, y1 = float(y.min()), float(y.max())
        x1 = x1 if x1 > x0 else x0 + 1.0
        y1 = y1 if y1 > y0 else y0 + 1.0

        def px(v):
            return ml + (v - x0) / (x1 - x0) * pw

        def py(v):
            return mt + ph - (v - y0) / (y1 - y0) * ph

        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline fill="none" stroke="#1f4e9c" stroke-width="1.5" points="{pts}"/>')
        if log_y:
            ticks = [(v, f"1e{v}") for v in range(int(y0), int(y1) + 1)]
        else:
            ticks = [(v, f"{v:.3g}") for v in np.linspace(y0, y1, 5)]
        for v, label in ticks:
            parts.append(f'<line x1="{ml - 4}" y1="{py(v):.2f}" x2="{ml}" y2="{py(v):.2f}" stroke="black"/>')
            parts.append(f'<text x="{ml - 6}" y="{py(v) + 4:.2f}" text-anchor="end">{label}</text>')
        for v in np.linspace(x0, x1, 6):
            parts.append(f'<line x1="{px(v):.2f}" y1="{mt + ph}" x2="{px(v):.2f}" y2="{mt + ph + 4}" stroke="black"/>')
            parts.append(f'<text x="{px(v):.2f}" y="{mt + ph + 18}" text-anchor="middle">{v:.3g}</text>')
    parts.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    parts.append(f'<text x="{ml + pw / 2}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
