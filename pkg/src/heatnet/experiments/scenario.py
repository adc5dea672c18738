"""Scenario files: YAML mappings with graph/grid/plant/protocol/disturbance/initial/sim sections."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from heatnet.disturbance import A_PRIORI_PI, KINDS, DisturbanceSpec, rate_bound
from heatnet.dynamics import PlantParams, SimConfig
from heatnet.errors import GraphError, ParseError, UnboundedRate, ValidationError
from heatnet.field import Grid, TrigProfile
from heatnet.graph import build_topology, read_graph_file
from heatnet.protocols import SlidingGains

PRESETS = ("test1", "test1_long", "test2", "test3")
EXPECT_KEYS = {
    "consensus_tol", "sup_gap_tol", "d1_final_ratio", "v1_nonincreasing",
    "mass_constant", "trend", "rebound_factor",
}


@dataclass(frozen=True)
class ProtocolConfig:
    kind: str                    # linear | sliding | zero
    gains: SlidingGains | None = None
    dead_band: float = 0.0
    pi: float | None = None      # rate bound used for gain validation


@dataclass
class Scenario:
    name: str
    topology: object
    grid: Grid
    params: PlantParams
    protocol: ProtocolConfig
    disturbance: DisturbanceSpec
    ic_family: str
    profiles: list
    compatibility: str
    sim: SimConfig
    snapshot_every: int = 10
    allow_unstable: bool = False
    seed: int | None = None
    expect: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)
    source: str | None = None
    raw: dict = field(default_factory=dict)

    def echo(self):
        """Fully resolved scenario as plain data."""
        d = self.disturbance
        out = {
            "name": self.name,
            "graph": {"agent_count": self.topology.agent_count,
                      "edges": [list(e) for e in self.topology.sorted_edges()]},
            "grid": {"nodes": self.grid.node_count},
            "plant": {"diffusivity": self.params.diffusivity},
            "protocol": {"kind": self.protocol.kind, "dead_band": self.protocol.dead_band},
            "disturbance": {"kind": d.kind, "k": d.k.tolist(), "alpha": d.alpha.tolist(),
                            "seed": d.seed},
            "initial": {"family": self.ic_family, "compatibility": self.compatibility,
                        "agents": [{"offset": p.offset, "terms": [list(t) for t in p.terms]}
                                   for p in self.profiles]},
            "sim": {"dt": self.sim.dt, "t_end": self.sim.t_end,
                    "record_stride": self.sim.record_stride,
                    "snapshot_every": self.snapshot_every,
                    "allow_unstable": self.allow_unstable},
            "seed": self.seed,
            "expect": dict(self.expect),
            "plots": dict(self.plots),
        }
        if self.protocol.gains is not None:
            g = self.protocol.gains
            out["protocol"].update(a=g.a, b=g.b, w1=g.w1, w2=g.w2, w3=g.w3, pi=self.pi_bound())
        return out

    def pi_bound(self):
        if self.protocol.pi is not None:
            return self.protocol.pi
        if self.disturbance.kind == "none":
            return 0.0
        return A_PRIORI_PI

    def rate_assumption_holds(self):
        try:
            return rate_bound(self.disturbance).pi <= self.pi_bound()
        except UnboundedRate:
            return False


def ic_profiles(family, agent_count=10):
    """Closed-form initial profiles of the two built-in families."""
    if family == "test1":
        if agent_count != 10:
            raise ValidationError("test1 profiles are defined for 10 agents", path="initial.family")
        omega = [1.0 + 4.0 * i / 9.0 for i in range(10)]
        offsets = [10, 10, 8, 10, 6, 10, 10, -5, 10, 10]
        profiles = [TrigProfile(float(c), ((w, 3.0, "cos"),)) for c, w in zip(offsets, omega)]
        profiles[9] = TrigProfile(10.0, ((omega[9], 2.5, "cos"),))
        return profiles
    if family == "test2":
        return [TrigProfile(10.0, ((i - 4.5, 4.0, "cos"),)) for i in range(1, agent_count + 1)]
    raise ValidationError(f"unknown IC family {family!r}", path="initial.family")


def preset_path(name):
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("heatnet.experiments") / "presets" / f"{name}.yaml"


def preset_text(name):
    return preset_path(name).read_text()


def load_preset(name, **overrides):
    return parse_scenario(yaml.safe_load(preset_text(name)), source=f"preset:{name}", **overrides)


def load_scenario(path, **overrides):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read scenario {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return parse_scenario(data, source=str(path), base_dir=path.parent, **overrides)


def _section(data, key, required=True):
    value = data.get(key)
    if value is None:
        if required:
            raise ValidationError("missing section", path=key)
        return {}
    if not isinstance(value, dict):
        raise ValidationError("expected a mapping", path=key)
    return value


def _number(sec, key, path, default=None, cast=float):
    if key not in sec:
        if default is None:
            raise ValidationError("missing value", path=f"{path}.{key}")
        return default
    try:
        return cast(sec[key])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"not a number: {sec[key]!r}", path=f"{path}.{key}") from exc


def parse_scenario(data, *, source=None, base_dir=None, seed=None, allow_unstable=None):
    """Validate a parsed mapping and resolve every default."""
    if not isinstance(data, dict):
        raise ParseError("scenario must be a mapping")
    raw = copy.deepcopy(data)
    name = str(data.get("name", "scenario"))
    scenario_seed = data.get("seed") if seed is None else seed

    g = _section(data, "graph")
    try:
        if "file" in g:
            gpath = Path(g["file"])
            if not gpath.is_absolute() and base_dir is not None:
                gpath = Path(base_dir) / gpath
            topology = read_graph_file(gpath)
        else:
            if "edges" not in g:
                raise ValidationError("missing edges list", path="graph.edges")
            if "agent_count" not in g:
                raise ValidationError("missing agent_count", path="graph.agent_count")
            topology = build_topology(int(g["agent_count"]), [tuple(e) for e in g["edges"]])
    except GraphError as exc:
        raise type(exc)(str(exc), path="graph") from exc
    N = topology.agent_count

    grid = Grid(_number(_section(data, "grid"), "nodes", "grid", cast=int))
    params = PlantParams(_number(_section(data, "plant", required=False), "diffusivity",
                                 "plant", default=1.0))

    p = _section(data, "protocol")
    kind = p.get("kind")
    if kind not in ("linear", "sliding", "zero"):
        raise ValidationError(f"unknown protocol {kind!r}", path="protocol.kind")
    if kind == "sliding":
        gains = SlidingGains(*(_number(p, k, "protocol") for k in ("a", "b", "w1", "w2", "w3")))
        if "disturbance" not in data:
            raise ValidationError("sliding protocol requires a disturbance block",
                                  path="disturbance")
        protocol = ProtocolConfig("sliding", gains, _number(p, "dead_band", "protocol", 0.0),
                                  _number(p, "pi", "protocol") if "pi" in p else None)
    else:
        protocol = ProtocolConfig(kind)

    d = _section(data, "disturbance", required=False) or {"kind": "none"}
    dkind = d.get("kind", "none")
    if dkind not in KINDS:
        raise ValidationError(f"unknown disturbance kind {dkind!r}", path="disturbance.kind")
    if dkind == "none":
        disturbance = DisturbanceSpec.none(N)
    elif "k" in d:
        k = np.asarray(d["k"], dtype=float)
        alpha = np.asarray(d.get("alpha", np.zeros(N)), dtype=float)
        if dkind == "ramp_sine_quadratic" and "alpha" not in d:
            raise ValidationError("quadratic disturbance needs alpha", path="disturbance.alpha")
        if k.shape != (N,) or alpha.shape != (N,):
            raise ValidationError(f"k and alpha need {N} entries", path="disturbance")
        disturbance = DisturbanceSpec(dkind, k, alpha if dkind == "ramp_sine_quadratic"
                                      else np.zeros(N), d.get("seed"))
    else:
        dseed = seed if seed is not None else d.get("seed", scenario_seed)
        if dseed is None:
            raise ValidationError("give explicit k or a seed", path="disturbance")
        disturbance = DisturbanceSpec.from_seed(dkind, N, int(dseed))

    ic = _section(data, "initial")
    family = ic.get("family")
    if family in ("test1", "test2"):
        profiles = ic_profiles(family, N)
    elif family == "custom":
        agents = ic.get("agents")
        if not isinstance(agents, list) or len(agents) != N:
            raise ValidationError(f"need {N} agent profiles", path="initial.agents")
        profiles = []
        for i, a in enumerate(agents):
            try:
                terms = tuple((float(t[0]), float(t[1]), str(t[2]) if len(t) > 2 else "cos")
                              for t in a.get("terms", []))
                profiles.append(TrigProfile(float(a.get("offset", 0.0)), terms))
            except (TypeError, ValueError, IndexError, AttributeError) as exc:
                raise ValidationError(str(exc), path=f"initial.agents[{i}]") from exc
            if any(t[2] not in ("cos", "sin") for t in terms):
                raise ValidationError("term kind must be cos or sin", path=f"initial.agents[{i}]")
    else:
        raise ValidationError(f"unknown IC family {family!r}", path="initial.family")
    compatibility = ic.get("compatibility", "error")
    if compatibility not in ("error", "warn", "ignore"):
        raise ValidationError("must be error, warn or ignore", path="initial.compatibility")

    s = _section(data, "sim")
    sim = SimConfig(_number(s, "dt", "sim"), _number(s, "t_end", "sim"),
                    _number(s, "record_stride", "sim", 100, cast=int))
    unstable = bool(s.get("allow_unstable", False)) if allow_unstable is None else allow_unstable
    sim.check_cfl(params, grid, unstable)

    expect = dict(data.get("expect") or {})
    unknown = set(expect) - EXPECT_KEYS
    if unknown:
        raise ValidationError(f"unknown keys {sorted(unknown)}", path="expect")

    plots = dict(data.get("plots") or {})
    plots.setdefault("agent", min(6, N))
    plots.setdefault("pair", [min(6, N), N])

    return Scenario(
        name=name, topology=topology, grid=grid, params=params, protocol=protocol,
        disturbance=disturbance, ic_family=family, profiles=profiles,
        compatibility=compatibility, sim=sim,
        snapshot_every=_number(s, "snapshot_every", "sim", 10, cast=int),
        allow_unstable=unstable, seed=scenario_seed, expect=expect, plots=plots,
        source=source, raw=raw,
    )
