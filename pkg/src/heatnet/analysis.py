"""Disagreement vectors, Lyapunov functionals, decay-certificate constants and run monitoring.

All spatial integrals use the same trapezoid weights as :mod:`heatnet.field`,
so algebraic identities between functionals hold to rounding.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from heatnet.errors import GainsNoncompliant, InadmissibleKappa
from heatnet.field import AgentField, h_norm_array, trapezoid
from heatnet.graph import centering, spectrum
from heatnet.protocols import ZERO_GAINS

V1_SLACK = 1e-9
MASS_TOL = 1e-5
DEFAULT_KAPPA_FRACTION = 0.5


@dataclass(frozen=True, eq=False)
class DisagreementPair:
    d1: AgentField
    d2: AgentField

    @property
    def d1_right(self):
        return self.d1.values[:, -1]


@dataclass(frozen=True)
class AverageTarget:
    q_star: float


@dataclass(frozen=True)
class FunctionalSample:
    t: float
    v1: float
    v: float
    vbar: float
    vr: float
    d1_h2n: float
    mass: float
    sup_gap: float


@dataclass(frozen=True)
class CertificateConstants:
    alpha1: float
    alpha2: float
    alpha2_entrywise: float
    kappa_max: float
    kappa_r: float
    c1: float
    c2: float
    c3: float
    c4: float
    gamma1: float
    gamma2: float
    rho_r: float
    R: float

    @property
    def positive(self):
        return all(v > 0 for v in (self.c1, self.c2, self.c3, self.c4,
                                   self.gamma1, self.gamma2, self.rho_r))

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool | None   # None: reported only
    value: float | str
    detail: str = ""


@dataclass
class MonitorReport:
    samples: list
    verdicts: dict
    constants: CertificateConstants | None
    q_star: float
    trend: str

    def column(self, name):
        return np.array([getattr(s, name) for s in self.samples])


def disagreement(q, z, Lc):
    C = Lc.entries
    return DisagreementPair(q.with_values(C @ q.values), z.with_values(C @ z.values))


def average_target(q0):
    return AverageTarget(float(np.sum(trapezoid(q0.values, q0.grid))) / q0.agent_count)


def v1(q):
    return 0.5 * float(np.sum(trapezoid(q.values * q.values, q.grid)))


def _quad_integral(L, field):
    """integral of field' L field over [0, 1]."""
    v = field.values
    return float(np.sum(trapezoid(v * (L.entries @ v), field.grid)))


def v_functional(d, L, gains, params):
    theta = params.diffusivity
    Lx = L.entries @ d.d1_right
    return (theta * gains.a * float(np.abs(Lx).sum())
            + 0.5 * theta * gains.w1 * float(Lx @ Lx)
            + 0.5 * _quad_integral(L, d.d2))


def v_tilde(d, gains, params):
    theta = params.diffusivity
    x = d.d1_right
    d2 = d.d2.values
    return (theta * gains.a * float(np.abs(x).sum())
            + 0.5 * theta * gains.w1 * float(x @ x)
            + 0.5 * float(np.sum(trapezoid(d2 * d2, d.d2.grid))))


def vbar_functional(d, L, gains, params):
    theta = params.diffusivity
    Lx = L.entries @ d.d1_right
    d2 = d.d2.values
    # integral of d1(1)' L d2(xi) = (L d1(1))' integral of d2
    cross = float(Lx @ trapezoid(d2, d.d2.grid))
    return 0.5 * theta * gains.w2 * float(Lx @ Lx) + cross


def vr_functional(d, L, gains, params, consts):
    if consts.kappa_r > consts.kappa_max or consts.kappa_r < 0:
        raise InadmissibleKappa(
            f"kappa_r={consts.kappa_r:.4g} outside [0, {consts.kappa_max:.4g}]"
        )
    return v_functional(d, L, gains, params) + consts.kappa_r * vbar_functional(d, L, gains, params)


def vr_lower_bound(d, L, spec, gains, params, consts):
    """Termwise lower estimate of V_R valid inside the level set V <= R."""
    theta = params.diffusivity
    kappa = consts.kappa_r
    lam2 = spec.lambda2
    x = d.d1_right
    Lx1 = float(np.abs(L.entries @ x).sum())
    d2 = d.d2.values
    d2sq = float(np.sum(trapezoid(d2 * d2, d.d2.grid)))
    first = theta * gains.a - (kappa * consts.R / (2.0 * theta * gains.a) if gains.a > 0 else 0.0)
    return (first * Lx1
            + 0.5 * (lam2 - kappa) * d2sq
            + 0.5 * theta * lam2**2 * (gains.w1 + kappa * gains.w2) * float(x @ x))


def _safe_div(num, den):
    if den == 0:
        return math.inf if num > 0 else (0.0 if num == 0 else -math.inf)
    return num / den


def certificate_constants(spec, gains, params, pi, R, L, *,
                          kappa_fraction=DEFAULT_KAPPA_FRACTION, strict=True):
    """Decay-certificate constants for the sliding law inside the level set V <= R.

    ``kappa_r`` is ``kappa_fraction`` times the largest admissible value; a
    fraction below one keeps every coefficient strictly positive.
    """
    theta = params.diffusivity
    a, b, w1, w2, w3 = gains.a, gains.b, gains.w1, gains.w2, gains.w3
    lam2, lamN = spec.lambda2, spec.lambdaN
    N = spec.eigenvalues.size
    alpha1 = min(lam2 / math.sqrt(N), lam2**2)
    alpha2 = max(L.induced_l1_norm(), lamN**2, lamN)
    alpha2_e = max(L.entrywise_l1_norm(), lamN**2, lamN)

    root1 = math.sqrt(_safe_div(2.0 * R, theta**2 * lam2))
    root2 = (w3 / lam2) * math.sqrt(_safe_div(2.0 * R, theta * w1)) if w3 > 0 else 0.0
    if math.isnan(root2):
        root2 = 0.0
    kappa_max = min(
        _safe_div(2.0 * theta**2 * a**2, R),
        lam2,
        max(0.0, _safe_div(b - pi, root1 + root2)) if b - pi > 0 else 0.0,
    )
    kappa = kappa_fraction * kappa_max
    c1 = kappa * theta * (a - b - pi)
    c2 = theta * (b - pi - kappa * (root1 + root2))
    c3 = kappa * theta * w1 * lam2**2
    c4 = theta * lam2 * min(1.0, w2 * lam2 + w3)
    gamma1 = min(c1, c3, c4)
    gamma2 = min(
        theta * a - (_safe_div(kappa * R, 2.0 * theta * a) if kappa > 0 else 0.0),
        0.5 * (lamN - kappa),
        0.5 * theta * lamN**2 * (w1 + kappa * w2),
    )
    rho = gamma1 / gamma2 if gamma2 > 0 else math.nan
    consts = CertificateConstants(
        alpha1=alpha1, alpha2=alpha2, alpha2_entrywise=alpha2_e,
        kappa_max=kappa_max, kappa_r=kappa, c1=c1, c2=c2, c3=c3, c4=c4,
        gamma1=gamma1, gamma2=gamma2, rho_r=rho, R=float(R),
    )
    if strict and not consts.positive:
        bad = [k for k in ("c1", "c2", "c3", "c4", "gamma1", "gamma2", "rho_r")
               if not getattr(consts, k) > 0]
        raise GainsNoncompliant(f"non-positive certificate constants: {bad}")
    return consts


def sup_gap(q):
    v = q.values if isinstance(q, AgentField) else np.asarray(q)
    return float(np.max(v.max(axis=0) - v.min(axis=0)))


def classify_trend(values, hysteresis=2.0, rebound=10.0):
    """'converging' | 'diverging' | 'flat' from first/last decile geometric means.

    A final value at least ``rebound`` times the run minimum also counts as
    diverging when the last decile has not dropped below the first one,
    which catches growth hidden behind a large initial transient.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return "flat"
    k = max(1, v.size // 10)
    tiny = 1e-300
    first = math.exp(np.mean(np.log(np.maximum(v[:k], tiny))))
    last = math.exp(np.mean(np.log(np.maximum(v[-k:], tiny))))
    vmin = float(v.min())
    grew = v[-1] > 1e-12 and v[-1] >= rebound * vmin
    if last > hysteresis * first or (grew and last * hysteresis >= first):
        return "diverging"
    if last * hysteresis < first:
        return "converging"
    return "flat"


def sample_functionals(t, q, z, L, Lc, gains, params, kappa=0.0):
    d = disagreement(q, z, Lc)
    v = v_functional(d, L, gains, params)
    vb = vbar_functional(d, L, gains, params)
    return FunctionalSample(
        t=float(t),
        v1=v1(q),
        v=v,
        vbar=vb,
        vr=v + kappa * vb,
        d1_h2n=h_norm_array(d.d1.values, q.grid, 2),
        mass=float(np.sum(trapezoid(q.values, q.grid))),
        sup_gap=sup_gap(q),
    )


def monitor(record, L, params, gains=None, pi=None, R=None, spec=None):
    """Functionals for every recorded sample plus run verdicts.

    ``gains=None`` means the linear law: V uses zero gains and V_R = V.
    """
    grid = record.grid
    Lc = centering(L.n)
    spec = spec or spectrum(L)
    q_fields = [AgentField(q, grid) for q in record.q]
    z_fields = [AgentField(z, grid) for z in record.z]
    if not q_fields:
        return MonitorReport([], {}, None, math.nan, "flat")

    consts = None
    kappa = 0.0
    use_gains = gains if gains is not None else ZERO_GAINS
    if gains is not None and pi is not None:
        if R is None:
            R = v_functional(disagreement(q_fields[0], z_fields[0], Lc), L, gains, params)
        consts = certificate_constants(spec, gains, params, pi, R, L, strict=False)
        if consts.positive:
            kappa = consts.kappa_r

    samples = [sample_functionals(t, q, z, L, Lc, use_gains, params, kappa)
               for t, q, z in zip(record.times, q_fields, z_fields)]
    q_star = average_target(q_fields[0]).q_star

    verdicts = {}
    v1s = np.array([s.v1 for s in samples])
    dv1 = np.diff(v1s) - V1_SLACK * (1.0 + v1s[:-1])
    worst = float(dv1.max()) if dv1.size else 0.0
    verdicts["v1_nonincreasing"] = Verdict(
        "v1_nonincreasing", worst <= 0.0, worst, "max of dV1 - 1e-9(1+V1) over recorded steps")
    mass = np.array([s.mass for s in samples])
    drift = float(np.abs(mass - mass[0]).max())
    verdicts["mass_constant"] = Verdict(
        "mass_constant", drift <= MASS_TOL * (1.0 + abs(mass[0])), drift, "max |m(t) - m(0)|")
    final_q = q_fields[-1].values
    err = float(np.abs(final_q - q_star).max())
    verdicts["consensus_error"] = Verdict("consensus_error", None, err, "max |Q(t_end) - Q*|")
    verdicts["final_sup_gap"] = Verdict("final_sup_gap", None, samples[-1].sup_gap)
    d1 = np.array([s.d1_h2n for s in samples])
    trend = classify_trend(d1)
    verdicts["trend"] = Verdict("trend", None, trend, "disagreement H2 norm trend")
    if consts is not None and consts.positive and samples[0].vr > 0:
        t = np.array([s.t for s in samples])
        vr = np.array([s.vr for s in samples])
        ok = vr <= samples[0].vr * np.exp(-consts.rho_r * t) * (1.0 + 1e-9)
        verdicts["vr_exponential_bound"] = Verdict(
            "vr_exponential_bound", None, float(ok.mean()),
            f"fraction of samples with V_R <= V_R(0) exp(-{consts.rho_r:.3g} t); monitored only")
    return MonitorReport(samples, verdicts, consts, q_star, trend)
