"""Measurement-modified factor, cooling domains, cooling criterion and Zeno classification."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .kernels import (CumulativeJ, filter_function, golden_rule_rate, j_integrals,
                      markov_upward_rate, sinc2_scaled)
from .parallel import ordered_map
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate, oscillatory_integral
from .search import golden_section
from .spectrum import BathParams, SpectralModel, SuperOhmic, sdf_derivatives, tail_integral

OMEGA_SEARCH_MAX = 6.0
ZENO_EPS = 1e-3


# --- measurement-modified factor ------------------------------------------------

@dataclass(frozen=True)
class MFactor:
    tau: float
    value: float
    numerator: float
    cumulative: CumulativeJ

    @property
    def converged(self) -> bool:
        return self.cumulative.converged

    @property
    def quasisteady_ratio(self) -> float:
        """rho_ee^M(infinity) / rho_ee^B = 1 + M."""
        return 1.0 + self.value

    def __float__(self) -> float:
        return self.value


def m_factor_exact(model: SpectralModel, bath: BathParams, tau: float,
                   spec: QuadratureSpec | None = None) -> MFactor:
    """M = [e^{beta omega_a} J_plus - J_minus] / J.

    The numerator is integrated as the filter-weighted spectrum on the same panels
    as the J components, so the Boltzmann factor never multiplies a large J_plus.
    """
    bath.check_boltzmann()
    cj, numerator = j_integrals(model, bath, tau, spec, beta_s=bath.beta)
    return MFactor(float(tau), numerator / cj.j_total, numerator, cj)


def _resonant_terms(model: SpectralModel, bath: BathParams):
    wa = bath.omega_a
    g = float(model.value(wa))
    d = sdf_derivatives(model, wa)
    return g, d.first, d.second


def _near_integral(model, bath, fn, tau=None, spec=None):
    wa = bath.omega_a
    lo = model.lower_limit
    hi = min(2.0 * wa, model.upper_limit)
    if hi <= lo:
        return 0.0
    pts = [p for p in model.breakpoints() if lo < p < hi] + [wa]
    if tau is None:
        return integrate(fn, [lo, hi] + pts, spec).value
    return oscillatory_integral(fn, (lo, hi), 0.5 * tau, spec, centers=(-wa,),
                                extra_points=pts).value


def m_factor_approx(model: SpectralModel, bath: BathParams, tau: float,
                    spec: QuadratureSpec | None = None) -> float:
    """Low-temperature, near-resonant approximation of M with its oscillating terms."""
    if not tau > 0:
        raise DomainError("tau must be positive")
    bath.check_boltzmann()
    beta, wa = bath.beta, bath.omega_a
    g, g1, g2 = _resonant_terms(model, bath)
    tail = tail_integral(model, 2.0 * wa, spec).value
    counter = _near_integral(model, bath, lambda w: sinc2_scaled(w + wa, tau) * model.value(w),
                             tau, spec)
    boltz = math.exp(beta * wa)
    numerator = (-beta * (2.0 * g1 - beta * g) * (wa - math.sin(wa * tau) / tau)
                 + 0.5 * boltz * counter + boltz * tail)
    denominator = g * (math.pi * tau - 2.0 / wa) + wa * g2 + 2.0 * tail
    if denominator <= 0:
        raise DomainError(f"approximate J(tau) is non-positive at tau = {tau}")
    return numerator / denominator


def m_factor_smoothed(model: SpectralModel, bath: BathParams, tau: float,
                      spec: QuadratureSpec | None = None) -> float:
    """Large-tau envelope of the approximate M, without the sin(omega_a tau) term."""
    bath.check_boltzmann()
    beta, wa = bath.beta, bath.omega_a
    if not math.pi * tau - 2.0 / wa > 0:
        raise DomainError(f"smoothed M needs pi*tau > 2/omega_a, got tau = {tau}")
    g, g1, g2 = _resonant_terms(model, bath)
    denominator = g * (math.pi * tau - 2.0 / wa) + wa * g2
    if denominator <= 0:
        raise DomainError(f"smoothed denominator is non-positive at tau = {tau}")
    heating = _near_integral(model, bath, lambda w: model.value(w) / (w + wa) ** 2, None, spec)
    return (-beta * wa * (2.0 * g1 - beta * g) + math.exp(beta * wa) * heating) / denominator


# --- frequency domains ------------------------------------------------------------

def total_filter(bath: BathParams, tau: float, omega):
    """F(beta, beta, tau, omega) = F^r + F^cr at the bath temperature."""
    f_r, f_cr = filter_function(bath.beta, bath, tau, omega)
    return f_r + f_cr


@dataclass(frozen=True)
class CoolingDomain:
    tau: float
    omega1: Optional[float]
    omega2: Optional[float]
    omega_at_min: Optional[float]
    filter_min: float
    lobes: tuple = ()
    omega_max: float = OMEGA_SEARCH_MAX

    @property
    def empty(self) -> bool:
        return self.omega1 is None

    @property
    def truncated(self) -> bool:
        """True when the domain runs into the end of the search window (omega2 is no root)."""
        return self.omega2 is not None and self.omega2 >= self.omega_max


def _filter_grid(bath, tau, omega_max):
    spacing = min(2e-3, (2.0 * math.pi / tau) / 200.0)
    n = int(math.ceil(omega_max / spacing))
    w = np.linspace(omega_max / n * 0.05, omega_max, n)
    return w, total_filter(bath, tau, w)


def cooling_domain(bath: BathParams, tau: float, omega_max: float = OMEGA_SEARCH_MAX,
                   merge_gaps: bool = True) -> CoolingDomain:
    """Bounds (omega1, omega2) of the negative region of F holding its global minimum.

    Every negative lobe on (0, omega_max] is located by bracketed root finding and
    listed in ``lobes``. With ``merge_gaps`` neighbouring lobes separated by a
    positive gap narrower than pi/tau (half the sinc^2 zero spacing) are joined to
    the main domain; those gaps are oscillation slivers, not heating bands.
    """
    if not tau > 0:
        raise DomainError("tau must be positive")
    bath.check_boltzmann()
    w, f = _filter_grid(bath, tau, omega_max)
    i_min = int(np.argmin(f))
    if f[i_min] >= 0:
        return CoolingDomain(float(tau), None, None, None, float(f[i_min]), (), omega_max)

    def F(x):
        return float(total_filter(bath, tau, x))

    def root(i):
        # sign change between w[i] and w[i + 1]
        return brentq(F, w[i], w[i + 1], xtol=1e-15, rtol=1e-15, maxiter=200)

    neg = f < 0
    change = np.nonzero(neg[1:] != neg[:-1])[0]
    lobes = []
    left = None if not neg[0] else float(w[0])
    for i in change:
        r = root(i)
        if neg[i + 1]:
            left = r
        else:
            lobes.append((left, r))
    if neg[-1]:
        lobes.append((left, float(w[-1])))

    x_min = float(w[i_min])
    k = next(j for j, (a, b) in enumerate(lobes) if a <= x_min <= b)
    lo_k = hi_k = k
    if merge_gaps:
        gap = math.pi / tau
        while lo_k > 0 and lobes[lo_k][0] - lobes[lo_k - 1][1] < gap:
            lo_k -= 1
        while hi_k < len(lobes) - 1 and lobes[hi_k + 1][0] - lobes[hi_k][1] < gap:
            hi_k += 1
    return CoolingDomain(float(tau), lobes[lo_k][0], lobes[hi_k][1], x_min, float(f[i_min]),
                         tuple(lobes), omega_max)


class CrZero(NamedTuple):
    omega: float
    flag: Optional[str]


def cr_zero_curve(tau: float, bath: BathParams) -> CrZero:
    """Frequency 2 pi/tau - omega_a where the counter-rotating filter vanishes."""
    if not tau > 0:
        raise DomainError("tau must be positive")
    omega = 2.0 * math.pi / tau - bath.omega_a
    if abs(omega) <= 1e-12 * bath.omega_a:
        return CrZero(0.0, "boundary")
    return CrZero(omega, "nonpositive" if omega < 0 else None)


def w2_estimate(bath: BathParams) -> float:
    """Long-interval upper edge omega_a [1 + 4 beta omega_a exp(-beta omega_a)]."""
    x = bath.beta * bath.omega_a
    return bath.omega_a * (1.0 + 4.0 * x * math.exp(-x))


def w2_estimate_max(omega_a: float = 1.0):
    """Maximum of the estimate over beta: (beta at the maximum, value)."""
    return 1.0 / omega_a, omega_a * (1.0 + 4.0 / math.e)


# --- criteria -----------------------------------------------------------------------

@dataclass(frozen=True)
class Criterion:
    lhs: float
    rhs: float
    passed: bool
    beta_max: Optional[float] = None
    one_sided: bool = False


def cooling_criterion(model: SpectralModel, bath: BathParams) -> Criterion:
    """Log-derivative test G0'(omega_a)/G0(omega_a) > beta/2."""
    wa = bath.omega_a
    g = float(model.value(wa))
    if not g > 0:
        raise DomainError("G0(omega_a) = 0: the cooling criterion is undefined")
    d = sdf_derivatives(model, wa)
    lhs = d.first / g
    rhs = bath.beta / 2.0
    beta_max = model.beta_max(wa) if isinstance(model, SuperOhmic) else None
    return Criterion(lhs, rhs, lhs > rhs, beta_max, d.one_sided)


class ZenoClass(NamedTuple):
    label: str  # "QZE", "QAZE" or "boundary"
    ratio: float  # (J/tau) / Gamma0


def classify_zeno(model: SpectralModel, bath: BathParams, tau: float,
                  spec: QuadratureSpec | None = None, eps: float = ZENO_EPS,
                  cumulative: CumulativeJ | None = None) -> ZenoClass:
    """Compare the effective decay rate J(tau)/tau with the golden-rule rate."""
    cj = cumulative or j_integrals(model, bath, tau, spec)[0]
    ratio = cj.j_total / tau / golden_rule_rate(model, bath)
    if ratio > 1.0 + eps:
        return ZenoClass("QAZE", ratio)
    if ratio < 1.0 - eps:
        return ZenoClass("QZE", ratio)
    return ZenoClass("boundary", ratio)


def zeno_cooling_conditions(model: SpectralModel, bath: BathParams, tau: float,
                            spec: QuadratureSpec | None = None) -> dict:
    """Both sides of the anti-Zeno inequality and of the cooling inequality.

    anti-Zeno: J(tau) > Gamma0 tau; cooling: J(tau) > Gamma0 J_plus(tau)/Gamma_plus(inf).
    """
    cj = j_integrals(model, bath, tau, spec)[0]
    g0 = golden_rule_rate(model, bath)
    rhs_cool = g0 * cj.j_plus / markov_upward_rate(model, bath)
    return {"tau": tau, "j_total": cj.j_total, "qaze_rhs": g0 * tau, "cooling_rhs": rhs_cool,
            "qaze": cj.j_total > g0 * tau, "cooling": cj.j_total > rhs_cool}


# --- optimisation -------------------------------------------------------------------

@dataclass(frozen=True)
class TauOptimum:
    tau_min: float
    m_min: float
    cooling: bool
    taus: np.ndarray = field(repr=False)
    m_values: np.ndarray = field(repr=False)
    converged: bool = True


def tau_grid(tau_range: Sequence[float], omega_a: float = 1.0,
             points_per_period: int = 20) -> np.ndarray:
    lo, hi = float(tau_range[0]), float(tau_range[1])
    if not 0 < lo < hi:
        raise DomainError("tau_range must satisfy 0 < lo < hi")
    n = int(math.ceil((hi - lo) / (2.0 * math.pi / omega_a) * points_per_period))
    return np.linspace(lo, hi, max(n, 2) + 1)


def optimize_tau(model: SpectralModel, bath: BathParams, tau_range: Sequence[float] = (0.2, 20.0),
                 spec: QuadratureSpec | None = None, points_per_period: int = 40,
                 threads: int = 1, xtol: float = 1e-7) -> TauOptimum:
    """Global minimiser of the exact M over ``tau_range``: grid scan, then golden section."""
    if points_per_period < 20:
        raise DomainError("need at least 20 grid points per 2 pi/omega_a")
    taus = tau_grid(tau_range, bath.omega_a, points_per_period)
    results = ordered_map(lambda t: m_factor_exact(model, bath, t, spec), taus, threads)
    m = np.array([r.value for r in results])
    converged = all(r.converged for r in results)
    i = int(np.argmin(m))  # first occurrence: the smallest tau wins ties
    a, b = taus[max(i - 1, 0)], taus[min(i + 1, taus.size - 1)]
    res = golden_section(lambda t: m_factor_exact(model, bath, t, spec).value, a, b, xtol=xtol)
    tau_min, m_min = (res.x, res.fun) if res.fun <= m[i] else (float(taus[i]), float(m[i]))
    return TauOptimum(float(tau_min), float(m_min), m_min < 0, taus, m, converged)


# --- reports ------------------------------------------------------------------------

@dataclass
class CoolingReport:
    model: dict
    beta: float
    omega_a: float
    tau_grid: List[float]
    m_exact: List[float]
    m_approx: List[Optional[float]]
    m_smoothed: List[Optional[float]]
    tau_min: float
    m_min: float
    domain_tau: float
    omega1: Optional[float]
    omega2: Optional[float]
    criterion_lhs: float
    criterion_rhs: float
    criterion_pass: bool
    zeno_class: str
    zeno_ratio: float
    rel_tol: float
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _or_none(fn):
    try:
        return float(fn())
    except DomainError:
        return None


def cooling_report(model: SpectralModel, bath: BathParams, taus, domain_tau: float,
                   spec: QuadratureSpec | None = None, threads: int = 1) -> CoolingReport:
    """Collect every analysis quantity for one spectrum and temperature."""
    spec = spec or DEFAULT_SPEC
    taus = np.asarray(taus, dtype=float)
    exact = ordered_map(lambda t: m_factor_exact(model, bath, t, spec), taus, threads)
    approx = ordered_map(lambda t: _or_none(lambda: m_factor_approx(model, bath, t, spec)),
                         taus, threads)
    smooth = [_or_none(lambda: m_factor_smoothed(model, bath, t, spec)) for t in taus]
    flags = [f"quadrature not converged at tau = {r.tau}" for r in exact if not r.converged]
    m = np.array([r.value for r in exact])
    i = int(np.argmin(m))
    a, b = taus[max(i - 1, 0)], taus[min(i + 1, taus.size - 1)]
    gs = golden_section(lambda t: m_factor_exact(model, bath, t, spec).value, a, b)
    tau_min, m_min = (gs.x, gs.fun) if gs.fun <= m[i] else (taus[i], m[i])
    dom = cooling_domain(bath, domain_tau)
    crit = cooling_criterion(model, bath)
    zeno = classify_zeno(model, bath, domain_tau, spec)
    return CoolingReport(
        model=model.params(), beta=bath.beta, omega_a=bath.omega_a,
        tau_grid=taus.tolist(), m_exact=m.tolist(), m_approx=approx, m_smoothed=smooth,
        tau_min=float(tau_min), m_min=float(m_min), domain_tau=float(domain_tau),
        omega1=dom.omega1, omega2=dom.omega2, criterion_lhs=crit.lhs,
        criterion_rhs=crit.rhs, criterion_pass=crit.passed, zeno_class=zeno.label,
        zeno_ratio=zeno.ratio, rel_tol=spec.rel_tol, flags=flags)
