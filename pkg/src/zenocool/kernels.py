"""Second-order time-convolutionless coefficients beyond the rotating-wave approximation.

Superscript ``r`` (rotating) pieces carry the detuning ``w - omega_a``,
counter-rotating ``cr`` pieces carry ``w + omega_a``. Subscript ``plus`` is the
|g> -> |e> channel, ``minus`` the |e> -> |g> channel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError
from .quadrature import DEFAULT_SPEC, QuadratureSpec, oscillatory_integral
from .spectrum import (BathParams, SpectralModel, omega_times_occupation,
                       omega_times_occupation_plus_one)

# Below this |x*t| the kernels switch to their Taylor series.
TAYLOR_SWITCH = 1e-4

RATE_NAMES = ("gamma_plus_r", "gamma_plus_cr", "gamma_minus_r", "gamma_minus_cr",
              "delta_plus_r", "delta_plus_cr", "delta_minus_r", "delta_minus_cr")


# --- kernels ------------------------------------------------------------------

def sinc(x):
    """Unnormalised sinc, sin(x)/x."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < TAYLOR_SWITCH
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, 1.0 - x * x / 6.0, np.sin(x) / np.where(small, 1.0, x))
    return out if out.ndim else float(out)


def sin_over(x, t):
    """sin(x t)/x = t sinc(x t)."""
    x = np.asarray(x, dtype=float)
    u = x * t
    small = np.abs(u) < TAYLOR_SWITCH
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, t * (1.0 - u * u / 6.0), np.sin(u) / np.where(small, 1.0, x))
    return out


def one_minus_cos_over(x, t):
    """(1 - cos(x t))/x, evaluated as 2 sin^2(x t/2)/x."""
    x = np.asarray(x, dtype=float)
    u = x * t
    small = np.abs(u) < TAYLOR_SWITCH
    with np.errstate(invalid="ignore", divide="ignore"):
        big = 2.0 * np.sin(0.5 * u) ** 2 / np.where(small, 1.0, x)
    return np.where(small, 0.5 * u * t * (1.0 - u * u / 12.0), big)


def sinc2_scaled(x, t):
    """t^2 sinc^2(x t/2), the kernel of the cumulative integrals."""
    x = np.asarray(x, dtype=float)
    u = x * t
    small = np.abs(u) < TAYLOR_SWITCH
    with np.errstate(invalid="ignore", divide="ignore"):
        big = (2.0 * np.sin(0.5 * u) / np.where(small, 1.0, x)) ** 2
    return np.where(small, t * t * (1.0 - u * u / 12.0), big)


# --- containers ---------------------------------------------------------------

@dataclass(frozen=True)
class RateSet:
    t: float
    gamma_plus_r: float = 0.0
    gamma_plus_cr: float = 0.0
    gamma_minus_r: float = 0.0
    gamma_minus_cr: float = 0.0
    delta_plus_r: float = 0.0
    delta_plus_cr: float = 0.0
    delta_minus_r: float = 0.0
    delta_minus_cr: float = 0.0
    error: float = 0.0
    converged: bool = True

    @classmethod
    def from_array(cls, t, values, error=0.0, converged=True) -> "RateSet":
        return cls(float(t), *map(float, values), error=float(error), converged=converged)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in RATE_NAMES])

    @property
    def gamma_plus(self) -> float:
        return self.gamma_plus_r + self.gamma_plus_cr

    @property
    def gamma_minus(self) -> float:
        return self.gamma_minus_r + self.gamma_minus_cr

    @property
    def delta_plus(self) -> float:
        return self.delta_plus_r + self.delta_plus_cr

    @property
    def delta_minus(self) -> float:
        return self.delta_minus_r + self.delta_minus_cr


@dataclass(frozen=True)
class CumulativeJ:
    tau: float
    j_plus_r: float
    j_plus_cr: float
    j_minus_r: float
    j_minus_cr: float
    error: float = 0.0
    converged: bool = True

    @property
    def j_plus(self) -> float:
        return self.j_plus_r + self.j_plus_cr

    @property
    def j_minus(self) -> float:
        return self.j_minus_r + self.j_minus_cr

    @property
    def j_total(self) -> float:
        return self.j_plus + self.j_minus


# --- integrands ---------------------------------------------------------------

def thermal_weights(model: SpectralModel, beta: float, w):
    """(n_T G0, (n_T + 1) G0), assembled jointly so omega -> 0 stays finite."""
    g_over = model.value_over_omega(w)
    return (g_over * omega_times_occupation(beta, w),
            g_over * omega_times_occupation_plus_one(beta, w))


def _support(model: SpectralModel, bath: BathParams):
    lo, hi = model.lower_limit, model.upper_limit
    extra = [bath.omega_a] + list(model.breakpoints())
    return (lo, hi), extra


def _rate_integrand(model, bath, t):
    wa = bath.omega_a

    def f(w):
        n, n1 = thermal_weights(model, bath.beta, w)
        s_r, s_cr = sin_over(w - wa, t), sin_over(w + wa, t)
        c_r, c_cr = one_minus_cos_over(w - wa, t), one_minus_cos_over(w + wa, t)
        return np.stack([2 * n * s_r, 2 * n1 * s_cr, 2 * n1 * s_r, 2 * n * s_cr,
                         n * c_r, -n1 * c_cr, -n1 * c_r, n * c_cr])
    return f


def transition_rates(model: SpectralModel, bath: BathParams, t: float,
                     spec: QuadratureSpec | None = None) -> RateSet:
    """All eight rates and Lamb shifts at time ``t``."""
    if t < 0:
        raise DomainError("t must be non-negative")
    if t == 0:
        return RateSet(0.0)
    domain, extra = _support(model, bath)
    res = oscillatory_integral(_rate_integrand(model, bath, t), domain, t,
                               spec or DEFAULT_SPEC, centers=(bath.omega_a, -bath.omega_a),
                               extra_points=extra)
    return RateSet.from_array(t, res.value, res.error, res.converged)


def filter_integrand(model: SpectralModel, beta_s: float, bath: BathParams, t: float, w):
    """[F^r + F^cr](beta_s, beta, t, w) * G0(w), finite as w -> 0."""
    beta, wa = bath.beta, bath.omega_a
    g_n1 = model.value_over_omega(w) * omega_times_occupation_plus_one(beta, w)
    with np.errstate(over="ignore"):
        rot = np.expm1(beta_s * wa - beta * w)
        counter = math.exp(beta_s * wa) - np.exp(-beta * w)
    return g_n1 * (sinc2_scaled(w - wa, t) * rot + sinc2_scaled(w + wa, t) * counter)


def _j_integrand(model, bath, tau, beta_s):
    wa = bath.omega_a

    def f(w):
        n, n1 = thermal_weights(model, bath.beta, w)
        k_r, k_cr = sinc2_scaled(w - wa, tau), sinc2_scaled(w + wa, tau)
        rows = [n * k_r, n1 * k_cr, n1 * k_r, n * k_cr]
        if beta_s is not None:
            rows.append(filter_integrand(model, beta_s, bath, tau, w))
        return np.stack(rows)
    return f


def j_integrals(model: SpectralModel, bath: BathParams, tau: float,
                spec: QuadratureSpec | None = None, beta_s: float | None = None):
    """Cumulative integrals, optionally with the filter-weighted integral on the same panels.

    Returns ``(CumulativeJ, filter_value_or_None)``.
    """
    if not tau > 0:
        raise DomainError("tau must be positive")
    if beta_s is not None and beta_s * bath.omega_a > 700.0:
        raise DomainError("beta_s * omega_a exceeds 700")
    domain, extra = _support(model, bath)
    res = oscillatory_integral(_j_integrand(model, bath, tau, beta_s), domain, 0.5 * tau,
                               spec or DEFAULT_SPEC, centers=(bath.omega_a, -bath.omega_a),
                               extra_points=extra)
    v = res.value
    cj = CumulativeJ(float(tau), float(v[0]), float(v[1]), float(v[2]), float(v[3]),
                     error=res.error, converged=res.converged)
    return cj, (float(v[4]) if beta_s is not None else None)


def cumulative_j(model: SpectralModel, bath: BathParams, tau: float,
                 spec: QuadratureSpec | None = None) -> CumulativeJ:
    """J_plus^r, J_plus^cr, J_minus^r, J_minus^cr from their closed sinc^2 forms."""
    return j_integrals(model, bath, tau, spec)[0]


def filter_function(beta_s: float, bath: BathParams, t: float, omega):
    """Rotating and counter-rotating filter functions (f_r, f_cr).

    f_r = t^2 (e^{beta_s omega_a} - e^{beta omega})/(e^{beta omega} - 1) sinc^2((omega - omega_a) t/2)
    is negative above omega_a * beta_s/beta; f_cr is positive for beta_s >= 0.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if beta_s < 0:
        raise DomainError("beta_s must be non-negative")
    if beta_s * bath.omega_a > 700.0:
        raise DomainError("beta_s * omega_a exceeds 700")
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise DomainError("omega must be non-negative")
    if np.any(w == 0):
        raise DomainError("filter functions have a 1/omega pole at omega = 0")
    beta, wa = bath.beta, bath.omega_a
    denom = -np.expm1(-beta * w)
    f_r = sinc2_scaled(w - wa, t) * np.expm1(beta_s * wa - beta * w) / denom
    f_cr = sinc2_scaled(w + wa, t) * (math.exp(beta_s * wa) - np.exp(-beta * w)) / denom
    if f_r.ndim == 0:
        return float(f_r), float(f_cr)
    return f_r, f_cr


def golden_rule_rate(model: SpectralModel, bath: BathParams) -> float:
    """Markovian decay rate 2 pi [2 n_T(omega_a) + 1] G0(omega_a)."""
    x = bath.beta * bath.omega_a
    return 2.0 * math.pi * float(model.value(bath.omega_a)) / math.tanh(0.5 * x)


def markov_upward_rate(model: SpectralModel, bath: BathParams) -> float:
    """Long-time limit of gamma_plus, 2 pi n_T(omega_a) G0(omega_a)."""
    x = bath.beta * bath.omega_a
    return 2.0 * math.pi * float(model.value(bath.omega_a)) / math.expm1(x)


# --- batched rates on a time grid ------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
# panel width times the largest t of a block; 10-point Gauss-Legendre is exact
# to double precision for sin(x t) over panels of this phase span
_PHASE_PER_PANEL = 3.0
_BLOCK_ENTRIES = 2_000_000


def _composite_nodes(points, width):
    pts = np.unique(np.asarray(points, dtype=float))
    xs, ws = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil((b - a) / width)))
        edges = np.linspace(a, b, n + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        xs.append((mid[:, None] + half[:, None] * _GL_X).ravel())
        ws.append((half[:, None] * _GL_W).ravel())
    return np.concatenate(xs), np.concatenate(ws)


def rates_on_grid(model: SpectralModel, bath: BathParams, times) -> np.ndarray:
    """The eight coefficients at every entry of ``times``; shape ``(len(times), 8)``.

    Uses a fixed composite 10-point Gauss-Legendre rule whose panels resolve the
    largest time of each block, so a whole grid costs a few matrix products.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise DomainError("times must be non-negative")
    out = np.zeros((times.size, len(RATE_NAMES)))
    order = np.argsort(times)
    (lo, hi), extra = _support(model, bath)
    pts = [lo, hi] + [p for p in extra if lo < p < hi]
    wa = bath.omega_a

    start = 0
    cached_width, nodes = None, None
    while start < times.size:
        t_first = times[order[start]]
        # blocks cover t in [t_first, 2 t_first] so one node set fits all
        t_cap = max(2.0 * t_first, 1.0)
        stop = int(np.searchsorted(times[order], t_cap, side="right"))
        width = min(0.25, _PHASE_PER_PANEL / t_cap)
        if width != cached_width:
            w, wt = _composite_nodes(pts, width)
            n, n1 = thermal_weights(model, bath.beta, w)
            nodes = (w, wt * n, wt * n1)
            cached_width = width
        w, wn, wn1 = nodes
        per = max(1, _BLOCK_ENTRIES // w.size)
        for s in range(start, stop, per):
            idx = order[s:min(stop, s + per)]
            t = times[idx][:, None]
            x_r, x_cr = w - wa, w + wa
            s_r, s_cr = sin_over(x_r, t), sin_over(x_cr, t)
            c_r, c_cr = one_minus_cos_over(x_r, t), one_minus_cos_over(x_cr, t)
            out[idx] = np.stack([2 * s_r @ wn, 2 * s_cr @ wn1, 2 * s_r @ wn1, 2 * s_cr @ wn,
                                 c_r @ wn, -(c_cr @ wn1), -(c_r @ wn1), c_cr @ wn], axis=1)
        start = stop
    return out


class RateTable:
    """Coefficients cached on a time grid and cubic-interpolated in between."""

    def __init__(self, times, values):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self._spline = CubicSpline(self.times, self.values, axis=0)
        # total gamma_plus, gamma_minus, delta_minus - delta_plus
        combo = np.stack([self.values[:, 0] + self.values[:, 1],
                          self.values[:, 2] + self.values[:, 3],
                          self.values[:, 6] + self.values[:, 7]
                          - self.values[:, 4] - self.values[:, 5]], axis=1)
        self._combo = CubicSpline(self.times, combo, axis=0)

    @classmethod
    def build(cls, model: SpectralModel, bath: BathParams, horizon: float, dt: float = 0.01,
              fine_until: float = 50.0, coarse_dt: float = 0.25, tail_after: float = 300.0,
              tail_dt: float = 2.0) -> "RateTable":
        """Grid of spacing ``dt`` up to ``fine_until``, ``coarse_dt`` up to ``tail_after``
        and ``tail_dt`` beyond, where only O(1/t) ripples of period ~2 pi/omega_a remain."""
        if not horizon > 0:
            raise DomainError("horizon must be positive")
        edges = [(0.0, min(horizon, fine_until), dt),
                 (fine_until, min(horizon, tail_after), coarse_dt),
                 (tail_after, horizon, tail_dt)]
        times = [np.zeros(1)]
        for lo, hi, step in edges:
            if hi > lo:
                n = max(4 if lo == 0.0 else 1, int(math.ceil((hi - lo) / step)))
                times.append(np.linspace(lo, hi, n + 1)[1:])
        times = np.concatenate(times)
        return cls(times, rates_on_grid(model, bath, times))

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def totals(self, t):
        """(gamma_plus, gamma_minus, delta_minus - delta_plus) at ``t``."""
        return self._combo(t)

    def rate_set(self, t: float) -> RateSet:
        return RateSet.from_array(t, self._spline(t))
