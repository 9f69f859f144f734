"""Bath spectral densities and thermal weights.

All frequencies, times and inverse temperatures are measured in units of the
qubit transition frequency ``omega_a``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError

ArrayLike = Union[float, np.ndarray]

# Lorentzian wings are integrated up to omega0 + LORENTZ_TAIL_WIDTHS * width.
LORENTZ_TAIL_WIDTHS = 50.0
# Step of the centered differences used for tabulated derivatives.
FD_STEP = 1e-4
# Growing Boltzmann factors e^{beta omega_a} above this exponent are rejected.
MAX_BOLTZMANN_EXPONENT = 700.0


@dataclass(frozen=True)
class BathParams:
    """Inverse temperature ``beta`` and transition frequency ``omega_a``."""

    beta: float
    omega_a: float = 1.0

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be finite and positive, got {self.beta}")
        if not self.omega_a > 0:
            raise DomainError(f"omega_a must be positive, got {self.omega_a}")

    def check_boltzmann(self) -> None:
        """Reject e^{beta omega_a} factors that would overflow."""
        if self.beta * self.omega_a > MAX_BOLTZMANN_EXPONENT:
            raise DomainError(
                f"beta*omega_a = {self.beta * self.omega_a} exceeds {MAX_BOLTZMANN_EXPONENT}")


class Derivatives(NamedTuple):
    first: float
    second: float
    one_sided: bool = False


class TailIntegral(NamedTuple):
    value: float
    remainder_bound: float


class SpectralModel:
    """Base class of the spectral density models G0(omega)."""

    kind: str = ""

    def value(self, omega):
        raise NotImplementedError

    def value_over_omega(self, omega):
        """G0(omega)/omega, finite at omega -> 0 when G0 vanishes linearly."""
        raise NotImplementedError

    def derivatives(self, omega: float) -> Derivatives:
        raise NotImplementedError

    @property
    def upper_limit(self) -> float:
        """Upper end of every frequency integral over this spectrum."""
        raise NotImplementedError

    @property
    def lower_limit(self) -> float:
        return 0.0

    def breakpoints(self) -> list:
        """Frequencies where quadrature panels should start or end."""
        return []

    def scaled(self, factor: float) -> "SpectralModel":
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ModifiedLorentzian(SpectralModel):
    """G0 = alpha * w * width^2 / (width^2 + (w - omega0)^2)."""

    alpha: float
    width: float
    omega0: float
    kind = "modified_lorentzian"

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if not self.width > 0:
            raise DomainError("lambda (width) must be positive")

    def value(self, omega):
        w = np.asarray(omega, dtype=float)
        out = w * self.value_over_omega(w)
        return out if out.ndim else float(out)

    def value_over_omega(self, omega):
        w = np.asarray(omega, dtype=float)
        lam2 = self.width ** 2
        out = self.alpha * lam2 / (lam2 + (w - self.omega0) ** 2)
        return out if out.ndim else float(out)

    def derivatives(self, omega: float) -> Derivatives:
        # G0 = alpha * w * L(w) with L = lam^2 / (lam^2 + u^2), u = w - omega0
        u = omega - self.omega0
        lam2 = self.width ** 2
        d = lam2 + u * u
        L = lam2 / d
        dL = -2.0 * lam2 * u / d ** 2
        d2L = lam2 * (6.0 * u * u - 2.0 * lam2) / d ** 3
        first = self.alpha * (L + omega * dL)
        second = self.alpha * (2.0 * dL + omega * d2L)
        return Derivatives(first, second)

    @property
    def upper_limit(self) -> float:
        return self.omega0 + LORENTZ_TAIL_WIDTHS * self.width

    def breakpoints(self) -> list:
        pts = [self.omega0 - self.width, self.omega0, self.omega0 + self.width]
        return [p for p in pts if 0.0 < p < self.upper_limit]

    def scaled(self, factor: float) -> "ModifiedLorentzian":
        return ModifiedLorentzian(self.alpha * factor, self.width, self.omega0)

    def params(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha, "lambda": self.width,
                "omega0": self.omega0}

    def tail_remainder_bound(self, omega_lo: float) -> float:
        """Rigorous bound on the integral of G0/w^2 from omega_lo to infinity.

        Uses G0/w^2 <= alpha lam^2 / (w (w - omega0)^2), valid for w > omega0.
        """
        a = self.omega0
        w = omega_lo
        if w <= a:
            return math.inf
        if a == 0.0:
            return self.alpha * self.width ** 2 / (2.0 * w * w)
        primitive = 1.0 / (a * (w - a)) - math.log(w / (w - a)) / (a * a)
        return self.alpha * self.width ** 2 * primitive


@dataclass(frozen=True)
class SuperOhmic(SpectralModel):
    """G0 = alpha * omega_c^(1-s) * w^s * Theta(1 - w/omega_c)."""

    alpha: float
    s: float
    omega_c: float
    kind = "super_ohmic"

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if not self.s >= 0:
            raise DomainError("exponent s must be >= 0")
        if not self.omega_c > 0:
            raise DomainError("omega_c must be positive")

    @property
    def _prefactor(self) -> float:
        return self.alpha * self.omega_c ** (1.0 - self.s)

    def value(self, omega):
        w = np.asarray(omega, dtype=float)
        out = np.where(w <= self.omega_c, self._prefactor * np.abs(w) ** self.s, 0.0)
        return out if out.ndim else float(out)

    def value_over_omega(self, omega):
        w = np.asarray(omega, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(w <= self.omega_c,
                           self._prefactor * np.abs(w) ** (self.s - 1.0), 0.0)
        return out if out.ndim else float(out)

    def derivatives(self, omega: float) -> Derivatives:
        if omega > self.omega_c:
            raise DomainError(f"omega = {omega} lies beyond the cutoff {self.omega_c}")
        c, s = self._prefactor, self.s
        first = c * s * omega ** (s - 1.0)
        second = c * s * (s - 1.0) * omega ** (s - 2.0)
        # at the cutoff only the left-sided derivative exists
        return Derivatives(first, second, one_sided=(omega == self.omega_c))

    @property
    def upper_limit(self) -> float:
        return self.omega_c

    def scaled(self, factor: float) -> "SuperOhmic":
        return SuperOhmic(self.alpha * factor, self.s, self.omega_c)

    def params(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha, "s": self.s,
                "omega_c": self.omega_c}

    def beta_max(self, omega_a: float = 1.0) -> float:
        """Largest inverse temperature passing the log-derivative criterion."""
        return 2.0 * self.s / omega_a


@dataclass(frozen=True, eq=False)
class Tabulated(SpectralModel):
    """Monotone piecewise-cubic interpolation of sampled densities.

    G0 vanishes below the first grid point and above ``cutoff``.
    """

    omega: np.ndarray
    density: np.ndarray
    cutoff: float = field(default=None)
    kind = "tabulated"

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        g = np.asarray(self.density, dtype=float)
        if w.ndim != 1 or w.shape != g.shape or w.size < 2:
            raise DomainError("tabulated spectrum needs two equal-length 1-D columns")
        if np.any(np.diff(w) <= 0):
            raise DomainError("tabulated frequency grid must be strictly increasing")
        if w[0] < 0:
            raise DomainError("tabulated frequencies must be non-negative")
        if np.any(g < 0):
            raise DomainError("tabulated densities must be non-negative")
        cutoff = w[-1] if self.cutoff is None else float(self.cutoff)
        if not w[0] < cutoff <= w[-1]:
            raise DomainError("cutoff must lie inside the tabulated grid")
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "density", g)
        object.__setattr__(self, "cutoff", cutoff)

    @classmethod
    def from_file(cls, path, cutoff=None) -> "Tabulated":
        data = np.loadtxt(path, comments="#", ndmin=2)
        if data.shape[1] != 2:
            raise DomainError(f"{path}: expected two columns, found {data.shape[1]}")
        return cls(data[:, 0], data[:, 1], cutoff)

    @cached_property
    def _interp(self) -> PchipInterpolator:
        return PchipInterpolator(self.omega, self.density, extrapolate=False)

    def _inside(self, w):
        return (w >= self.omega[0]) & (w <= self.cutoff)

    def value(self, omega):
        w = np.asarray(omega, dtype=float)
        inside = self._inside(w)
        out = np.where(inside, np.nan_to_num(self._interp(np.where(inside, w, self.omega[0]))),
                       0.0)
        out = np.maximum(out, 0.0)
        return out if out.ndim else float(out)

    def value_over_omega(self, omega):
        w = np.asarray(omega, dtype=float)
        g = np.asarray(self.value(w))
        zero = w == 0.0
        if np.any(zero & self._inside(w)):
            if self.density[0] > 0:
                raise DomainError("G0(0) > 0: G0/omega diverges at omega = 0")
            slope = float(self._interp.derivative()(0.0))
        else:
            slope = 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(zero, slope, g / np.where(zero, 1.0, w))
        return out if out.ndim else float(out)

    def derivatives(self, omega: float) -> Derivatives:
        if not (self.omega[0] <= omega <= self.cutoff):
            raise DomainError(f"omega = {omega} lies outside the tabulated support")
        h = FD_STEP
        at_edge = omega - h < self.omega[0] or omega + h > self.cutoff
        if at_edge:
            # one-sided second-order differences pointing into the support
            sign = 1.0 if omega - h < self.omega[0] else -1.0
            g0, g1, g2 = (self.value(omega + sign * k * h) for k in range(3))
            first = sign * (-3.0 * g0 + 4.0 * g1 - g2) / (2.0 * h)
            second = (g0 - 2.0 * g1 + g2) / (h * h)
            return Derivatives(first, second, one_sided=True)
        gm, g0, gp = self.value(omega - h), self.value(omega), self.value(omega + h)
        return Derivatives((gp - gm) / (2.0 * h), (gp - 2.0 * g0 + gm) / (h * h))

    @property
    def lower_limit(self) -> float:
        return float(self.omega[0])

    @property
    def upper_limit(self) -> float:
        return self.cutoff

    def breakpoints(self) -> list:
        # panels never straddle more than a handful of knots
        step = max(1, self.omega.size // 64)
        return [float(w) for w in self.omega[::step] if self.omega[0] < w < self.cutoff]

    def scaled(self, factor: float) -> "Tabulated":
        return Tabulated(self.omega, self.density * factor, self.cutoff)

    def params(self) -> dict:
        return {"kind": self.kind, "points": int(self.omega.size),
                "omega_min": float(self.omega[0]), "cutoff": self.cutoff}


# --- spectral operations ------------------------------------------------------

def _check_frequency(omega):
    if np.any(np.asarray(omega) < 0):
        raise DomainError("frequencies must be non-negative")


def sdf_value(model: SpectralModel, omega: ArrayLike) -> ArrayLike:
    """G0(omega); exactly zero beyond the cutoff of cutoff models."""
    _check_frequency(omega)
    return model.value(omega)


def sdf_derivatives(model: SpectralModel, omega: float) -> Derivatives:
    """First and second derivative of G0, flagged when only one-sided."""
    if omega <= 0:
        raise DomainError("derivatives are only defined for omega > 0")
    return model.derivatives(float(omega))


def thermal_occupation(beta: float, omega: ArrayLike) -> ArrayLike:
    """Bose occupation 1/(exp(beta*omega) - 1)."""
    w = np.asarray(omega, dtype=float)
    if beta <= 0:
        raise DomainError("beta must be positive")
    if np.any(w <= 0):
        raise DomainError("thermal occupation diverges as 1/(beta*omega) at omega = 0")
    with np.errstate(over="ignore"):
        out = 1.0 / np.expm1(beta * w)
    return out if out.ndim else float(out)


def omega_times_occupation(beta: float, omega):
    """omega * n_T(omega), continued to 1/beta at omega = 0."""
    w = np.asarray(omega, dtype=float)
    x = beta * w
    small = x < 1e-3
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        big = w / np.expm1(np.where(small, 1.0, x))
    series = (1.0 - x / 2.0 + x * x / 12.0) / beta
    return np.where(small, series, big)


def omega_times_occupation_plus_one(beta: float, omega):
    """omega * (n_T(omega) + 1), continued to 1/beta at omega = 0."""
    w = np.asarray(omega, dtype=float)
    x = beta * w
    small = x < 1e-3
    with np.errstate(divide="ignore", invalid="ignore"):
        big = w / -np.expm1(-np.where(small, 1.0, x))
    series = (1.0 + x / 2.0 + x * x / 12.0) / beta
    return np.where(small, series, big)


def thermal_sdf(model: SpectralModel, beta: float, omega: ArrayLike) -> ArrayLike:
    """[2 n_T(omega) + 1] G0(omega), finite at omega -> 0 for parametric models."""
    _check_frequency(omega)
    w = np.asarray(omega, dtype=float)
    weight = omega_times_occupation(beta, w) + omega_times_occupation_plus_one(beta, w)
    out = model.value_over_omega(w) * weight
    # exactly G0 where the thermal part underflows
    out = np.where(beta * w > 745.0, model.value(w), out)
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def tail_integral(model: SpectralModel, omega_lo: float, spec=None) -> TailIntegral:
    """Integral of G0(w)/w^2 from ``omega_lo`` to the end of the support."""
    if omega_lo <= 0:
        raise DomainError("omega_lo must be positive")
    if isinstance(model, SuperOhmic):
        hi = model.omega_c
        if omega_lo >= hi:
            return TailIntegral(0.0, 0.0)
        c, s = model._prefactor, model.s
        if s == 1.0:
            value = c * math.log(hi / omega_lo)
        else:
            value = c * (hi ** (s - 1.0) - omega_lo ** (s - 1.0)) / (s - 1.0)
        return TailIntegral(value, 0.0)

    from .quadrature import integrate

    hi = model.upper_limit
    if isinstance(model, ModifiedLorentzian):
        remainder = model.tail_remainder_bound(max(omega_lo, hi))
    else:
        remainder = 0.0
    if omega_lo >= hi:
        return TailIntegral(0.0, remainder)
    pts = [omega_lo] + [p for p in model.breakpoints() if omega_lo < p < hi] + [hi]
    res = integrate(lambda w: model.value(w) / (w * w), pts, spec)
    return TailIntegral(res.value, remainder)
