"""Qubit dynamics: generalized Bloch equations, QND projections, analytic envelopes."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError
from .kernels import CumulativeJ, RateSet, RateTable, golden_rule_rate, transition_rates
from .spectrum import BathParams, SpectralModel

POSITIVITY_SLACK = 1e-9


@dataclass(frozen=True)
class QubitState:
    rho_ee: float
    rho_eg_re: float = 0.0
    rho_eg_im: float = 0.0

    @property
    def rho_gg(self) -> float:
        return 1.0 - self.rho_ee

    @property
    def rho_eg(self) -> complex:
        return complex(self.rho_eg_re, self.rho_eg_im)

    @property
    def rho_ge(self) -> complex:
        return self.rho_eg.conjugate()

    def positivity_violation(self) -> float:
        """Amount by which |rho_eg|^2 exceeds rho_ee rho_gg (0 when physical)."""
        return max(0.0, abs(self.rho_eg) ** 2 - self.rho_ee * self.rho_gg)

    def as_array(self) -> np.ndarray:
        return np.array([self.rho_ee, self.rho_eg_re, self.rho_eg_im])

    @classmethod
    def from_array(cls, y) -> "QubitState":
        return cls(float(y[0]), float(y[1]), float(y[2]))

    def matrix(self) -> np.ndarray:
        return np.array([[self.rho_ee, self.rho_eg], [self.rho_ge, self.rho_gg]])


@dataclass(frozen=True)
class Protocol:
    """Measurement interval, number of measurements and integration controls.

    ``method`` is ``"rk45"`` (adaptive Dormand-Prince) or ``"rk4"`` (fixed step,
    one step per rate-table interval).
    """

    tau: float = 1.0
    n_meas: int = 0
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    method: str = "rk45"
    table_dt: float = 0.01
    table_fine_until: float = 50.0
    table_coarse_dt: float = 0.25
    table_tail_after: float = 300.0
    table_tail_dt: float = 2.0
    samples_per_interval: int = 25
    continuous_clock: bool = False

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError("tau must be positive")
        if self.n_meas < 0:
            raise DomainError("n_meas must be >= 0")
        if self.method not in ("rk45", "rk4"):
            raise DomainError(f"unknown integration method {self.method!r}")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n, 3): rho_ee, Re rho_eg, Im rho_eg
    is_measurement: np.ndarray
    rates: Optional[List[RateSet]] = None
    worst_violation: float = 0.0
    flags: List[str] = field(default_factory=list)

    @property
    def rho_ee(self) -> np.ndarray:
        return self.states[:, 0]

    def state(self, i: int) -> QubitState:
        return QubitState.from_array(self.states[i])

    def measurement_times(self) -> np.ndarray:
        return self.times[self.is_measurement]

    def measurement_populations(self) -> np.ndarray:
        return self.states[self.is_measurement, 0]

    @property
    def positivity_violated(self) -> bool:
        return self.worst_violation > POSITIVITY_SLACK

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "rho_ee", "re_rho_eg", "im_rho_eg", "is_measurement"])
            for t, (a, b, c), m in zip(self.times, self.states, self.is_measurement):
                w.writerow([f"{t:.17g}", f"{a:.17g}", f"{b:.17g}", f"{c:.17g}", int(m)])


# --- equations of motion ----------------------------------------------------------

def _rhs_totals(y, gamma_plus, gamma_minus, delta_diff, omega_a):
    rho_ee, x, v = y
    gamma_sum = gamma_plus + gamma_minus
    return np.array([
        -gamma_minus * rho_ee + gamma_plus * (1.0 - rho_ee),
        omega_a * v,
        -(omega_a + 2.0 * delta_diff) * x - gamma_sum * v,
    ])


def bloch_rhs(state: QubitState, rates: RateSet, bath: BathParams) -> QubitState:
    """Time derivative of (rho_ee, Re rho_eg, Im rho_eg).

    With G = gamma_minus + gamma_plus and D = delta_minus - delta_plus the
    coherence obeys
    d rho_eg/dt = -(G/2 + i(omega_a + D)) rho_eg + (G/2 - i D) rho_ge.
    """
    d = _rhs_totals(state.as_array(), rates.gamma_plus, rates.gamma_minus,
                    rates.delta_minus - rates.delta_plus, bath.omega_a)
    return QubitState.from_array(d)


def apply_measurement(state: QubitState) -> QubitState:
    """Nonselective sigma_z projection: keeps populations, erases coherences."""
    return QubitState(state.rho_ee, 0.0, 0.0)


def _rk4(fun, t_span, y0, t_eval, h):
    t0, t1 = t_span
    n = max(1, int(math.ceil((t1 - t0) / h - 1e-9)))
    ts = np.linspace(t0, t1, n + 1)
    ys = np.empty((n + 1, y0.size))
    ys[0] = y0
    hh = (t1 - t0) / n
    y = y0
    for i in range(n):
        t = ts[i]
        k1 = fun(t, y)
        k2 = fun(t + 0.5 * hh, y + 0.5 * hh * k1)
        k3 = fun(t + 0.5 * hh, y + 0.5 * hh * k2)
        k4 = fun(t + hh, y + hh * k3)
        y = y + hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[i + 1] = y
    # cubic Hermite through the step nodes for the requested samples
    dys = np.array([fun(t, yy) for t, yy in zip(ts, ys)])
    return CubicHermiteSpline(ts, ys, dys, axis=0)(t_eval)


def _integrate_segment(table: RateTable, bath: BathParams, y0: np.ndarray, clock0: float,
                       duration: float, t_eval: np.ndarray, protocol: Protocol):
    """Integrate over [clock0, clock0 + duration] of the coefficient clock."""
    wa = bath.omega_a

    def fun(t, y):
        gp, gm, dd = table.totals(t)
        return _rhs_totals(y, gp, gm, dd, wa)

    span = (clock0, clock0 + duration)
    if protocol.method == "rk4":
        return _rk4(fun, span, y0, t_eval, protocol.table_dt), True
    sol = solve_ivp(fun, span, y0, method="RK45", t_eval=t_eval, rtol=protocol.rel_tol,
                    atol=protocol.abs_tol, dense_output=False)
    return sol.y.T, bool(sol.success)


def _rate_table(model, bath, horizon, protocol: Protocol) -> RateTable:
    return RateTable.build(model, bath, horizon, dt=protocol.table_dt,
                           fine_until=protocol.table_fine_until,
                           coarse_dt=protocol.table_coarse_dt,
                           tail_after=protocol.table_tail_after,
                           tail_dt=protocol.table_tail_dt)


def _finish(times, states, marks, flags, table=None, with_rates=False):
    rho_ee, x, y = states.T
    violation = np.maximum(0.0, x * x + y * y - rho_ee * (1.0 - rho_ee))
    worst = float(violation.max()) if violation.size else 0.0
    if worst > POSITIVITY_SLACK:
        flags.append(f"positivity violated: |rho_eg|^2 exceeds rho_ee*rho_gg by {worst:.3e}")
    rates = None
    if with_rates and table is not None:
        rates = [table.rate_set(t) for t in times]
    return Trajectory(np.asarray(times), np.asarray(states), np.asarray(marks, dtype=bool),
                      rates, worst, flags)


def evolve_free(state0: QubitState, model: SpectralModel, bath: BathParams, horizon: float,
                protocol: Protocol | None = None, sample_times=None, table: RateTable | None = None,
                with_rates: bool = False) -> Trajectory:
    """Free evolution under the time-dependent coefficients from t = 0."""
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    protocol = protocol or Protocol()
    if sample_times is None:
        n = max(2, int(math.ceil(horizon / protocol.tau * protocol.samples_per_interval)))
        sample_times = np.linspace(0.0, horizon, n + 1)
    sample_times = np.asarray(sample_times, dtype=float)
    if sample_times[0] < 0 or sample_times[-1] > horizon or np.any(np.diff(sample_times) <= 0):
        raise DomainError("sample times must be strictly increasing inside [0, horizon]")
    if table is None or table.horizon < horizon:
        table = _rate_table(model, bath, horizon, protocol)
    flags = []
    states, ok = _integrate_segment(table, bath, state0.as_array(), 0.0, horizon,
                                    sample_times, protocol)
    if not ok:
        flags.append("integrator failure in free evolution")
    marks = np.zeros(sample_times.size, dtype=bool)
    return _finish(sample_times, states, marks, flags, table, with_rates)


def evolve_measured(state0: QubitState, model: SpectralModel, bath: BathParams,
                    protocol: Protocol, table: RateTable | None = None,
                    with_rates: bool = False) -> Trajectory:
    """Free evolution interrupted by projections at t = k tau, k = 1..n_meas.

    The bath re-factorises after each projection, so every interval re-runs the
    coefficients from zero unless ``protocol.continuous_clock`` is set.
    Post-measurement states are recorded at each k tau with the marker set.
    """
    tau, n = protocol.tau, protocol.n_meas
    if n == 0:
        return evolve_free(state0, model, bath, tau, protocol, table=table,
                           with_rates=with_rates)
    clock_span = n * tau if protocol.continuous_clock else tau
    if table is None or table.horizon < clock_span:
        table = _rate_table(model, bath, clock_span, protocol)
    m = max(2, protocol.samples_per_interval)
    local = np.linspace(0.0, tau, m + 1)
    times, states, marks, flags = [0.0], [state0.as_array()], [False], []
    y = state0.as_array()
    for k in range(n):
        clock0 = k * tau if protocol.continuous_clock else 0.0
        seg, ok = _integrate_segment(table, bath, y, clock0, tau, clock0 + local, protocol)
        if not ok:
            flags.append(f"integrator failure in interval {k + 1}")
        times.extend(k * tau + local[1:-1])
        states.extend(seg[1:-1])
        marks.extend([False] * (m - 1))
        y = apply_measurement(QubitState.from_array(seg[-1])).as_array()
        times.append((k + 1) * tau)
        states.append(y)
        marks.append(True)
    traj = _finish(np.array(times), np.array(states), marks, flags, table, with_rates)
    return traj


def measured_map(model: SpectralModel, bath: BathParams, protocol: Protocol,
                 table: RateTable | None = None):
    """Affine one-interval map rho_ee -> a rho_ee + c for a diagonal initial state.

    Populations obey a linear equation once coherences are projected out, so two
    integrations fix the map exactly. Returns ``(a, c)``; the plateau of the
    measured sequence is ``c / (1 - a)``.
    """
    if table is None or table.horizon < protocol.tau:
        table = _rate_table(model, bath, protocol.tau, protocol)
    ends = []
    for rho0 in (0.0, 1.0):
        seg, _ = _integrate_segment(table, bath, np.array([rho0, 0.0, 0.0]), 0.0,
                                    protocol.tau, np.array([0.0, protocol.tau]), protocol)
        ends.append(seg[-1, 0])
    c = ends[0]
    a = ends[1] - ends[0]
    return a, c


def measured_plateau(model: SpectralModel, bath: BathParams, protocol: Protocol,
                     table: RateTable | None = None) -> float:
    """Fixed point of the measured map, the quasisteady excited population."""
    a, c = measured_map(model, bath, protocol, table)
    return c / (1.0 - a)


# --- analytic solutions -----------------------------------------------------------

def effective_temperature(rho_ee: float, bath: BathParams | None = None):
    """Inverse temperature beta_S with rho_ee = 1/(exp(beta_S omega_a) + 1).

    Returns ``(beta_s, flag)`` where ``flag`` is ``None``, ``"inversion"`` for
    rho_ee > 1/2 (negative beta_S) or ``"boundary"`` at rho_ee = 1/2.
    """
    omega_a = bath.omega_a if bath is not None else 1.0
    if not 0.0 < rho_ee < 1.0:
        raise DomainError("effective temperature is undefined for rho_ee in {0, 1}")
    beta_s = math.log(1.0 / rho_ee - 1.0) / omega_a
    if rho_ee == 0.5:
        return 0.0, "boundary"
    return beta_s, ("inversion" if rho_ee > 0.5 else None)


def adiabatic_population(rho_ee0: float, cumulative: CumulativeJ,
                         bath: BathParams | None = None) -> float:
    """Short-time estimate rho_ee0 [1 + exp(beta_S omega_a) J_plus - J_minus]."""
    omega_a = bath.omega_a if bath is not None else 1.0
    beta_s, _ = effective_temperature(rho_ee0, bath)
    return rho_ee0 * (1.0 + math.exp(beta_s * omega_a) * cumulative.j_plus
                      - cumulative.j_minus)


@dataclass(frozen=True)
class MeasuredEnvelope:
    rho_ee0: float
    tau: float
    effective_rate: float
    steady: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = (self.rho_ee0 - self.steady) * np.exp(-self.effective_rate * t) + self.steady
        return out if out.ndim else float(out)


def measured_envelope(rho_ee0: float, tau: float, cumulative: CumulativeJ, t=None):
    """Exponential approach to J_plus/J at rate J/tau under periodic measurements.

    With ``t`` given the envelope value is returned, otherwise the envelope object.
    """
    if not tau > 0:
        raise DomainError("tau must be positive")
    if not cumulative.j_total > 0:
        raise DomainError("J(tau) must be positive")
    env = MeasuredEnvelope(rho_ee0, tau, cumulative.j_total / tau,
                           cumulative.j_plus / cumulative.j_total)
    return env if t is None else env(t)


def thermal_population(bath: BathParams) -> float:
    """Fermi population 1/(exp(beta omega_a) + 1) of the bath temperature."""
    return 1.0 / (math.exp(bath.beta * bath.omega_a) + 1.0)


def markovian_population(rho_ee0: float, model: SpectralModel, bath: BathParams, t):
    """Golden-rule relaxation towards the bath population."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be non-negative")
    rho_b = thermal_population(bath)
    out = (rho_ee0 - rho_b) * np.exp(-golden_rule_rate(model, bath) * t) + rho_b
    return out if out.ndim else float(out)


def direct_rates(model: SpectralModel, bath: BathParams):
    """Coefficient source that runs the quadrature at every call (debug mode)."""

    class _Direct:
        horizon = math.inf

        def totals(self, t):
            r = transition_rates(model, bath, float(t))
            return np.array([r.gamma_plus, r.gamma_minus, r.delta_minus - r.delta_plus])

        def rate_set(self, t):
            return transition_rates(model, bath, float(t))

    return _Direct()
