"""Acceptance criteria 1-8, one test each.

Every test prints a single ``ACCEPTANCE <n>: PASS|FAIL ...`` line (visible with
``pytest -v -s`` and in the terminal summary) and fails if any sub-check or the
runtime budget is missed. Tolerances are the stated ones.
"""
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from zenocool.analysis import (cooling_criterion, cooling_domain, m_factor_exact, optimize_tau,
                               w2_estimate, w2_estimate_max)
from zenocool.dynamics import (Protocol, QubitState, evolve_free, evolve_measured,
                               measured_envelope, measured_plateau)
from zenocool.kernels import RateTable, cumulative_j, golden_rule_rate
from zenocool.spectrum import BathParams, ModifiedLorentzian, SuperOhmic

REF = ModifiedLorentzian(alpha=0.01, width=0.25, omega0=1.5)
BETA2 = BathParams(2.0)
RHO_B = 0.119203
TESTS = Path(__file__).resolve().parent

RESULTS = {}


class Checks:
    """Collects named sub-checks so one line can report all of them."""

    def __init__(self, number, budget):
        self.number, self.budget = number, budget
        self.items = []
        self.start = time.perf_counter()

    def __call__(self, name, ok, detail=""):
        self.items.append((name, bool(ok), detail))

    def finish(self):
        elapsed = time.perf_counter() - self.start
        self(f"runtime<{self.budget:g}s", elapsed < self.budget, f"{elapsed:.1f}s")
        passed = all(ok for _, ok, _ in self.items)
        parts = "; ".join(f"{n}={'ok' if ok else 'FAIL'}" + (f" ({d})" if d else "")
                          for n, ok, d in self.items)
        line = f"ACCEPTANCE {self.number}: {'PASS' if passed else 'FAIL'} | {parts}"
        RESULTS[self.number] = line
        print(line)
        assert passed, line


def test_criterion_1_golden_rule_anchor():
    c = Checks(1, 10)
    rate = golden_rule_rate(REF, BETA2)
    c("golden_rule=0.0165003 rel1e-6", rate == pytest.approx(0.0165003, rel=1e-6),
      f"{rate:.9g}")
    jt = cumulative_j(REF, BETA2, 500.0).j_total / 500.0
    c("J(500)/500 rel2%", jt == pytest.approx(rate, rel=0.02), f"{jt:.7g}")
    c.finish()


def test_criterion_2_reference_dynamics():
    c = Checks(2, 60)
    horizon = 300.0
    table = RateTable.build(REF, BETA2, horizon)
    free = evolve_free(QubitState(0.15), REF, BETA2, horizon, table=table)
    c("(a) free->0.119203 rel2%", free.rho_ee[-1] == pytest.approx(RHO_B, rel=0.02),
      f"{free.rho_ee[-1]:.6f}")

    proto = Protocol(tau=2.5, n_meas=40)
    meas = evolve_measured(QubitState(0.15), REF, BETA2, proto, table=table)
    pts = meas.measurement_populations()
    cj = cumulative_j(REF, BETA2, 2.5)
    target = cj.j_plus / cj.j_total
    fixed = measured_plateau(REF, BETA2, proto, table=table)
    c("(b) plateau<rho_B", pts[-1] < RHO_B and fixed < RHO_B, f"{pts[-1]:.6f}")
    c("(b) plateau=J+/J rel2%", pts[-1] == pytest.approx(target, rel=0.02)
      and fixed == pytest.approx(target, rel=0.02),
      f"terminal {pts[-1]:.6f}, fixed point {fixed:.6f} vs {target:.6f}")

    env = measured_envelope(0.15, 2.5, cj)
    tm = meas.measurement_times()
    dev = float(np.max(np.abs(env(tm) - pts)))
    c("(c) envelope abs0.01", dev <= 0.01, f"max dev {dev:.4f}")

    warm = evolve_free(QubitState(0.12), REF, BETA2, 30.0, table=table,
                        sample_times=np.linspace(0.0, 30.0, 3001))
    k = int(np.argmax(warm.rho_ee))
    rises = 0 < k < warm.rho_ee.size - 1 and warm.rho_ee[k] > 0.12
    dips = bool(np.any(warm.rho_ee[k:] < 0.12))
    c("(d) interior max then below 0.12", rises and dips,
      f"max {warm.rho_ee[k]:.5f} at t={warm.times[k]:.2f}, min after {warm.rho_ee[k:].min():.5f}")
    c.finish()


def test_criterion_3_cooling_domain():
    c = Checks(3, 30)
    d = cooling_domain(BETA2, 50.0)
    c("w2(tau=50) rel10% of 2.0827", d.omega2 == pytest.approx(2.0827, rel=0.10),
      f"{d.omega2:.5f}")
    beta_at, w2max = w2_estimate_max()
    numeric = -minimize_scalar(lambda b: -w2_estimate(BathParams(b)), bounds=(0.1, 10.0),
                               method="bounded", options={"xatol": 1e-10}).fun
    c("beta-max bound 2.47152", w2max == pytest.approx(2.47152, abs=5e-6)
      and numeric == pytest.approx(w2max, rel=1e-9), f"{w2max:.6f} at beta={beta_at:g}")
    d2 = cooling_domain(BETA2, 2.0, merge_gaps=False)
    target = math.pi - 1.0
    brackets = any(a <= target <= b for a, b in d2.lobes)
    abuts = min(min(abs(a - target), abs(b - target)) for a, b in d2.lobes) <= 1e-6
    c("tau=2 lobe brackets/abuts pi-1", brackets or abuts,
      f"lobes {[(round(a, 4), round(b, 4)) for a, b in d2.lobes]}")
    c.finish()


def test_criterion_4_tau_min_law():
    c = Checks(4, 300)
    for w0 in (1.2, 1.5, 2.0, 2.5, 3.0):
        opt = optimize_tau(ModifiedLorentzian(0.01, 0.25, w0), BETA2, (1e-3, 20.0))
        ref = 2 * math.pi / (w0 + 1.0)
        c(f"omega0={w0:g}", opt.tau_min == pytest.approx(ref, rel=0.20),
          f"tau_min {opt.tau_min:.4f} vs {ref:.4f}")
    c.finish()


def test_criterion_5_debye_thresholds():
    c = Checks(5, 120)
    m1 = optimize_tau(SuperOhmic(0.01, 1.0, 2.0), BETA2, (1e-3, 20.0)).m_min
    m3 = optimize_tau(SuperOhmic(0.01, 3.0, 2.0), BETA2, (1e-3, 20.0)).m_min
    c("s=1 min M>=0", m1 >= 0, f"{m1:.5f}")
    c("s=3 min M<0", m3 < 0, f"{m3:.5f}")
    for s in (1.0, 2.0, 3.0, 4.0):
        bm = cooling_criterion(SuperOhmic(0.01, s, 2.0), BETA2).beta_max
        c(f"beta_max(s={s:g})=2s", bm == 2 * s, f"{bm}")
    c.finish()


def test_criterion_6_nonmonotone_mmin_beta():
    c = Checks(6, 300)
    betas = (0.5, 1.0, 2.0, 4.0, 6.0)
    mins = [optimize_tau(REF, BathParams(b), (1e-3, 20.0)).m_min for b in betas]
    interior = any(m < min(mins[0], mins[-1]) for m in mins[1:-1])
    c("interior beta beats both ends", interior, ", ".join(f"{m:.4f}" for m in mins))
    c.finish()


def test_criterion_7_qaze_without_cooling():
    c = Checks(7, 300)
    hits = []
    for s in (2.0, 3.0):
        for wc in (3.0, 4.0):
            model = SuperOhmic(0.01, s, wc)
            gamma0 = golden_rule_rate(model, BETA2)
            for tau in np.arange(0.1, 10.0 + 1e-9, 0.1):
                mf = m_factor_exact(model, BETA2, float(tau))
                if mf.cumulative.j_total / tau > gamma0 and mf.value > 0:
                    hits.append((s, wc, round(float(tau), 2)))
    c("QAZE with M>0 exists", len(hits) >= 1, f"{len(hits)} points, first {hits[:1]}")
    c.finish()


PROPERTY_NODES = [
    # quadrature vs trapezoid oracle matrix
    "test_kernels.py::test_quadrature_oracle_matrix",
    "test_kernels.py::test_rates_against_trapezoid_oracle",
    "test_kernels.py::test_cumulative_j_against_trapezoid",
    "test_quadrature.py::test_sinc2_against_trapezoid_oracle",
    # dJ/dtau = Gamma
    "test_kernels.py::test_cumulative_j_derivative",
    "test_properties.py::test_dj_dtau_is_gamma",
    # sinc convention
    "test_kernels.py::test_sinc_convention",
    # projection idempotence, trace and hermiticity
    "test_properties.py::test_projection_idempotent_and_diagonal_fixed",
    "test_dynamics.py::test_measurement",
    "test_properties.py::test_trace_and_hermiticity",
    "test_dynamics.py::test_rhs_trace_conservation",
    # alpha invariance of ratio quantities
    "test_properties.py::test_alpha_invariance",
    "test_analysis.py::test_classify_alpha_invariant",
    # filter algebraic identity
    "test_kernels.py::test_filter_algebraic_identity",
    "test_properties.py::test_filter_identity",
    # zero-temperature vanishing
    "test_kernels.py::test_zero_temperature_super_ohmic",
]


def test_criterion_8_property_suites():
    c = Checks(8, 120)
    # separate interpreter: nothing from the figure pipelines (cli, tables) is loaded
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           *[str(TESTS / n) for n in PROPERTY_NODES]],
                          cwd=TESTS.parent, capture_output=True, text=True)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    c("property suites", proc.returncode == 0, tail)
    c.finish()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
