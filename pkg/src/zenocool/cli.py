"""Command-line front end: rates | evolve | mfactor | cooldomain | optimize | classify."""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from typing import List, Optional

import numpy as np

from . import __version__
from .analysis import (classify_zeno, cooling_criterion, cooling_domain, cooling_report,
                       cr_zero_curve, m_factor_approx, m_factor_exact, m_factor_smoothed,
                       optimize_tau, w2_estimate, zeno_cooling_conditions)
from .config import ConfigError, RunConfig, load_config
from .dynamics import (Protocol, QubitState, adiabatic_population, evolve_free, evolve_measured,
                       markovian_population, measured_envelope, thermal_population)
from .errors import DomainError
from .kernels import RATE_NAMES, RateTable, cumulative_j, transition_rates
from .output import write_csv, write_json, write_svg
from .parallel import ordered_map
from .spectrum import BathParams, ModifiedLorentzian, SuperOhmic

EXIT_OK, EXIT_FLAGGED, EXIT_CONFIG = 0, 1, 2


class Run:
    """Collects output files and flags of one command."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.flags: List[str] = []
        self.files: List[str] = []
        self.summary: dict = {}
        cfg.out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str):
        return self.cfg.out_dir / name

    def csv(self, name, header, rows):
        if self.cfg.wants("csv"):
            self.files.append(str(write_csv(self.path(name), header, rows)))

    def json(self, name, data):
        if self.cfg.wants("json"):
            self.files.append(str(write_json(self.path(name), data)))

    def svg(self, name, series, **kw):
        if self.cfg.wants("svg"):
            self.files.append(str(write_svg(self.path(name), series, **kw)))


def _protocol(cfg: RunConfig, n_meas: int) -> Protocol:
    return Protocol(tau=cfg.tau, n_meas=n_meas, rel_tol=cfg.spec.rel_tol, method=cfg.method,
                    table_dt=cfg.table_dt, continuous_clock=cfg.continuous_clock)


# --- commands ---------------------------------------------------------------------

def cmd_rates(run: Run) -> None:
    cfg = run.cfg
    sets = ordered_map(lambda t: transition_rates(cfg.model, cfg.bath, float(t), cfg.spec),
                       cfg.t_grid, cfg.threads)
    rows = []
    for r in sets:
        flag = "" if r.converged else "not_converged"
        if flag:
            run.flags.append(f"rates: quadrature not converged at t = {r.t}")
        rows.append([r.t, *r.as_array(), r.error, flag])
    run.csv("rates.csv", ["t", *RATE_NAMES, "error", "flag"], rows)
    ts = [r.t for r in sets]
    run.svg("rates.svg", [(n, ts, [getattr(r, n) for r in sets]) for n in RATE_NAMES[:4]],
            xlabel="omega_a t", ylabel="rate / omega_a", title="Transition rates")
    run.summary = {"points": len(sets)}


def cmd_evolve(run: Run) -> None:
    cfg = run.cfg
    state0 = QubitState(cfg.rho_ee0)
    span = cfg.tau * cfg.n_meas if cfg.n_meas else cfg.horizon
    horizon = max(cfg.horizon, span)
    proto = _protocol(cfg, cfg.n_meas)
    table = RateTable.build(cfg.model, cfg.bath, horizon, dt=cfg.table_dt)
    free = evolve_free(state0, cfg.model, cfg.bath, horizon, proto, table=table)
    run.flags += [f"free: {f}" for f in free.flags]
    if cfg.wants("csv"):
        free.to_csv(run.path("trajectory_free.csv"))
        run.files.append(str(run.path("trajectory_free.csv")))
    series = [("free (exact)", free.times, free.rho_ee)]
    markov = markovian_population(cfg.rho_ee0, cfg.model, cfg.bath, free.times)
    series.append(("free (Markovian)", free.times, markov))
    summary = {"rho_b": thermal_population(cfg.bath), "free_final": float(free.rho_ee[-1]),
               "positivity_violation_free": free.worst_violation}
    short = free.times[free.times <= min(horizon, 5.0)]
    adiabatic = [cfg.rho_ee0 if t == 0 else
                 adiabatic_population(cfg.rho_ee0, cumulative_j(cfg.model, cfg.bath, t, cfg.spec),
                                      cfg.bath) for t in short]
    series.append(("adiabatic", short, adiabatic))
    markers = [False, False, False]
    if cfg.n_meas:
        meas = evolve_measured(state0, cfg.model, cfg.bath, proto, table=table)
        run.flags += [f"measured: {f}" for f in meas.flags]
        if cfg.wants("csv"):
            meas.to_csv(run.path("trajectory_measured.csv"))
            run.files.append(str(run.path("trajectory_measured.csv")))
        cj = cumulative_j(cfg.model, cfg.bath, cfg.tau, cfg.spec)
        if not cj.converged:
            run.flags.append("cumulative J not converged")
        env = measured_envelope(cfg.rho_ee0, cfg.tau, cj)
        tm = np.concatenate([[0.0], meas.measurement_times()])
        pm = np.concatenate([[cfg.rho_ee0], meas.measurement_populations()])
        dev = float(np.max(np.abs(env(tm) - pm)))
        run.csv("envelope.csv", ["t", "post_measurement_rho_ee", "envelope"],
                zip(tm, pm, env(tm)))
        series += [("measured (exact)", meas.times, meas.rho_ee), ("post-measurement", tm, pm),
                   ("envelope", tm, env(tm))]
        markers += [False, True, False]
        summary.update({"plateau_formula": env.steady, "effective_rate": env.effective_rate,
                        "measured_final": float(pm[-1]), "envelope_max_deviation": dev,
                        "positivity_violation_measured": meas.worst_violation})
    run.svg("evolve.svg", series, markers=markers, xlabel="omega_a t", ylabel="rho_ee",
            title="Excited-state population")
    run.json("evolve.json", summary)
    run.summary = summary


def _safe(fn, flags, label):
    try:
        return float(fn())
    except DomainError as exc:
        flags.append(f"{label}: {exc}")
        return None


def cmd_mfactor(run: Run) -> None:
    cfg = run.cfg
    m, b, spec = cfg.model, cfg.bath, cfg.spec
    exact = ordered_map(lambda t: m_factor_exact(m, b, float(t), spec), cfg.tau_grid, cfg.threads)
    rows, point_flags = [], []
    approx, smooth = [], []
    for r in exact:
        local: List[str] = []
        a = _safe(lambda: m_factor_approx(m, b, r.tau, spec), local, "approx")
        s = _safe(lambda: m_factor_smoothed(m, b, r.tau, spec), local, "smoothed")
        if not r.converged:
            local.append("exact: not converged")
            run.flags.append(f"mfactor: quadrature not converged at tau = {r.tau}")
        approx.append(a)
        smooth.append(s)
        point_flags.append(local)
        rows.append([r.tau, r.value, a, s, ";".join(local)])
    run.csv("mfactor.csv", ["tau", "m_exact", "m_approx", "m_smoothed", "flag"], rows)
    taus = [r.tau for r in exact]
    nan = lambda v: math.nan if v is None else v  # noqa: E731
    run.svg("mfactor.svg", [("exact", taus, [r.value for r in exact]),
                            ("approx", taus, [nan(v) for v in approx]),
                            ("smoothed", taus, [nan(v) for v in smooth])],
            xlabel="omega_a tau", ylabel="M(tau)", title="Measurement-modified factor")
    report = cooling_report(m, b, cfg.tau_grid, cfg.domain_tau, spec, cfg.threads)
    run.flags += [f"report: {f}" for f in report.flags]
    run.json("report.json", report.to_dict())
    summary = {"tau_min": report.tau_min, "m_min": report.m_min,
               "m_far": exact[-1].value, "tau_far": exact[-1].tau}
    tau_range = (float(cfg.tau_grid[0]), float(cfg.tau_grid[-1]))
    if cfg.beta_list:
        opts = ordered_map(lambda be: optimize_tau(m, BathParams(be, b.omega_a), tau_range, spec,
                                                   cfg.points_per_period), cfg.beta_list,
                           cfg.threads)
        run.csv("mmin_beta.csv", ["beta", "tau_min", "m_min"],
                [(be, o.tau_min, o.m_min) for be, o in zip(cfg.beta_list, opts)])
        run.svg("mmin_beta.svg", [("M_min", cfg.beta_list, [o.m_min for o in opts])],
                xlabel="beta omega_a", ylabel="M_min")
        summary["m_min_beta"] = [o.m_min for o in opts]
    if cfg.s_list:
        if not isinstance(m, SuperOhmic):
            raise ConfigError("grid.s_list requires a super_ohmic model")
        opts = ordered_map(lambda s: optimize_tau(replace(m, s=s), b, tau_range, spec,
                                                  cfg.points_per_period), cfg.s_list, cfg.threads)
        run.csv("mmin_s.csv", ["s", "tau_min", "m_min"],
                [(s, o.tau_min, o.m_min) for s, o in zip(cfg.s_list, opts)])
        summary["m_min_s"] = [o.m_min for o in opts]
    run.summary = summary


def cmd_cooldomain(run: Run) -> None:
    cfg = run.cfg
    b = cfg.bath
    domains = ordered_map(lambda t: cooling_domain(b, float(t)), cfg.tau_grid, cfg.threads)
    w2 = w2_estimate(b)
    rows = []
    for d in domains:
        cz = cr_zero_curve(d.tau, b)
        rows.append([d.tau, d.omega1, d.omega2, cz.omega, cz.flag or "", w2,
                     "empty" if d.empty else ("truncated" if d.truncated else "")])
    run.csv("cooldomain.csv", ["tau", "omega1", "omega2", "cr_zero", "cr_flag", "w2_estimate",
                               "domain_flag"], rows)
    taus = [d.tau for d in domains]
    nan = lambda v: math.nan if v is None else v  # noqa: E731
    run.svg("cooldomain.svg", [
        ("omega1", taus, [nan(d.omega1) for d in domains]),
        ("omega2", taus, [nan(d.omega2) for d in domains]),
        ("2 pi/tau - omega_a", taus, [r[3] if r[3] > 0 else math.nan for r in rows]),
        ("w2 estimate", taus, [w2] * len(taus))],
        xlabel="omega_a tau", ylabel="omega / omega_a", title="Cooling domain")
    run.summary = {"w2_estimate": w2, "empty_rows": sum(d.empty for d in domains)}


def cmd_optimize(run: Run) -> None:
    cfg = run.cfg
    m, b, spec = cfg.model, cfg.bath, cfg.spec
    tau_range = (float(cfg.tau_grid[0]), float(cfg.tau_grid[-1]))
    if cfg.sweep == "omega0":
        if not isinstance(m, ModifiedLorentzian):
            raise ConfigError("grid.sweep = omega0 requires a modified_lorentzian model")
        params = cfg.omega0_list
        job = lambda w0: optimize_tau(replace(m, omega0=w0), b, tau_range, spec,  # noqa: E731
                                      cfg.points_per_period)
        ref = [2.0 * math.pi * b.omega_a / (w0 + b.omega_a) for w0 in params]
    elif cfg.sweep == "s":
        if not isinstance(m, SuperOhmic):
            raise ConfigError("grid.sweep = s requires a super_ohmic model")
        params = cfg.s_list
        job = lambda s: optimize_tau(replace(m, s=s), b, tau_range, spec,  # noqa: E731
                                     cfg.points_per_period)
        ref = [None] * len(params)
    else:
        params = cfg.beta_list
        job = lambda be: optimize_tau(m, BathParams(be, b.omega_a), tau_range, spec,  # noqa: E731
                                      cfg.points_per_period)
        ref = [None] * len(params)
    if not params:
        raise ConfigError(f"grid.{cfg.sweep}_list is empty")
    opts = [job(p) for p in params] if cfg.threads == 1 else ordered_map(job, params, cfg.threads)
    rows = []
    for p, o, r in zip(params, opts, ref):
        flag = [] if o.cooling else ["no_cooling"]
        if not o.converged:
            flag.append("not_converged")
            run.flags.append(f"optimize: quadrature not converged at {cfg.sweep} = {p}")
        rows.append([p, o.tau_min, o.m_min, r, ";".join(flag)])
    run.csv("optimize.csv", [cfg.sweep, "tau_min", "m_min", "reference", "flag"], rows)
    series = [("tau_min", params, [o.tau_min for o in opts])]
    if cfg.sweep == "omega0":
        series.append(("2 pi/(omega0 + omega_a)", params, ref))
    run.svg("optimize.svg", series, markers=[True, False], xlabel=cfg.sweep,
            ylabel="omega_a tau_min", title="Optimal measurement interval")
    run.summary = {"tau_min": [o.tau_min for o in opts], "m_min": [o.m_min for o in opts]}


def cmd_classify(run: Run) -> None:
    cfg = run.cfg
    m, b, spec, tau = cfg.model, cfg.bath, cfg.spec, cfg.tau
    crit = cooling_criterion(m, b)
    mf = m_factor_exact(m, b, tau, spec)
    zeno = classify_zeno(m, b, tau, spec, cumulative=mf.cumulative)
    cond = zeno_cooling_conditions(m, b, tau, spec)
    if not mf.converged:
        run.flags.append("classify: quadrature not converged")
    if crit.one_sided:
        run.flags.append("classify: derivative at omega_a is one-sided")
    summary = {"tau": tau, "criterion_lhs": crit.lhs, "criterion_rhs": crit.rhs,
               "criterion_pass": crit.passed, "beta_max": crit.beta_max,
               "zeno_class": zeno.label, "zeno_ratio": zeno.ratio, "m_exact": mf.value,
               "m_sign": "cooling" if mf.value < 0 else "heating",
               "qaze_cooling_agree": (zeno.label == "QAZE") == (mf.value < 0),
               "coolc": cond}
    run.json("classify.json", summary)
    print(f"criterion: G0'/G0 = {crit.lhs:.6g} vs beta/2 = {crit.rhs:.6g} -> "
          f"{'pass' if crit.passed else 'fail'}"
          + (f" (beta_max = {crit.beta_max:.6g})" if crit.beta_max is not None else ""))
    print(f"zeno: {zeno.label} (J/tau/Gamma0 = {zeno.ratio:.6g})")
    print(f"M({tau:g}) = {mf.value:.6g} -> {summary['m_sign']}")
    print(f"QAZE and cooling agree: {summary['qaze_cooling_agree']}")
    run.summary = summary


COMMANDS = {"rates": cmd_rates, "evolve": cmd_evolve, "mfactor": cmd_mfactor,
            "cooldomain": cmd_cooldomain, "optimize": cmd_optimize, "classify": cmd_classify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zenocool",
                                description="Measurement-induced cooling of a qubit in a "
                                            "structured finite-temperature bath.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", metavar="PATH", help="sectioned key = value config file")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    p.add_argument("--set", metavar="SECTION.KEY=VALUE", action="append", default=[],
                   dest="overrides", help="override one config value; repeatable, later wins")
    p.add_argument("--threads", type=int, metavar="N",
                   help="worker count (default: output.threads, then ZENOCOOL_THREADS, then 1)")
    p.add_argument("--format", metavar="LIST", dest="formats",
                   help="comma-separated subset of csv,json,svg")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides, args.out, args.threads, args.formats)
    except ConfigError as exc:
        print(f"zenocool: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run = Run(cfg, args.command)
    try:
        COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"zenocool: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        run.flags.append(f"{args.command}: {exc}")
    code = EXIT_FLAGGED if run.flags else EXIT_OK
    write_json(cfg.out_dir / "diagnostics.json",
               {"command": args.command, "exit_code": code, "flags": run.flags,
                "files": run.files, "summary": run.summary, "rel_tol": cfg.spec.rel_tol,
                "config": cfg.raw})
    for f in run.flags:
        print(f"zenocool: flag: {f}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
