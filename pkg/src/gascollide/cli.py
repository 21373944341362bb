"""Command-line interface: config ingestion, subcommand dispatch, and CSV
emission for figure reproduction and the consistency-check suite.

    gas-collide integral  --config cfg --out out.csv
    gas-collide ergotropy --config cfg --out out.csv
    gas-collide rates     --config cfg --out out.csv [--table amplitudes.csv]
    gas-collide verify    --config cfg

Every CSV has a header row, '.' decimal separator, line-feed terminators,
and 17 significant digits; outputs are bit-identical across runs for a
fixed config. A PNG figure is rendered next to each CSV unless --no-plot
is given. Exit codes: 0 success, 2 invalid config, 3 numeric failure,
4 check failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import (ScenarioConfig, build_scenario, initial_density_matrix, load_config,
                     parse_grid, smoothed_ground)
from .dynamics import collision_action, evolve_lindblad
from .errors import ConfigError, NumericFailure
from .qmath import gibbs_state
from .rates import QuadratureSpec, check_local_detailed_balance, integral_I, rate_matrix
from .scattering import AmplitudeModel, check_microreversibility
from .thermo import thermo_samples

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CHECK = 4

VERIFY_MICROREV_SAMPLES = 2000
VERIFY_MICROREV_TOL = 1e-12
GIBBS_STATIONARITY_REL_TOL = 1e-8


@dataclass
class RunReport:
    """Outcome of one subcommand invocation."""

    command: str
    config: dict
    outputs: list[str] = field(default_factory=list)
    checks: dict[str, bool] = field(default_factory=dict)
    messages: list[str] = field(default_factory=list)
    duration_s: float = 0.0

    @property
    def all_passed(self) -> bool:
        return all(self.checks.values())

    def print(self, stream=sys.stdout) -> None:
        print(f"[{self.command}] duration {self.duration_s:.2f}s", file=stream)
        for key, val in sorted(self.config.items()):
            print(f"  config {key} = {val}", file=stream)
        for path in self.outputs:
            print(f"  wrote {path}", file=stream)
        for name, ok in self.checks.items():
            print(f"  check {name}: {'PASS' if ok else 'FAIL'}", file=stream)
        for msg in self.messages:
            print(f"  note: {msg}", file=stream)


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc


def _png_path(out_path) -> Path:
    return Path(out_path).with_suffix(".png")


def run_integral(cfg: ScenarioConfig, out_path, plot: bool = True) -> RunReport:
    """Tabulate I(alpha, s) over the configured grids."""
    t0 = time.monotonic()
    alphas = parse_grid(cfg.alpha_grid)
    s_values = parse_grid(cfg.s_grid)
    if np.any(alphas <= 0):
        raise ConfigError("alpha grid must be strictly positive")
    rows = []
    values = []
    for a in alphas:
        for s in s_values:
            val = integral_I(float(a), float(s))
            values.append(val)
            rows.append((a, s, val))
    write_csv(out_path, ["alpha", "s", "I"], rows)
    report = RunReport("integral", cfg.to_dict(), outputs=[str(out_path)])
    if plot:
        from .plots import plot_integral_grid

        png = _png_path(out_path)
        plot_integral_grid(alphas, s_values, values, png)
        report.outputs.append(str(png))
    report.duration_s = time.monotonic() - t0
    return report


def _ergotropy_columns(scenario, trajectory):
    samples = thermo_samples(trajectory, scenario.beta_eff)
    gam = scenario.gamma_tilde
    w_s = scenario.env.hbar * scenario.omega_S
    return {
        "t_gamma": np.array([s.t * gam for s in samples]),
        "ergotropy_over_hbar_omegaS": np.array([s.ergotropy / w_s for s in samples]),
        "E_S": np.array([s.E_S for s in samples]),
        "S": np.array([s.S for s in samples]),
        "Q_dot": np.array([s.Q_dot for s in samples]),
        "clausius_residual": np.array([s.clausius_residual for s in samples]),
    }


def run_ergotropy(cfg: ScenarioConfig, out_path, plot: bool = True) -> RunReport:
    """Evolve the spin master equation and tabulate the thermodynamic series.

    The Clausius residual column is taken against the effective inverse
    temperature of the scenario (the gas beta at equilibrium); it is NaN on
    samples whose state is too close to singular for a trusted ln(rho).
    """
    t0 = time.monotonic()
    scenario = build_scenario(cfg)
    rho0 = initial_density_matrix(scenario)
    t_grid = np.linspace(0.0, cfg.t_max / scenario.gamma_tilde, cfg.n_samples)
    trajectory = evolve_lindblad(scenario.h_S, scenario.channels, rho0, t_grid)
    cols = _ergotropy_columns(scenario, trajectory)
    header = list(cols.keys())
    rows = zip(*(cols[k] for k in header))
    write_csv(out_path, header, rows)
    report = RunReport("ergotropy", cfg.to_dict(), outputs=[str(out_path)])
    report.messages.append(
        f"T_eff = {scenario.T_eff:.6g}, D - A = {cfg.D - cfg.A:.6g} "
        f"(ergotropy buildup requires D > A)"
    )
    if np.any(~np.isfinite(cols["clausius_residual"])):
        report.messages.append("near-singular samples flagged NaN in clausius_residual")
    if plot:
        from .plots import plot_ergotropy_series

        png = _png_path(out_path)
        plot_ergotropy_series(cols["t_gamma"], cols, png,
                              title=f"J={cfg.J:g}, D={cfg.D:g}, A={cfg.A:g}")
        report.outputs.append(str(png))
    report.duration_s = time.monotonic() - t0
    return report


def _spin_analytic_rate(scenario, i: int, j: int) -> float:
    if i == j + 1:
        return scenario.rates.gamma_plus * abs(scenario.jplus.entries[i, j]) ** 2
    if i == j - 1:
        return scenario.rates.gamma_minus * abs(scenario.jminus.entries[i, j]) ** 2
    return 0.0


def run_rates(cfg: ScenarioConfig, out_path, table_path=None, plot: bool = True,
              quad: QuadratureSpec | None = None) -> RunReport:
    """Quadrature rate matrix; for the built-in spin model the analytic
    ladder rates and their relative deviation are emitted alongside."""
    t0 = time.monotonic()
    scenario = build_scenario(cfg)
    quad = quad or QuadratureSpec()
    if table_path is None:
        model = scenario.model
        spin_case = True
    else:
        model = AmplitudeModel.from_table(table_path, scenario.levels, scenario.env)
        spin_case = False
    rmat = rate_matrix(scenario.levels, model, scenario.env, quad)
    d = rmat.dim
    rows = []
    worst_dev = 0.0
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            if spin_case:
                ana = _spin_analytic_rate(scenario, i, j)
                denom = max(abs(ana), 1e-300)
                dev = abs(rmat.R[i, j] - ana) / denom if (ana or rmat.R[i, j]) else 0.0
                worst_dev = max(worst_dev, dev)
                rows.append((i, j, rmat.R[i, j], ana, dev))
            else:
                rows.append((i, j, rmat.R[i, j]))
    header = (["i", "j", "rate", "analytic_rate", "rel_deviation"]
              if spin_case else ["i", "j", "rate"])
    write_csv(out_path, header, rows)
    report = RunReport("rates", cfg.to_dict(), outputs=[str(out_path)])
    if spin_case:
        report.messages.append(f"max quadrature-vs-analytic relative deviation {worst_dev:.3e}")
    if plot:
        from .plots import plot_rate_matrix

        png = _png_path(out_path)
        plot_rate_matrix(rmat.R, png)
        report.outputs.append(str(png))
    report.duration_s = time.monotonic() - t0
    return report


def run_verify(cfg: ScenarioConfig, quad: QuadratureSpec | None = None) -> RunReport:
    """Consistency-theorem suite against the equilibrium expectation
    beta = 1/kB T_M: micro-reversibility, local detailed balance, Gibbs
    stationarity, and the dynamical Clausius inequality.

    On a two-temperature gas the balance checks are expected to fail;
    every sub-check outcome is still reported.
    """
    t0 = time.monotonic()
    scenario = build_scenario(cfg)
    quad = quad or QuadratureSpec()
    beta = scenario.beta_gas
    report = RunReport("verify", cfg.to_dict())
    if not scenario.is_equilibrium():
        report.messages.append(
            f"two-temperature gas (T_A={scenario.env.T_A:.6g}, T_M={scenario.env.T_M:.6g}): "
            f"balance checks are evaluated against beta = 1/kB T_M"
        )

    micro = check_microreversibility(scenario.model, VERIFY_MICROREV_SAMPLES,
                                     VERIFY_MICROREV_TOL)
    report.checks["microreversibility"] = micro.passed
    report.messages.append(f"microreversibility max violation {micro.max_violation:.3e} "
                           f"on {micro.n_evaluated} samples")

    rmat = rate_matrix(scenario.levels, scenario.model, scenario.env, quad)
    balance = check_local_detailed_balance(rmat, scenario.levels, beta)
    report.checks["local_detailed_balance"] = balance.passed
    report.messages.append(f"detailed balance max log violation {balance.max_log_violation:.3e} "
                           f"(tol {balance.tol:.1e})")

    gibbs = gibbs_state(scenario.h_S, beta)
    stat_norm = float(np.linalg.norm(collision_action(scenario.channels, gibbs)))
    stat_tol = GIBBS_STATIONARITY_REL_TOL * scenario.gamma_tilde
    report.checks["gibbs_stationarity"] = stat_norm <= stat_tol
    report.messages.append(f"||C gibbs||_F = {stat_norm:.3e} (tol {stat_tol:.1e})")

    rho0 = smoothed_ground(scenario.levels.dim)
    t_grid = np.linspace(0.0, cfg.t_max / scenario.gamma_tilde, cfg.n_samples)
    trajectory = evolve_lindblad(scenario.h_S, scenario.channels, rho0, t_grid)
    from .thermo import entropy_production_check

    clausius = entropy_production_check(trajectory, beta)
    report.checks["clausius"] = clausius.passed
    report.messages.append(f"clausius min residual {clausius.min_residual:.3e} "
                           f"({clausius.n_skipped} samples skipped)")

    report.duration_s = time.monotonic() - t0
    return report


def _parse_sweep(spec: str) -> tuple[str, list[str]]:
    if "=" not in spec:
        raise ConfigError(f"--sweep expects key=v1,v2,..., got {spec!r}")
    key, values = spec.split("=", 1)
    vals = [v.strip() for v in values.split(",") if v.strip()]
    if not key.strip() or not vals:
        raise ConfigError(f"--sweep expects key=v1,v2,..., got {spec!r}")
    return key.strip(), vals


def _sweep_out_path(out_path, key: str, value: str) -> Path:
    p = Path(out_path)
    return p.with_name(f"{p.stem}_{key}{value}{p.suffix}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gas-collide",
        description="Collisional master equation for a multilevel system in a "
                    "dilute structured gas: figure-reproduction tables and "
                    "thermodynamic consistency checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", required=True, help="flat key=value config file")
        if needs_out:
            p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--sweep", default=None, metavar="KEY=V1,V2,...",
                       help="repeat the run over config overrides")
        p.add_argument("--no-plot", action="store_true",
                       help="skip rendering the companion PNG figure")

    common(sub.add_parser("integral", help="tabulate the parameter integral I(alpha,s)"))
    common(sub.add_parser("ergotropy", help="evolve the spin model and tabulate thermodynamics"))
    p_rates = sub.add_parser("rates", help="quadrature rate matrix (with analytic comparison)")
    common(p_rates)
    p_rates.add_argument("--table", default=None,
                         help="amplitude table CSV replacing the Born-Gaussian model")
    common(sub.add_parser("verify", help="run the thermodynamic consistency checks"),
           needs_out=False)
    return parser


def _dispatch(args, cfg: ScenarioConfig) -> RunReport:
    plot = not args.no_plot
    if args.command == "integral":
        return run_integral(cfg, args.out, plot=plot)
    if args.command == "ergotropy":
        return run_ergotropy(cfg, args.out, plot=plot)
    if args.command == "rates":
        return run_rates(cfg, args.out, table_path=args.table, plot=plot)
    if args.command == "verify":
        return run_verify(cfg)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.sweep is not None:
            key, values = _parse_sweep(args.sweep)
            reports = []
            for value in values:
                cfg = load_config(args.config, overrides={key: value})
                run_args = argparse.Namespace(**vars(args))
                if getattr(args, "out", None) is not None:
                    run_args.out = _sweep_out_path(args.out, key, value)
                reports.append(_dispatch(run_args, cfg))
            for rep in reports:
                rep.print()
            return EXIT_OK if all(r.all_passed for r in reports) else EXIT_CHECK
        cfg = load_config(args.config)
        report = _dispatch(args, cfg)
        report.print()
        return EXIT_OK if report.all_passed else EXIT_CHECK
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
