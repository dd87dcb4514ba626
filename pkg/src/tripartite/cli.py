"""Command-line front end.

Every subcommand reads a flat ``key=value`` configuration (optionally from
``--config`` and ``--set`` overrides), writes its files into ``--out`` and
prints a short report, or a JSON document with ``--json``.  All outputs are
deterministic: identical configurations give byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import bath, density, effective, oracle, phase_space, redfield
from .bath import BathSpec, Thermostat
from .errors import ContractError, NumericalError, ScaleSeparationError

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO, EXIT_GUARD = 0, 2, 3, 4, 5


class ConfigError(ContractError):
    """Malformed or out-of-range configuration."""


@dataclass(frozen=True)
class RunConfig:
    thermostat: str = "LB"
    beta_hw0: float = 1.0
    xi_c: float = 2.0
    nu_bar: float = 0.1
    mu_bar_scale: float = 0.01
    ohmic_slope: float = 1.0
    coefficients: str = "limit"
    mu_schedule: tuple = (0.08, 0.04, 0.02)
    grid_points: int = phase_space.DEFAULT_POINTS
    grid_half_width: float = 0.0
    times: tuple = (200.0, 300.0, 400.0, 500.0, 1000.0)
    init_state: str = "fock1"
    r0: tuple = (1.0, 0.0)
    kernel_samples: int = 50
    kernel_t_min: float = 0.01
    kernel_t_max: float = 3.0
    n_max: int = 0
    oracle_nu_bar: float = 0.005
    oracle_mu_bar_scale: float = 0.04
    oracle_modes: int = oracle.DEFAULT_N_MODES
    oracle_dt: float = oracle.DEFAULT_DT
    oracle_t_factors: tuple = oracle.DEFAULT_T_FACTORS
    out: str = "out"

    def spec(self) -> BathSpec:
        return BathSpec(thermostat=self.thermostat, beta_hw0=self.beta_hw0, xi_c=self.xi_c,
                        nu_bar=self.nu_bar, mu_bar_scale=self.mu_bar_scale,
                        ohmic_slope=self.ohmic_slope)

    def as_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v, tuple) else v)
                for f in fields(self) for v in [getattr(self, f.name)]}


def _float_list(text: str) -> tuple:
    return tuple(float(p) for p in text.split(",") if p.strip())


_PARSERS = {
    "thermostat": lambda s: Thermostat.parse(s).value,
    "beta_hw0": float, "xi_c": float, "nu_bar": float, "mu_bar_scale": float,
    "ohmic_slope": float, "coefficients": lambda s: s.strip().lower(),
    "mu_schedule": _float_list, "grid_points": int, "grid_half_width": float,
    "times": _float_list, "init_state": lambda s: s.strip().lower(), "r0": _float_list,
    "kernel_samples": int, "kernel_t_min": float, "kernel_t_max": float, "n_max": int,
    "oracle_nu_bar": float, "oracle_mu_bar_scale": float, "oracle_modes": int,
    "oracle_dt": float, "oracle_t_factors": _float_list, "out": str.strip,
}


def _validate(cfg: RunConfig) -> RunConfig:
    def need(cond: bool, message: str) -> None:
        if not cond:
            raise ConfigError(message)

    for name in ("beta_hw0", "xi_c", "ohmic_slope", "oracle_dt", "kernel_t_max"):
        value = getattr(cfg, name)
        need(math.isfinite(value) and value > 0, f"{name} must be positive")
    for name in ("nu_bar", "mu_bar_scale", "oracle_nu_bar", "oracle_mu_bar_scale",
                 "grid_half_width", "kernel_t_min"):
        value = getattr(cfg, name)
        need(math.isfinite(value) and value >= 0, f"{name} must be non-negative")
    need(cfg.kernel_t_min < cfg.kernel_t_max, "kernel_t_min must be below kernel_t_max")
    need(cfg.coefficients in ("limit", "finite"), "coefficients must be 'limit' or 'finite'")
    need(cfg.init_state in ("fock1", "thermal", "coherent"),
         "init_state must be fock1, thermal or coherent")
    need(len(cfg.r0) == 2, "r0 needs two comma-separated values")
    need(len(cfg.times) > 0 and all(t > 0 and math.isfinite(t) for t in cfg.times),
         "times must be positive")
    need(len(cfg.mu_schedule) >= 2 and all(m > 0 for m in cfg.mu_schedule), "mu_schedule needs >= 2 positive values")
    need(all(b < a for a, b in zip(cfg.mu_schedule, cfg.mu_schedule[1:])),
         "mu_schedule must be strictly decreasing")
    need(len(cfg.oracle_t_factors) > 0 and all(k > 0 for k in cfg.oracle_t_factors),
         "oracle_t_factors must be positive")
    need(cfg.grid_points >= 3, "grid_points must be at least 3")
    need(cfg.kernel_samples >= 2, "kernel_samples must be at least 2")
    need(cfg.n_max >= 0, "n_max must be non-negative (0 selects it automatically)")
    need(cfg.oracle_modes >= 8, "oracle_modes must be at least 8")
    need(bool(cfg.out), "out must name a directory")
    return cfg


def apply_settings(cfg: RunConfig, pairs) -> RunConfig:
    """Apply ``(key, text)`` pairs; unknown keys and unparsable values are errors."""
    changes = {}
    for key, text in pairs:
        key = key.strip()
        if key not in _PARSERS:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            changes[key] = _PARSERS[key](text)
        except (ValueError, ContractError) as exc:
            raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from None
    return replace(cfg, **changes)


def parse_config_text(text: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = line.split("=", 1)
        pairs.append((key, value))
    return pairs


def load_config(path=None, overrides=()) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        cfg = apply_settings(cfg, parse_config_text(text))
    pairs = []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        pairs.append(tuple(item.split("=", 1)))
    return _validate(apply_settings(cfg, pairs))


# --------------------------------------------------------------------------
# output helpers

def sanitize(value):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return sanitize(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, np.integer):
        return int(value)
    return value


def dump_json(payload) -> str:
    return json.dumps(sanitize(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _time_tag(t: float) -> str:
    return f"{t:g}".replace("+", "")


def _build_model(cfg: RunConfig, spec: BathSpec | None = None) -> effective.EffectiveModel:
    spec = cfg.spec() if spec is None else spec
    if cfg.coefficients == "finite":
        return effective.finite_mu_coefficients(spec, cfg.mu_schedule)
    return effective.limit_coefficients(spec)


def _emit(args, cfg: RunConfig, payload: dict, text: str, filename: str) -> None:
    payload = {"schema_version": SCHEMA_VERSION, "config": cfg.as_dict(), **payload}
    document = dump_json(payload)
    (_out_dir(cfg) / filename).write_text(document)
    sys.stdout.write(document if args.json else text.rstrip("\n") + "\n")


# --------------------------------------------------------------------------
# subcommands

def cmd_coeffs(args, cfg: RunConfig) -> int:
    spec = cfg.spec()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        limit = effective.limit_coefficients(spec)
        finite = effective.finite_mu_coefficients(spec, cfg.mu_schedule)
    messages = sorted({str(w.message) for w in caught})
    for message in messages:
        print(f"warning: {message}", file=sys.stderr)
    coeffs = bath.coefficient_set(spec)
    payload = {"limit": limit.summary(), "finite_mu": finite.summary(),
               "N0": limit.N0, "R_B": coeffs.R_B, "warnings": messages}
    lines = [f"thermostat {spec.thermostat.value}  beta_hw0 {spec.beta_hw0:g}  "
             f"xi_c {spec.xi_c:g}  nu_bar {spec.nu_bar:g}",
             f"{'':<6}{'limit':>22}{'finite-mu':>22}"]
    for key in ("f1", "f2", "d1", "d2", "C", "tau_S"):
        lines.append(f"{key:<6}{limit.summary()[key]:>22.12g}{finite.summary()[key]:>22.12g}")
    lines.append(f"N0    {limit.N0:.12g}")
    lines.append(f"R_B   {coeffs.R_B:.12g}")
    if spec.thermostat is Thermostat.RF:
        payload["P0"] = coeffs.P0
        payload["J0"] = coeffs.J0
        lines.append(f"P0    {coeffs.P0:.12g}")
    _emit(args, cfg, payload, "\n".join(lines), "coeffs.json")
    return EXIT_OK


def _initial_state(cfg: RunConfig):
    if cfg.init_state == "fock1":
        return phase_space.FockOne()
    if cfg.init_state == "thermal":
        return phase_space.Thermal()
    return phase_space.Coherent(r0=tuple(cfg.r0))


def cmd_field(args, cfg: RunConfig) -> int:
    model = _build_model(cfg)
    if cfg.grid_half_width > 0:
        grid = phase_space.Grid.square(cfg.grid_half_width, cfg.grid_points)
    else:
        grid = phase_space.Grid.default_for(model, cfg.grid_points)
    init = _initial_state(cfg)
    out = _out_dir(cfg)
    rows = []
    for t in cfg.times:
        if isinstance(init, phase_space.FockOne):
            fld = phase_space.field_fock1(model, t, grid)
        else:
            fld = phase_space.field_gaussian(model, t, init, grid)
        tag = _time_tag(t)
        phase_space.write_field_csv(fld, out / f"field_t{tag}.csv")
        if args.slice is not None:
            x, p = phase_space.field_slice(fld, args.slice)
            phase_space.write_slice_csv(x, p, out / f"slice_t{tag}.csv")
        min_p, mass, _ = phase_space.negativity_metrics(fld)
        rows.append({"t": float(t), "min_p": min_p, "negative_mass": mass,
                     "norm": fld.normalization()})
    lines = ["t,min_p,negative_mass,norm"]
    lines += [",".join(phase_space.fmt(r[k]) for k in ("t", "min_p", "negative_mass", "norm"))
              for r in rows]
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    payload = {"init_state": init.label, "grid": grid.describe(), "model": model.summary(),
               "summary": rows}
    _emit(args, cfg, payload, "\n".join(lines), "field.json")
    return EXIT_OK


def cmd_kernel(args, cfg: RunConfig) -> int:
    model = _build_model(cfg)
    tau = effective.relaxation_time(model)
    if not math.isfinite(tau):
        raise NumericalError("the system does not relax (tau_S is infinite); no kernel time series")
    times = np.linspace(cfg.kernel_t_min * tau, cfg.kernel_t_max * tau, cfg.kernel_samples)
    fmt = phase_space.fmt
    lines = ["t,a_xx,a_xy,a_yy,cov_xx,cov_xy,cov_yy"]
    for t in times:
        if t <= 0:
            continue
        k = effective.kernel_at(model, float(t))
        if k.is_delta:
            continue
        vals = [t, k.A[0, 0], k.A[0, 1], k.A[1, 1], k.A_inv[0, 0], k.A_inv[0, 1], k.A_inv[1, 1]]
        lines.append(",".join(fmt(v) for v in vals))
    out = _out_dir(cfg)
    (out / "kernel.csv").write_text("\n".join(lines) + "\n")
    A_inf = effective.steady_kernel(model)
    payload = {"model": model.summary(), "tau_S": tau, "A_inf": A_inf,
               "samples": len(lines) - 1}
    text = (f"tau_S {tau:.12g}\nA(inf) = [[{A_inf[0, 0]:.12g}, {A_inf[0, 1]:.12g}], "
            f"[{A_inf[1, 0]:.12g}, {A_inf[1, 1]:.12g}]]\n"
            f"wrote {len(lines) - 1} samples to {out / 'kernel.csv'}")
    _emit(args, cfg, payload, text, "kernel.json")
    return EXIT_OK


def cmd_steady(args, cfg: RunConfig) -> int:
    model = _build_model(cfg)
    A = effective.steady_kernel(model)
    A1 = effective.steady_first_order(model)
    residual = effective.lyapunov_residual(model.F_eff, model.D_eff, A)
    n_max = cfg.n_max or density.suggested_n_max(cfg.beta_hw0)
    rho0 = density.rho_zero(cfg.beta_hw0, n_max)
    rho1 = density.rho_one(model, n_max)
    out = _out_dir(cfg)
    density.write_density_json(rho0, out / "rho0.json")
    density.write_density_json(rho1, out / "rho1.json")
    populations = np.diag(rho0.elements + rho1.elements)
    payload = {"model": model.summary(), "A_inf": A, "A_inf_first_order": A1,
               "lyapunov_residual": residual, "n_max": n_max,
               "trace_rho0": rho0.trace(), "trace_rho1": rho1.trace(),
               "populations": populations[:6]}
    lines = [f"A(inf) = [[{A[0, 0]:.12g}, {A[0, 1]:.12g}], [{A[1, 0]:.12g}, {A[1, 1]:.12g}]]",
             f"first order diag = ({A1[0, 0]:.12g}, {A1[1, 1]:.12g})",
             f"Lyapunov residual {residual:.3e}",
             f"n_max {n_max}  Tr rho0 - 1 = {rho0.trace() - 1:.3e}  Tr rho1 = {rho1.trace():.3e}"]
    lines += [f"<{n}|rho|{n}> = {p:.12g}" for n, p in enumerate(populations[:6])]
    _emit(args, cfg, payload, "\n".join(lines), "steady.json")
    return EXIT_OK


def cmd_oracle(args, cfg: RunConfig) -> int:
    spec = cfg.spec().replace(nu_bar=cfg.oracle_nu_bar, mu_bar_scale=cfg.oracle_mu_bar_scale)
    report = oracle.run_oracle(spec, n_modes=cfg.oracle_modes, mu_schedule=cfg.mu_schedule,
                               t_factors=cfg.oracle_t_factors, r0=tuple(cfg.r0),
                               dt=cfg.oracle_dt).as_dict()
    lines = [f"modes {report['n_modes']}  nu_bar {report['nu_bar']:g}  "
             f"mu_bar_scale {report['mu_bar_scale']:g}  dt {report['dt']:g}",
             f"kappa {report['kappa']:.4g}  sigma {report['sigma']:.4g}  tau_S {report['tau_S']:.6g}"]
    for t, c, m in zip(report["times"], report["covariance_deviation"], report["mean_deviation"]):
        lines.append(f"t {t:12.6g}  covariance dev {c:.3e}  mean dev {m:.3e}")
    lines.append(f"max deviation {report['max_deviation']:.3e}")
    lines.append(f"mode rate deviation {report['mode_rate_deviation']:.3e}")
    lines.append(f"extrapolated f1 {report['f1_extrapolated']:.8g}  expected {report['f1_expected']:.8g}"
                 f"  deviation {report['f1_deviation']:.3e}")
    report.pop("schema_version")
    _emit(args, cfg, report, "\n".join(lines), "oracle.json")
    return EXIT_OK


def cmd_compare_rf(args, cfg: RunConfig) -> int:
    spec = cfg.spec()
    model = effective.limit_coefficients(spec)
    rf = redfield.redfield_coefficients(spec)
    report = redfield.compare(model, rf)
    report.pop("schema_version")
    _emit(args, cfg, report, redfield.format_report(report), "compare_rf.json")
    return EXIT_OK


COMMANDS = {
    "coeffs": cmd_coeffs, "field": cmd_field, "kernel": cmd_kernel,
    "steady": cmd_steady, "oracle": cmd_oracle, "compare-rf": cmd_compare_rf,
}


def _slice_arg(text: str) -> float:
    key, _, value = text.partition("=")
    if key.strip() != "y" or not value:
        raise argparse.ArgumentTypeError("expected y=VALUE")
    return float(value)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("--json", action="store_true", help="print the JSON report")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--thermostat", help="LB or RF")
    common.add_argument("--xi-c", type=float, help="bath cutoff in units of the system frequency")
    parser = argparse.ArgumentParser(prog="tripartite", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "field":
            p.add_argument("--slice", type=_slice_arg, metavar="y=VALUE",
                           help="also write the horizontal slice at this y")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = list(args.set)
        if args.out is not None:
            overrides.append(f"out={args.out}")
        if args.thermostat is not None:
            overrides.append(f"thermostat={args.thermostat}")
        if args.xi_c is not None:
            overrides.append(f"xi_c={args.xi_c!r}")
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](args, cfg)
    except ScaleSeparationError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ContractError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
