"""Command-line surface: batch studies emitting CSV + JSON + PNG artifacts.

Every command resolves its configuration (file, catalog set, overrides),
runs the corresponding study and writes, into the output directory, the
data CSV, a JSON metadata sidecar with the resolved-parameter hash and
wall time, the resolved config snapshot and a rendered figure.  Exit codes:
0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import catalog as _catalog
from . import plots, reports
from .config import COMMANDS, ConfigError, RunConfig, apply_overrides, \
    build_run_config, read_config_file
from .params import ParameterError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zeropi",
        description="0-pi qubit simulation studies (spectra, gates, cooling)")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--set", dest="catalog_set",
                        help="named parameter set from the built-in catalog")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", default="zeropi-out",
                        help="output directory (created if missing)")
    parser.add_argument("--override", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help="override a resolved config value (repeatable)")
    return parser


def resolve_config(args) -> RunConfig:
    sections: dict = {}
    if args.catalog_set:
        try:
            sections = _catalog.catalog_sections(args.catalog_set)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    if args.config:
        file_sections = read_config_file(args.config)
        for name, values in file_sections.items():
            sections.setdefault(name, {}).update(values)
    if not sections:
        raise ConfigError("provide --config PATH and/or --set NAME")
    sections = apply_overrides(sections, args.override)
    # command sections other than the requested one are catalog baggage
    for name in list(sections):
        if name in COMMANDS and name != args.command:
            del sections[name]
    return build_run_config(args.command, sections, output_dir=args.out,
                            workers=args.workers)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run_config = resolve_config(args)
    except (ConfigError, ParameterError) as exc:
        _write_error(args.out, "config", exc)
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    handler = _HANDLERS[run_config.command]
    started = time.time()
    try:
        handler(run_config)
    except (ConfigError, ParameterError) as exc:
        _write_error(args.out, "config", exc)
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        _write_error(args.out, "numerical", exc)
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"{run_config.command}: outputs in {run_config.output_dir} "
          f"({time.time() - started:.1f} s)")
    return EXIT_OK


def _write_error(output_dir: str, kind: str, exc: Exception) -> None:
    try:
        os.makedirs(output_dir, exist_ok=True)
        with open(os.path.join(output_dir, "error.json"), "w") as handle:
            json.dump({"kind": kind, "type": type(exc).__name__,
                       "message": str(exc)}, handle, indent=2)
    except OSError:
        pass


def _emit(run_config: RunConfig, stem: str, rows: list[dict],
          extra_metadata: dict, started: float) -> dict:
    metadata = {
        "command": run_config.command,
        "workers": run_config.workers,
        "wall_time_s": time.time() - started,
        **extra_metadata,
    }
    return reports.write_outputs(run_config.output_dir, stem, rows,
                                 run_config.resolved_text(), metadata)


# -- command handlers ---------------------------------------------------------

def _axis_grid(options: dict):
    axis = options.get("axis")
    if not axis:
        return None, None
    start, stop = float(options["start"]), float(options["stop"])
    num = int(options.get("num", 9))
    if options.get("scale", "linear") == "log":
        grid = np.geomspace(start, stop, num)
    else:
        grid = np.linspace(start, stop, num)
    return axis, grid


def run_spectrum(run_config: RunConfig) -> None:
    from .spectral import sweep, sweep_point

    started = time.time()
    options = run_config.options
    k = int(options.get("k", 12))
    modes = tuple(options.get("modes", ("theta", "phi")))
    axis, grid = _axis_grid(options)
    if axis is None:
        rows = [sweep_point(run_config.circuit, run_config.basis, modes, k)]
    else:
        rows = sweep(run_config.circuit, axis, grid, run_config.basis,
                     modes=modes, k=k, workers=run_config.workers)
    paths = _emit(run_config, "spectrum", rows,
                  {"k": k, "modes": list(modes), "axis": axis}, started)
    plots.render_spectrum(rows, os.path.join(run_config.output_dir,
                                             "spectrum.png"), axis)


def run_bo_fit(run_config: RunConfig) -> None:
    from .effective1d import fit_coefficients

    started = time.time()
    options = run_config.options
    fit = fit_coefficients(run_config.circuit,
                           theta_points=int(options.get("theta_points", 81)),
                           n_fock=options.get("n_fock"))
    rows = []
    for i, phi_ext in enumerate(fit.phi_ext_grid):
        for j, theta in enumerate(fit.theta_grid):
            rows.append({"phi_ext": float(phi_ext), "theta": float(theta),
                         "E_0": float(fit.curves[i, j])})
    meta = {"E_alpha": fit.E_alpha, "E_beta": fit.E_beta,
            "E_gamma": fit.E_gamma, "residual": fit.residual,
            "diagnostic_orders": fit.diagnostic_orders}
    _emit(run_config, "bo_fit", rows, meta, started)
    plots.render_bo_fit(fit, os.path.join(run_config.output_dir, "bo_fit.png"))


def run_dispersive(run_config: RunConfig) -> None:
    from .dispersive import qubit_levels, straddling_scan

    started = time.time()
    options = run_config.options
    m_levels = int(options.get("m_levels", 30))
    ev_rms = float(options.get("ev_rms", 3e-3))
    ratio = options.get("cg_over_cmu")
    n_bar = float(options.get("n_bar", 0.0))
    grid = np.linspace(float(options.get("omega_r_start", 2e-3)),
                       float(options.get("omega_r_stop", 0.105)),
                       int(options.get("num", 200)))
    which = options.get("mode", "both")
    modes = ("theta", "phi") if which == "both" else (which,)
    spectrum, ops = qubit_levels(run_config.circuit, run_config.basis, m_levels)
    rows_by_mode = {}
    for mode in modes:
        rows_by_mode[mode] = straddling_scan(
            run_config.circuit, mode, grid, ev_rms, run_config.basis,
            M=m_levels, cg_over_cmu=ratio, n_bar=n_bar,
            spectrum=spectrum, ops=ops)
    rows = []
    for idx, omega_r in enumerate(grid):
        row = {"omega_r": float(omega_r)}
        for mode in modes:
            src = rows_by_mode[mode][idx]
            row[f"chi_{mode}"] = src[f"chi_{mode}"]
            row[f"valid_{mode}"] = src["all_valid"]
        rows.append(row)
    _emit(run_config, "dispersive", rows,
          {"m_levels": m_levels, "ev_rms": ev_rms, "cg_over_cmu": ratio,
           "n_bar": n_bar}, started)
    plots.render_dispersive(rows_by_mode,
                            os.path.join(run_config.output_dir, "dispersive.png"),
                            run_config.circuit.omega_p_over_2pi)


def run_gate_optimize(run_config: RunConfig) -> None:
    from .gate import (DEFAULT_HYPERBOLA_MARGIN, DEFAULT_RATE_RANGE,
                       _square_distance_scan, optimize_pulse,
                       prepare_gate_system)

    started = time.time()
    options = run_config.options
    m_levels = int(options.get("m_levels", 30))
    system = prepare_gate_system(run_config.circuit, run_config.basis, m_levels)
    r_lo = float(options.get("rate_min", DEFAULT_RATE_RANGE[0]))
    r_hi = float(options.get("rate_max", DEFAULT_RATE_RANGE[1]))
    grid_n = int(options.get("grid", 60))
    amplitudes = np.linspace(r_lo / system.theta_ratio,
                             r_hi / system.theta_ratio, grid_n)
    t_values = np.linspace(DEFAULT_HYPERBOLA_MARGIN[0] * math.pi / r_hi,
                           DEFAULT_HYPERBOLA_MARGIN[1] * math.pi / r_lo, grid_n)
    distance = _square_distance_scan(system, amplitudes, t_values)
    pulse, result = optimize_pulse(
        run_config.circuit, run_config.basis,
        search_box=((amplitudes[0], amplitudes[-1]),
                    (t_values[0], t_values[-1])),
        M=m_levels, grid_shape=(grid_n, grid_n), system=system)
    rows = []
    for i, amp in enumerate(amplitudes):
        for j, t in enumerate(t_values):
            rows.append({"amplitude": float(amp), "t_gate": float(t),
                         "distance": float(distance[i, j])})
    meta = {"optimal_amplitude": pulse.amplitude, "optimal_t_gate": pulse.t_gate,
            "fidelity": result.fidelity, "distance": result.distance,
            "phi_xz": result.phi_xz, "phi_xy": result.phi_xy,
            "leakage": result.leakage,
            "hyperbola_ratio": result.hyperbola_ratio,
            "m_levels": m_levels}
    _emit(run_config, "gate_optimize", rows, meta, started)
    plots.render_gate_optimize(
        {"amplitudes": amplitudes, "t_values": t_values, "distance": distance,
         "best_amplitude": pulse.amplitude, "best_t": pulse.t_gate},
        os.path.join(run_config.output_dir, "gate_optimize.png"))


def run_gate_map(run_config: RunConfig) -> None:
    from .gate import gate_parameter_map

    started = time.time()
    options = run_config.options
    rows = gate_parameter_map(
        run_config.circuit, run_config.basis,
        options.get("e_j_values", [0.08, 0.1063, 0.1414, 0.1880, 0.25]),
        options.get("e_c_theta_values", [1e-4, 1.778e-4, 3.162e-4, 5.623e-4, 1e-3]),
        M=int(options.get("m_levels", 30)))
    _emit(run_config, "gate_map", rows, {}, started)
    plots.render_gate_map(rows, os.path.join(run_config.output_dir,
                                             "gate_map.png"))


def run_gate_robustness(run_config: RunConfig) -> None:
    from .gate import optimize_pulse, prepare_gate_system, robustness_scan

    started = time.time()
    options = run_config.options
    m_levels = int(options.get("m_levels", 30))
    system = prepare_gate_system(run_config.circuit, run_config.basis, m_levels)
    pulse, reference = optimize_pulse(run_config.circuit, run_config.basis,
                                      M=m_levels, system=system)
    sigma_fracs = options.get("sigma_fractions", [0.0, 0.05, 0.1, 0.2, 0.25])
    axes = {
        "sigma": [f * pulse.t_gate for f in sigma_fracs],
        "phi_ext": options.get("phi_ext_values", [0.0, 0.05, 0.1, 0.2, 0.3]),
        "dE_J": options.get("disorder_values", [0.01, 0.02, 0.05, 0.1]),
        "dC_J": options.get("disorder_values", [0.01, 0.02, 0.05, 0.1]),
    }
    rows_by_axis = {}
    all_rows = []
    for axis, grid in axes.items():
        rows = robustness_scan(run_config.circuit, run_config.basis, pulse,
                               reference, axis, grid, M=m_levels)
        rows_by_axis[axis] = rows
        for row in rows:
            all_rows.append({"axis": axis, "value": row.get(axis), **{
                k: v for k, v in row.items() if k != axis}})
    meta = {"reference_fidelity": reference.fidelity,
            "optimal_amplitude": pulse.amplitude,
            "optimal_t_gate": pulse.t_gate}
    _emit(run_config, "gate_robustness", all_rows, meta, started)
    plots.render_robustness(rows_by_axis,
                            os.path.join(run_config.output_dir,
                                         "gate_robustness.png"))


def run_raman(run_config: RunConfig) -> None:
    from .gate import prepare_gate_system
    from .raman import RamanConfig, effective_h_single, optimize_ratio
    from .spectral import _rebuild_with

    started = time.time()
    options = run_config.options
    m_levels = int(options.get("m_levels", 30))
    amplitude = float(options.get("amplitude", 5e-6))
    grid = np.linspace(float(options.get("omega_min", 0.02)),
                       float(options.get("omega_max", 1.2)),
                       int(options.get("num", 2000)))
    system = prepare_gate_system(run_config.circuit, run_config.basis, m_levels)
    scan = optimize_ratio(system.omega, system.n_theta_elements, amplitude,
                          m_levels, omega_grid=grid)
    rows = []
    for omega_d, ratio in zip(scan["grid"], scan["ratios"]):
        rows.append({"omega": float(omega_d), "ratio": float(ratio)})
    flux_rows = []
    for phi_ext in options.get("flux_values", []):
        row = {"phi_ext": float(phi_ext)}
        try:
            point = _rebuild_with(run_config.circuit, "phi_ext", float(phi_ext))
            sys_point = prepare_gate_system(point, run_config.basis, m_levels)
            out = optimize_ratio(sys_point.omega, sys_point.n_theta_elements,
                                 amplitude, m_levels, omega_grid=grid)
            row.update(omega_star=out["omega_star"], ratio_star=out["ratio_star"])
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        flux_rows.append(row)
    meta = {"amplitude": amplitude, "m_levels": m_levels,
            "omega_star": scan["omega_star"], "ratio_star": scan["ratio_star"]}
    paths = _emit(run_config, "raman", rows, meta, started)
    if flux_rows:
        reports.write_csv(os.path.join(run_config.output_dir, "raman_flux.csv"),
                          flux_rows)
    plots.render_raman(rows, flux_rows,
                       os.path.join(run_config.output_dir, "raman.png"))


def run_cooling_sweep(run_config: RunConfig) -> None:
    from .cooling import impedance_sweep

    started = time.time()
    options = run_config.options
    grid = np.geomspace(float(options.get("e_l_start", 1.25e-4)),
                        float(options.get("e_l_stop", 5e-3)),
                        int(options.get("num", 13)))
    hardware = {}
    for src, dst in (("epsilon_hz", "epsilon_hz"), ("omega_b_hz", "omega_b_hz"),
                     ("g_bar_hz", "g_bar_hz"), ("g_bar_ref_el", "g_bar_ref_EL"),
                     ("kappa_b_hz", "kappa_b_hz"), ("q_zeta", "Q_zeta"),
                     ("temperature_k", "T")):
        if src in options:
            hardware[dst] = float(options[src])
    rows = impedance_sweep(run_config.circuit, grid,
                           chi01_zeta=float(options.get("chi01_zeta", 0.0)),
                           hardware=hardware or None)
    _emit(run_config, "cooling_sweep", rows, {"hardware": hardware}, started)
    plots.render_cooling(rows, os.path.join(run_config.output_dir,
                                            "cooling_sweep.png"))


def run_validate(run_config: RunConfig) -> None:
    import scipy.constants as const

    from .cooling import CoolingConfig, validate_full_vs_reduced

    started = time.time()
    options = run_config.options
    n_th = float(options.get("n_th", 2.0))
    omega_zeta = float(options.get("omega_zeta", 1.0))
    temperature = const.hbar * omega_zeta / (const.k * math.log(1.0 / n_th + 1.0))
    config = CoolingConfig(
        omega_zeta=omega_zeta,
        omega_b_bar=float(options.get("omega_b_bar", 3.7)),
        epsilon=float(options.get("epsilon", 1.35)),
        omega_m=float(options.get("omega_m", 2.7)),
        g_bar=float(options.get("g_bar", 0.08)),
        kappa_b=float(options.get("kappa_b", 0.12)),
        kappa_zeta=float(options.get("kappa_zeta", 2.5e-3)),
        T=temperature)
    report = validate_full_vs_reduced(config,
                                      n_a=int(options.get("n_a", 12)),
                                      n_b=int(options.get("n_b", 3)),
                                      n_periods=float(options.get("n_periods", 5)))
    rows = [{"t": float(t), "n_zeta_full": float(nf), "n_zeta_reduced": float(nr)}
            for t, nf, nr in zip(report["t"], report["n_zeta_full"],
                                 report["n_zeta_reduced"])]
    meta = {k: report[k] for k in ("n_ss_full", "n_ss_reduced",
                                   "relative_discrepancy", "n_b_max",
                                   "b_mode_near_vacuum",
                                   "purcell_dressing_factor")}
    meta["validity"] = report["validity"]
    _emit(run_config, "validate", rows, meta, started)
    plots.render_validation(report, os.path.join(run_config.output_dir,
                                                 "validate.png"))


_HANDLERS = {
    "spectrum": run_spectrum,
    "bo-fit": run_bo_fit,
    "dispersive-scan": run_dispersive,
    "gate-optimize": run_gate_optimize,
    "gate-map": run_gate_map,
    "gate-robustness": run_gate_robustness,
    "raman-scan": run_raman,
    "cooling-sweep": run_cooling_sweep,
    "validate": run_validate,
}


if __name__ == "__main__":
    sys.exit(main())
