"""Run configuration: strict INI parsing, catalog sets and overrides.

A run is described by nested key-value sections; ``[circuit]``,
``[disorder]`` and ``[basis]`` feed the physics objects and one optional
command section carries command-specific knobs.  Unknown sections or keys
are rejected outright so typos fail loudly, and every run can be
reconstructed from the resolved snapshot written next to its outputs.
"""

from __future__ import annotations

import ast
import configparser
import io
from dataclasses import dataclass, field

from .params import BasisSpec, CircuitParams, ParameterError


class ConfigError(ValueError):
    pass


COMMANDS = ("spectrum", "bo-fit", "dispersive-scan", "gate-optimize",
            "gate-map", "gate-robustness", "raman-scan", "cooling-sweep",
            "validate")

_CIRCUIT_KEYS = {"e_j", "e_l", "e_c_theta", "e_c_phi", "omega_p_over_2pi",
                 "phi_ext", "n_g_theta", "cg_fraction", "c0_fraction"}
_DISORDER_KEYS = {"de_j", "de_l", "dc", "dc_j", "dc_g", "dc_0"}
_BASIS_KEYS = {"n_charge_max", "n_fock_phi", "n_fock_zeta", "n_fock_res",
               "convergence_tol", "dim_limit"}
_COMMAND_KEYS = {
    "spectrum": {"k", "axis", "start", "stop", "num", "scale", "modes"},
    "bo-fit": {"theta_points", "n_fock", "n_flux"},
    "dispersive-scan": {"mode", "ev_rms", "cg_over_cmu", "omega_r_start",
                        "omega_r_stop", "num", "m_levels", "n_bar"},
    "gate-optimize": {"m_levels", "rate_min", "rate_max", "grid"},
    "gate-map": {"m_levels", "e_j_values", "e_c_theta_values"},
    "gate-robustness": {"m_levels", "sigma_fractions", "phi_ext_values",
                        "disorder_values"},
    "raman-scan": {"amplitude", "m_levels", "omega_min", "omega_max", "num",
                   "flux_values"},
    "cooling-sweep": {"e_l_start", "e_l_stop", "num", "chi01_zeta",
                      "epsilon_hz", "omega_b_hz", "g_bar_hz", "g_bar_ref_el",
                      "kappa_b_hz", "q_zeta", "temperature_k"},
    "validate": {"n_a", "n_b", "n_periods", "n_th", "omega_zeta",
                 "omega_b_bar", "epsilon", "omega_m", "g_bar", "kappa_b",
                 "kappa_zeta"},
}


@dataclass
class RunConfig:
    command: str
    circuit: CircuitParams
    basis: BasisSpec
    options: dict = field(default_factory=dict)
    output_dir: str = "."
    workers: int = 1
    sections: dict = field(default_factory=dict)  # resolved raw values

    def resolved_text(self) -> str:
        """Canonical INI snapshot of the resolved configuration."""
        parser = configparser.ConfigParser()
        for name in sorted(self.sections):
            parser[name] = {k: repr(v) for k, v in sorted(self.sections[name].items())}
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()


def _parse_value(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def read_config_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    try:
        with open(path) as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    return {section: {k: _parse_value(v) for k, v in parser[section].items()}
            for section in parser.sections()}


def apply_overrides(sections: dict, overrides: list[str]) -> dict:
    """Apply ``section.key=value`` override strings."""
    out = {name: dict(vals) for name, vals in sections.items()}
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        out.setdefault(section, {})[key.strip().lower()] = _parse_value(value.strip())
    return out


def _check_keys(section: str, values: dict, allowed: set) -> None:
    unknown = set(values) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in section [{section}]; "
            f"allowed: {sorted(allowed)}")


def build_run_config(command: str, sections: dict, output_dir: str = ".",
                     workers: int = 1) -> RunConfig:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; choose from {COMMANDS}")
    known_sections = {"circuit", "disorder", "basis", command}
    unknown = set(sections) - known_sections - set(COMMANDS)
    if unknown:
        raise ConfigError(f"unknown section(s) {sorted(unknown)}")

    circuit_raw = dict(sections.get("circuit", {}))
    _check_keys("circuit", circuit_raw, _CIRCUIT_KEYS)
    disorder_raw = dict(sections.get("disorder", {}))
    _check_keys("disorder", disorder_raw, _DISORDER_KEYS)
    basis_raw = dict(sections.get("basis", {}))
    _check_keys("basis", basis_raw, _BASIS_KEYS)
    options = dict(sections.get(command, {}))
    _check_keys(command, options, _COMMAND_KEYS[command])

    required = {"e_j", "e_l", "e_c_theta", "e_c_phi"}
    missing = required - set(circuit_raw)
    if missing:
        raise ConfigError(f"missing circuit key(s) {sorted(missing)}")
    try:
        params = CircuitParams.from_energies(
            E_J=float(circuit_raw["e_j"]), E_L=float(circuit_raw["e_l"]),
            E_C_theta=float(circuit_raw["e_c_theta"]),
            E_C_phi=float(circuit_raw["e_c_phi"]),
            cg_fraction=float(circuit_raw.get("cg_fraction", 0.01)),
            c0_fraction=float(circuit_raw.get("c0_fraction", 0.01)),
            omega_p_over_2pi=float(circuit_raw.get("omega_p_over_2pi", 4.0e10)),
            phi_ext=float(circuit_raw.get("phi_ext", 0.0)),
            n_g_theta=float(circuit_raw.get("n_g_theta", 0.0)),
            dE_J=float(disorder_raw.get("de_j", 0.0)),
            dE_L=float(disorder_raw.get("de_l", 0.0)),
            dC=float(disorder_raw.get("dc", 0.0)),
            dC_J=float(disorder_raw.get("dc_j", 0.0)),
            dC_g=tuple(disorder_raw.get("dc_g", (0.0,) * 4)),
            dC_0=tuple(disorder_raw.get("dc_0", (0.0,) * 4)),
        )
        basis = BasisSpec(
            n_charge_max=int(basis_raw.get("n_charge_max", 30)),
            n_fock_phi=int(basis_raw.get("n_fock_phi", 40)),
            n_fock_zeta=int(basis_raw.get("n_fock_zeta", 10)),
            n_fock_res=int(basis_raw.get("n_fock_res", 5)),
            convergence_tol=float(basis_raw.get("convergence_tol", 1e-8)),
            dim_limit=int(basis_raw.get("dim_limit", 200_000)),
        )
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc

    resolved = {"circuit": circuit_raw, "disorder": disorder_raw,
                "basis": basis_raw, command: options}
    return RunConfig(command=command, circuit=params, basis=basis,
                     options=options, output_dir=output_dir, workers=workers,
                     sections=resolved)
