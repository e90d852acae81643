"""Named parameter sets for the standard studies shipped with the package.

Each entry is a dictionary of config sections (see :mod:`zeropi.config`)
selectable on the command line with ``--set NAME``.  Energies are in
hbar omega_p units with omega_p / 2 pi = 40 GHz unless noted.
"""

from __future__ import annotations

import copy

#: anchor two-mode set: moderate-to-deep regime, localized logical states;
#: used for the effective-model fit, the gate and the Raman analysis
_ANCHOR_CIRCUIT = {
    "e_j": 0.165, "e_l": 1e-3, "e_c_theta": 1.75e-4, "e_c_phi": 0.378,
    "omega_p_over_2pi": 4.0e10,
}

#: impedance-sweep circuit: E_L is swept, the rest stays fixed
_SWEEP_CIRCUIT = {
    "e_j": 0.25, "e_l": 1e-3, "e_c_theta": 5e-4, "e_c_phi": 0.25,
    "omega_p_over_2pi": 4.0e10,
}

CATALOG: dict[str, dict] = {
    # impedance/asymptotics sweep of the double-well coefficients
    "fig2": {
        "circuit": dict(_SWEEP_CIRCUIT),
        "basis": {"n_charge_max": 16, "n_fock_phi": 200},
        "spectrum": {"k": 12, "axis": "E_L", "start": 1.25e-4, "stop": 5e-3,
                     "num": 9, "scale": "log"},
        "bo-fit": {"theta_points": 81},
    },
    # straddling-regime dispersive scan, coupling ratio 0.2 per mode
    "fig4": {
        "circuit": {"e_j": 0.167, "e_l": 1.25e-3, "e_c_theta": 1.25e-4,
                    "e_c_phi": 0.374, "omega_p_over_2pi": 4.0e10},
        "basis": {"n_charge_max": 14, "n_fock_phi": 200},
        "dispersive-scan": {"mode": "phi", "ev_rms": 3e-3, "cg_over_cmu": 0.2,
                            "omega_r_start": 2e-3, "omega_r_stop": 0.105,
                            "num": 240, "m_levels": 30, "n_bar": 0.0},
    },
    # gate anchor set plus the (E_J, E_C_theta) map ranges
    "fig5": {
        "circuit": dict(_ANCHOR_CIRCUIT),
        "basis": {"n_charge_max": 16, "n_fock_phi": 200},
        "gate-optimize": {"m_levels": 30},
        "gate-map": {"m_levels": 30,
                     "e_j_values": [0.08, 0.1063, 0.1414, 0.1880, 0.25],
                     "e_c_theta_values": [1e-4, 1.778e-4, 3.162e-4,
                                          5.623e-4, 1e-3]},
        "gate-robustness": {"m_levels": 30,
                            "sigma_fractions": [0.0, 0.05, 0.1, 0.15, 0.2, 0.25],
                            "phi_ext_values": [0.0, 0.05, 0.1, 0.2, 0.3],
                            "disorder_values": [0.01, 0.02, 0.05, 0.1]},
    },
    # one-dimensional reduction benchmark (same anchor circuit)
    "fig7": {
        "circuit": dict(_ANCHOR_CIRCUIT),
        "basis": {"n_charge_max": 16, "n_fock_phi": 200},
        "spectrum": {"k": 12},
        "bo-fit": {"theta_points": 81},
    },
    # Raman-suppression scan with a weak probe drive
    "fig8": {
        "circuit": dict(_ANCHOR_CIRCUIT),
        "basis": {"n_charge_max": 16, "n_fock_phi": 200},
        "raman-scan": {"amplitude": 5e-6, "m_levels": 30,
                       "omega_min": 0.02, "omega_max": 1.2, "num": 2000,
                       "flux_values": [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]},
    },
    # zeta-mode cooling sweep: dephasing improvement vs impedance
    "fig10": {
        "circuit": dict(_SWEEP_CIRCUIT),
        "basis": {"n_charge_max": 16, "n_fock_phi": 200},
        "cooling-sweep": {"e_l_start": 1.25e-4, "e_l_stop": 5e-3, "num": 13,
                          "chi01_zeta": 2.0e3, "epsilon_hz": 200e6,
                          "omega_b_hz": 5e9, "g_bar_hz": 42e6,
                          "g_bar_ref_el": 5e-3, "kappa_b_hz": 20e6,
                          "q_zeta": 30000.0, "temperature_k": 0.015},
    },
    # desk-scale two-mode model for the full-vs-reduced validation
    "cooling-desk": {
        "circuit": dict(_SWEEP_CIRCUIT),
        "basis": {},
        "validate": {"n_a": 12, "n_b": 3, "n_periods": 5, "n_th": 2.0,
                     "omega_zeta": 1.0, "omega_b_bar": 3.7, "epsilon": 1.35,
                     "omega_m": 2.7, "g_bar": 0.08, "kappa_b": 0.12,
                     "kappa_zeta": 2.5e-3},
    },
}


def catalog_sections(name: str) -> dict:
    if name not in CATALOG:
        raise KeyError(f"unknown parameter set {name!r}; "
                       f"available: {sorted(CATALOG)}")
    return copy.deepcopy(CATALOG[name])
