import math

import numpy as np
import pytest
import scipy.constants as const
from scipy.special import jv

from zeropi.cooling import (CoolingConfig, TailBoundError, config_from_circuit,
                            cooling_summary, effective_coupling,
                            g_bar_from_capacitances, impedance_sweep,
                            improvement_ratio, modulation_correction,
                            shot_noise_dephasing, sideband_rates,
                            sideband_rates_full, steady_state_population,
                            uncooled_dephasing, validate_full_vs_reduced)
from zeropi.params import CircuitParams, ParameterError


def _temperature_for(omega, n_th):
    return const.hbar * omega / (const.k * math.log(1.0 / n_th + 1.0))


def _desk_config(**overrides):
    base = dict(omega_zeta=1.0, omega_b_bar=3.7, epsilon=1.35, omega_m=2.7,
                g_bar=0.08, kappa_b=0.12, kappa_zeta=2.5e-3,
                T=_temperature_for(1.0, 2.0))
    base.update(overrides)
    return CoolingConfig(**base)


def _sideband_dominant_config():
    # resonant sideband dominates every static Purcell process here
    omega_m = 0.96
    return CoolingConfig(omega_zeta=0.04, omega_b_bar=1.0,
                         epsilon=1.4 * omega_m, omega_m=omega_m,
                         g_bar=0.014, kappa_b=0.04, kappa_zeta=1e-5,
                         T=_temperature_for(0.04, 2.0))


# -- effective coupling ------------------------------------------------------------

def test_effective_coupling_zero_modulation():
    cfg = _desk_config(epsilon=1e-300)
    assert effective_coupling(cfg) == pytest.approx(0.0, abs=1e-12)


def test_effective_coupling_small_modulation_series():
    cfg = _desk_config(epsilon=0.05 * 2.7)
    x = cfg.epsilon / cfg.omega_m
    series = cfg.g_bar * cfg.epsilon * (0.5 / cfg.omega_m
                                        - 0.25 / cfg.omega_b_bar)
    assert effective_coupling(cfg) == pytest.approx(series, rel=0.01)


def test_effective_coupling_direct_formula():
    cfg = _desk_config()
    x = cfg.epsilon / cfg.omega_m
    expected = cfg.g_bar * (jv(1, x) - cfg.epsilon / (4 * cfg.omega_b_bar)
                            * (jv(0, x) + jv(2, x)))
    assert effective_coupling(cfg) == pytest.approx(expected, rel=1e-12)


def test_g_bar_from_capacitances():
    value = g_bar_from_capacitances(0.5, 2.0, 5.0, 50.0, 200.0)
    assert value == pytest.approx(0.5 / (2.0 * 5.0) / (2.0 * 100.0))
    with pytest.raises(ParameterError):
        g_bar_from_capacitances(-1.0, 1.0, 1.0, 1.0, 1.0)


# -- sideband rates -----------------------------------------------------------------

def test_rates_equal_at_zero_zeta_frequency():
    cfg = _desk_config(omega_zeta=1e-12, T=1e-3)
    down, up = sideband_rates(cfg)
    assert up == pytest.approx(down, rel=1e-12)


def test_rate_ratio_at_half_linewidth():
    # 2 omega_zeta = kappa_b / 2 makes the heating rate exactly half
    cfg = _desk_config(omega_zeta=0.03, kappa_b=0.12, T=_temperature_for(0.03, 1.0))
    down, up = sideband_rates(cfg)
    assert up == pytest.approx(0.5 * down, rel=1e-12)


def test_full_sums_agree_in_sideband_dominant_regime():
    cfg = _sideband_dominant_config()
    down, up = sideband_rates(cfg)
    down_full, up_full, tail = sideband_rates_full(cfg)
    assert down_full == pytest.approx(down, rel=0.05)
    assert up_full == pytest.approx(up, rel=0.05)
    assert tail < 0.01 * down_full


def test_full_sums_zero_modulation_collapse_to_lorentzians():
    cfg = _desk_config(epsilon=1e-300)
    down_full, up_full, _ = sideband_rates_full(cfg)
    g2, kb = cfg.g_bar ** 2, cfg.kappa_b
    lor_down = kb * g2 / ((cfg.omega_zeta - cfg.omega_b_bar) ** 2 + kb ** 2 / 4)
    lor_up = kb * g2 / ((cfg.omega_zeta + cfg.omega_b_bar) ** 2 + kb ** 2 / 4)
    assert down_full == pytest.approx(lor_down, rel=1e-12)
    assert up_full == pytest.approx(lor_up, rel=1e-12)


def test_heating_never_exceeds_cooling():
    rng = np.random.default_rng(3)
    for _ in range(20):
        cfg = _desk_config(omega_zeta=float(rng.uniform(0.01, 1.5)),
                           kappa_b=float(rng.uniform(0.02, 0.5)),
                           T=_temperature_for(1.0, 1.0))
        down, up = sideband_rates(cfg)
        assert up <= down
        n_ss, gamma = steady_state_population(cfg)
        assert gamma >= cfg.kappa_zeta * (1.0 - 1e-12)
        assert n_ss >= 0.0


# -- steady state and dephasing -------------------------------------------------------

def test_cooling_off_reaches_thermal_state():
    cfg = _desk_config(epsilon=1e-300)
    n_ss, gamma = steady_state_population(cfg)
    assert n_ss == pytest.approx(cfg.n_th, rel=1e-10)
    assert gamma == pytest.approx(cfg.kappa_zeta, rel=1e-10)


def test_population_floor_without_intrinsic_loss():
    cfg = _desk_config(kappa_zeta=1e-300)
    down, up = sideband_rates(cfg)
    n_ss, _ = steady_state_population(cfg)
    assert n_ss == pytest.approx(up / (down - up), rel=1e-10)


def test_shot_noise_dephasing_zeros():
    cfg = _desk_config(chi0_zeta=0.0, chi1_zeta=0.0)
    rate, t_phi, ok = shot_noise_dephasing(cfg, 1.0, 0.01)
    assert rate == 0.0 and math.isinf(t_phi) and ok
    cfg2 = _desk_config(chi0_zeta=-1e-4, chi1_zeta=1e-4)
    rate2, _, _ = shot_noise_dephasing(cfg2, 0.0, 0.01)
    assert rate2 == 0.0


def test_shot_noise_scaling_with_cooling_rate():
    """At small populations the dephasing falls like gamma_cooling^-2."""
    cfg = _desk_config(chi0_zeta=-5e-5, chi1_zeta=5e-5)
    rates = []
    for gamma in (0.01, 0.02, 0.04):
        n_ss = cfg.kappa_zeta * cfg.n_th / gamma  # << 1 here
        rate, _, _ = shot_noise_dephasing(cfg, n_ss, gamma)
        rates.append(rate)
    assert rates[0] / rates[1] == pytest.approx(4.0, rel=0.05)
    assert rates[1] / rates[2] == pytest.approx(4.0, rel=0.05)


def test_modulation_correction_identities():
    cfg = _desk_config()
    assert modulation_correction(cfg) == cfg.omega_m
    cfg2 = _desk_config(chi0_zeta=2e-4, chi1_zeta=2e-4)
    assert modulation_correction(cfg2) == pytest.approx(cfg.omega_m - 2e-4)
    cfg3 = _desk_config(kerr_K=6e-4)
    assert modulation_correction(cfg3) == pytest.approx(cfg.omega_m - 3e-4)


def test_saturation_in_large_occupation_limit():
    cfg = _desk_config(T=_temperature_for(1.0, 400.0))
    cfg2 = _desk_config(T=_temperature_for(1.0, 800.0))
    r1 = improvement_ratio(cfg)
    r2 = improvement_ratio(cfg2)
    assert abs(r2 / r1 - 1.0) < 0.05


def test_validity_flags_recorded():
    good = _sideband_dominant_config()
    summary = cooling_summary(good)
    assert summary.validity["weak_coupling"]
    assert summary.validity["adiabatic"]
    bad = _desk_config(g_bar=0.9)
    flags = bad.validity_flags()
    assert not flags["weak_coupling"]


def test_tail_bound_guard():
    # absurd modulation index defeats the default truncation
    cfg = _desk_config(epsilon=2.7 * 60.0)
    with pytest.raises(TailBoundError):
        sideband_rates_full(cfg, n_max=8)


# -- circuit-driven sweep ---------------------------------------------------------------

@pytest.fixture(scope="module")
def sweep_circuit():
    return CircuitParams.from_energies(E_J=0.25, E_L=1e-3, E_C_theta=5e-4,
                                       E_C_phi=0.25)


def test_config_from_circuit_red_sideband(sweep_circuit):
    cfg = config_from_circuit(sweep_circuit)
    omega_p = 2 * math.pi * sweep_circuit.omega_p_over_2pi
    assert cfg.omega_zeta == pytest.approx(sweep_circuit.omega_zeta * omega_p)
    assert cfg.omega_m == pytest.approx(cfg.omega_b_bar - cfg.omega_zeta)
    assert cfg.kappa_zeta == pytest.approx(cfg.omega_zeta / 30000.0)


def test_impedance_sweep_trend(sweep_circuit):
    rows = impedance_sweep(sweep_circuit, np.geomspace(1.25e-4, 5e-3, 11))
    assert all("error" not in row for row in rows)
    z = np.array([row["z_phi_over_rq"] for row in rows])
    ratios = np.array([row["improvement"] for row in rows])
    order = np.argsort(z)
    z, ratios = z[order], ratios[order]
    assert np.all(np.diff(ratios) > 0.0)
    assert ratios.min() >= 10.0 and ratios.max() <= 3000.0
    # growth decelerates toward the deep end: saturation onset
    slopes = np.diff(np.log(ratios)) / np.diff(np.log(z))
    assert slopes[-1] < slopes.max()


def test_sweep_chi_independent_ratio(sweep_circuit):
    with_chi = impedance_sweep(sweep_circuit, [1e-3], chi01_zeta=2e3)[0]
    without_chi = impedance_sweep(sweep_circuit, [1e-3], chi01_zeta=7e3)[0]
    assert with_chi["improvement"] == pytest.approx(without_chi["improvement"],
                                                    rel=1e-12)
    assert with_chi["t_phi_cooled"] != without_chi["t_phi_cooled"]
    ratio = with_chi["t_phi_cooled"] / with_chi["t_phi_uncooled"]
    assert ratio == pytest.approx(with_chi["improvement"], rel=1e-9)


# -- full master-equation validation -----------------------------------------------------

def test_validate_no_coupling_is_pure_thermal_relaxation():
    cfg = _desk_config(g_bar=1e-300, kappa_zeta=0.02,
                       T=_temperature_for(1.0, 1.0))
    report = validate_full_vs_reduced(cfg, n_a=8, n_b=2, n_periods=3.0,
                                      samples=25, dt=0.05)
    assert report["relative_discrepancy"] < 0.02
    assert report["n_b_max"] < 1e-6
    # trajectory follows kappa_zeta relaxation toward n_th
    mid = len(report["t"]) // 3
    expected = (cfg.n_th + (report["n_zeta_full"][0] - cfg.n_th)
                * math.exp(-cfg.kappa_zeta * report["t"][mid]))
    assert report["n_zeta_full"][mid] == pytest.approx(expected, abs=0.02)


@pytest.mark.slow
def test_validate_full_vs_reduced_agreement():
    report = validate_full_vs_reduced(_desk_config(), n_a=12, n_b=3,
                                      n_periods=5.0, samples=30, dt=0.02)
    assert report["relative_discrepancy"] < 0.10
    assert report["b_mode_near_vacuum"]
    assert report["purcell_dressing_factor"] > 1.0


@pytest.mark.slow
def test_validate_flags_broken_adiabaticity():
    cfg = _desk_config(kappa_b=2.0 * effective_coupling(_desk_config()))
    report = validate_full_vs_reduced(cfg, n_a=10, n_b=4, n_periods=3.0,
                                      samples=20, dt=0.02)
    assert not report["validity"]["adiabatic"]
    good = validate_full_vs_reduced(_desk_config(), n_a=10, n_b=3,
                                    n_periods=3.0, samples=20, dt=0.02)
    assert report["relative_discrepancy"] > good["relative_discrepancy"]


@pytest.mark.slow
def test_modulation_detuning_scan_peaks_at_correction():
    """Emulated dispersive pull: best cooling sits at the corrected omega_m."""
    pull = 0.05  # mean zeta-frequency shift
    base = _desk_config(kappa_zeta=5e-3)
    shifted = base.with_(omega_zeta=base.omega_zeta + pull,
                         T=_temperature_for(base.omega_zeta + pull, 2.0))
    results = []
    for delta in (-0.10, -0.05, 0.0):
        report = validate_full_vs_reduced(
            shifted, n_a=10, n_b=3, n_periods=3.0, samples=20, dt=0.03,
            omega_m=base.omega_m + delta)
        results.append(report["n_ss_full"])
    # omega_m - pull (delta = -0.05) cools best, matching
    # the corrected frequency for chi0 + chi1 = 2 * pull
    assert results[1] < results[0] and results[1] < results[2]
    corrected = modulation_correction(base.with_(chi0_zeta=pull,
                                                 chi1_zeta=pull))
    assert corrected == pytest.approx(base.omega_m - pull)
