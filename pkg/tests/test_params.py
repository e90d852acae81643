import math

import numpy as np
import pytest

from zeropi.params import (BasisSpec, CircuitParams, ParameterError,
                           mode_capacitances_from_values)


def test_mode_capacitances_degenerate_circuit():
    caps = mode_capacitances_from_values(C=0.0, C_J=0.0, C_g=1.5, C_0=0.5)
    assert caps == (2.0, 2.0, 2.0, 2.0)


def test_mode_capacitances_direct_values_and_sigma_error():
    # C_phi = 2, C_theta = 22, C_zeta = 20 by direct evaluation; the
    # vanishing Sigma capacitance must be rejected
    with pytest.raises(ParameterError, match="C_sigma"):
        mode_capacitances_from_values(C=10.0, C_J=1.0, C_g=0.0, C_0=0.0)
    caps = mode_capacitances_from_values(C=10.0, C_J=1.0, C_g=0.05, C_0=0.05)
    assert caps[0] == pytest.approx(2.1)
    assert caps[1] == pytest.approx(22.1)
    assert caps[2] == pytest.approx(20.1)
    assert caps[3] == pytest.approx(0.1)


def test_mode_capacitance_identities():
    rng = np.random.default_rng(7)
    for _ in range(25):
        c, c_j, c_g, c_0 = rng.uniform(0.1, 10.0, size=4)
        c_phi, c_theta, c_zeta, c_sigma = mode_capacitances_from_values(
            c, c_j, c_g, c_0)
        assert c_theta - c_zeta == pytest.approx(2* c_j, rel=1e-12)
        assert c_theta - c_phi == pytest.approx(2 * c, rel=1e-12)
        assert c_theta > c_phi and c_zeta > c_sigma


def test_from_energies_consistency():
    p = CircuitParams.from_energies(E_J=0.165, E_L=1e-3, E_C_theta=1.75e-4,
                                    E_C_phi=0.378)
    caps = p.mode_capacitances()
    assert 1.0 / caps[0] == pytest.approx(p.E_C_phi, rel=1e-12)
    assert 1.0 / caps[1] == pytest.approx(p.E_C_theta, rel=1e-12)
    # anchor set sits in the operating regime
    report = p.regime_report()
    assert report["in_regime"]
    assert report["z_phi_over_rq"] > 1.0 > report["z_theta_over_rq"]


def test_invalid_parameters_rejected():
    with pytest.raises(ParameterError):
        CircuitParams.from_energies(E_J=-0.1, E_L=1e-3, E_C_theta=1e-4,
                                    E_C_phi=0.3)
    with pytest.raises(ParameterError):
        CircuitParams.from_energies(E_J=0.1, E_L=1e-3, E_C_theta=1e-4,
                                    E_C_phi=0.3, dE_J=1.5)
    with pytest.raises(ParameterError):
        # E_C_theta must be below E_C_phi for a 0-pi network
        CircuitParams.from_energies(E_J=0.1, E_L=1e-3, E_C_theta=0.4,
                                    E_C_phi=0.3)
    with pytest.raises(ParameterError):
        CircuitParams.from_energies(E_J=0.1, E_L=1e-3, E_C_theta=1e-4,
                                    E_C_phi=0.3, cg_fraction=0.9,
                                    c0_fraction=0.2)


def test_inconsistent_capacitances_rejected():
    p = CircuitParams.from_energies(E_J=0.1, E_L=1e-3, E_C_theta=1e-4,
                                    E_C_phi=0.3)
    with pytest.raises(ParameterError, match="inconsistent"):
        CircuitParams(E_J=0.1, E_L=1e-3, E_C_theta=1e-4, E_C_phi=0.3,
                      C=p.C * 1.5, C_J=p.C_J, C_g=p.C_g, C_0=p.C_0)


def test_weak_coupling_warning():
    p = CircuitParams.from_energies(E_J=0.1, E_L=1e-3, E_C_theta=1e-4,
                                    E_C_phi=0.3, cg_fraction=0.4)
    with pytest.warns(UserWarning, match="exceeds"):
        p.coupling_ratio("phi")


def test_derived_frequencies():
    p = CircuitParams.from_energies(E_J=0.25, E_L=1e-3, E_C_theta=5e-4,
                                    E_C_phi=0.25)
    assert p.omega_phi == pytest.approx(4 * math.sqrt(0.25 * 1e-3))
    assert p.omega_zeta == pytest.approx(4 * math.sqrt(p.E_C_zeta * 1e-3))
    # C >> C_J makes the zeta and theta capacitances nearly equal
    assert p.E_C_zeta == pytest.approx(p.E_C_theta, rel=5e-3)


def test_basis_spec_validation_and_dims():
    b = BasisSpec(n_charge_max=5, n_fock_phi=7, n_fock_zeta=3)
    assert b.dim("theta") == 11
    assert b.total_dim(("theta", "phi", "zeta")) == 11 * 7 * 3
    with pytest.raises(ParameterError):
        BasisSpec(n_charge_max=0)
    tiny = BasisSpec(dim_limit=10)
    with pytest.raises(ParameterError, match="exceeds"):
        tiny.check_limit(("theta", "phi"))
