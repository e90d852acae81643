"""Shared fixtures: the expensive diagonalizations are session-scoped."""

import numpy as np
import pytest

from zeropi.params import BasisSpec, CircuitParams


@pytest.fixture(scope="session")
def anchor_params():
    """Moderate-to-deep two-mode set used across the studies."""
    return CircuitParams.from_energies(E_J=0.165, E_L=1e-3,
                                       E_C_theta=1.75e-4, E_C_phi=0.378)


@pytest.fixture(scope="session")
def anchor_basis():
    return BasisSpec(n_charge_max=16, n_fock_phi=200)


@pytest.fixture(scope="session")
def anchor_spectrum(anchor_params, anchor_basis):
    from zeropi.circuit import build_h_symm
    from zeropi.spectral import diagonalize

    h = build_h_symm(anchor_params, anchor_basis)
    return diagonalize(h, 30, basis_used=anchor_basis)


@pytest.fixture(scope="session")
def anchor_gate_system(anchor_params, anchor_basis):
    from zeropi.gate import prepare_gate_system

    return prepare_gate_system(anchor_params, anchor_basis, M=30)


@pytest.fixture(scope="session")
def anchor_gate_optimum(anchor_params, anchor_basis, anchor_gate_system):
    from zeropi.gate import optimize_pulse

    pulse, result = optimize_pulse(anchor_params, anchor_basis,
                                   system=anchor_gate_system)
    return pulse, result


@pytest.fixture(scope="session")
def anchor_fit(anchor_params):
    from zeropi.effective1d import fit_coefficients

    return fit_coefficients(anchor_params)


@pytest.fixture(scope="session")
def small_params():
    """Loose, cheap set for operator-level checks."""
    return CircuitParams.from_energies(E_J=0.2, E_L=0.05, E_C_theta=0.02,
                                       E_C_phi=0.3)


@pytest.fixture(scope="session")
def small_basis():
    return BasisSpec(n_charge_max=6, n_fock_phi=12, n_fock_zeta=8,
                     n_fock_res=5)
