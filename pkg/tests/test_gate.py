import math

import numpy as np
import pytest

from zeropi.dynamics import PulseSpec, propagate_unitary
from zeropi.gate import (OptimizationFailedError, average_gate_fidelity,
                         closest_unitary, dissipative_gate_fidelity,
                         multilevel_excursion, optimize_pulse,
                         prepare_gate_system, robustness_scan, rotation_angles,
                         simulate_gate)
from zeropi.params import BasisSpec, CircuitParams, ParameterError

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
HADAMARD = (SX + SZ) / math.sqrt(2.0)


# -- rotation-angle readout -------------------------------------------------------

@pytest.mark.parametrize("u,phi_xz", [(SX, 0.0), (SZ, math.pi / 2),
                                      (HADAMARD, math.pi / 4)])
def test_rotation_angles_paulis(u, phi_xz):
    xz, xy, angle, flagged = rotation_angles(u)
    assert xz == pytest.approx(phi_xz, abs=1e-12)
    assert xy == pytest.approx(0.0, abs=1e-12)
    assert angle == pytest.approx(math.pi, abs=1e-12)
    assert not flagged


def test_rotation_angles_global_phase_invariant():
    rng = np.random.default_rng(2)
    for _ in range(10):
        phase = rng.uniform(0.0, 2 * math.pi)
        xz_a, xy_a, ang_a, _ = rotation_angles(HADAMARD)
        xz_b, xy_b, ang_b, _ = rotation_angles(np.exp(1j * phase) * HADAMARD)
        assert xz_b == pytest.approx(xz_a, abs=1e-10)
        assert xy_b == pytest.approx(xy_a, abs=1e-10)
        assert ang_b == pytest.approx(ang_a, abs=1e-10)


def test_rotation_angles_flags_non_pi():
    u = np.diag([1.0, np.exp(1j * math.pi / 2)])  # pi/2 Z rotation
    xz, xy, angle, flagged = rotation_angles(u)
    assert flagged
    assert angle == pytest.approx(math.pi / 2, abs=1e-12)
    assert xz == pytest.approx(math.pi / 2, abs=1e-9)


# -- SVD / fidelity contracts --------------------------------------------------------

def test_closest_unitary_contract():
    rng = np.random.default_rng(9)
    block = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    block *= 0.4  # keep singular values below one
    u_close, distance, leakage = closest_unitary(block)
    assert np.abs(u_close.conj().T @ u_close - np.eye(2)).max() < 1e-12
    s = np.linalg.svd(block, compute_uv=False)
    assert distance == pytest.approx(np.abs(1 - s).max())
    assert leakage == pytest.approx(1.0 - np.mean(s ** 2))
    # singular values (hence distance) invariant under unitary factors
    w = np.linalg.qr(rng.normal(size=(2, 2))
                     + 1j * rng.normal(size=(2, 2)))[0]
    _, distance_rotated, _ = closest_unitary(w @ block)
    assert distance_rotated == pytest.approx(distance, abs=1e-12)


def test_average_fidelity_formula():
    rng = np.random.default_rng(10)
    w = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    assert average_gate_fidelity(w, w) == pytest.approx(1.0, abs=1e-12)
    # against a different unitary: standard closed form
    v = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    expected = (2.0 + abs(np.trace(w.conj().T @ v)) ** 2) / 6.0
    assert average_gate_fidelity(v, w) == pytest.approx(expected, abs=1e-12)


# -- gate simulation -------------------------------------------------------------------

def test_free_evolution_gate_is_trivial(anchor_params, anchor_basis,
                                        anchor_gate_system):
    pulse = PulseSpec(amplitude=0.0, t_gate=1.0)
    res = simulate_gate(anchor_params, pulse, anchor_basis,
                        system=anchor_gate_system)
    assert res.distance < 1e-9
    assert res.fidelity > 1.0 - 1e-9
    # phase-only action: far from a pi rotation, so it must be flagged
    assert res.angle_flagged


def test_anchor_optimum_headline_numbers(anchor_gate_optimum):
    pulse, res = anchor_gate_optimum
    assert res.fidelity >= 0.999
    assert res.phi_xy < 1e-5
    assert abs(res.hyperbola_ratio - 1.0) < 0.1
    assert res.phi_xz < 0.05  # localized regime: Pauli-X-like
    assert res.leakage < 1e-3


def test_fidelity_varies_along_hyperbola(anchor_params, anchor_basis,
                                         anchor_gate_system,
                                         anchor_gate_optimum):
    pulse, res = anchor_gate_optimum
    doubled = PulseSpec(amplitude=2.0 * pulse.amplitude,
                        t_gate=0.5 * pulse.t_gate)
    res_doubled = simulate_gate(anchor_params, doubled, anchor_basis,
                                system=anchor_gate_system)
    assert res_doubled.hyperbola_ratio == pytest.approx(res.hyperbola_ratio,
                                                        rel=1e-12)
    assert res_doubled.fidelity > 0.99
    assert abs(res_doubled.fidelity - res.fidelity) > 1e-5


def test_optimize_fails_outside_hyperbola(anchor_params, anchor_basis,
                                          anchor_gate_system):
    ratio = anchor_gate_system.theta_ratio
    # strong drive but pulse areas stuck between the displacement features
    box = ((0.3 / ratio, 0.5 / ratio), (2.0, 4.0))
    with pytest.raises(OptimizationFailedError) as info:
        optimize_pulse(anchor_params, anchor_basis, search_box=box,
                       grid_shape=(12, 12), system=anchor_gate_system)
    assert info.value.best is not None
    assert info.value.best.distance > 0.1


def test_gate_system_rejects_zeta_coupling_disorder(anchor_basis):
    p = CircuitParams.from_energies(E_J=0.165, E_L=1e-3, E_C_theta=1.75e-4,
                                    E_C_phi=0.378, dC=0.05)
    with pytest.raises(ParameterError):
        prepare_gate_system(p, anchor_basis, M=10)


# -- multilevel excursion ---------------------------------------------------------------

@pytest.fixture(scope="module")
def anchor_excursion(anchor_params, anchor_basis, anchor_gate_system,
                     anchor_gate_optimum):
    pulse, _ = anchor_gate_optimum
    return multilevel_excursion(anchor_params, pulse, anchor_basis,
                                system=anchor_gate_system)


def test_excursion_probability_conserved(anchor_excursion):
    assert anchor_excursion["total_probability_deviation"] < 1e-9


def test_excursion_follows_disjoint_charge_paths(
        anchor_gate_system, anchor_excursion, anchor_gate_optimum):
    """Population leaves |0> through its charge-coupled ladder and returns
    to |1> through the disjoint partner ladder."""
    n = np.abs(anchor_gate_system.n_theta_elements)
    outgoing = set(np.argsort(n[2:, 0])[::-1][:2] + 2)
    incoming = set(np.argsort(n[2:, 1])[::-1][:2] + 2)
    assert outgoing.isdisjoint(incoming)
    assert 2 in outgoing and 3 in incoming
    pops = anchor_excursion["populations"]
    early = len(pops) // 10
    assert pops[early, sorted(outgoing)].sum() \
        > 5.0 * pops[early, sorted(incoming)].sum()
    # final state is the logical |1>
    _, res = anchor_gate_optimum
    assert pops[-1, 1] > 0.99
    assert pops[-1, :2].sum() >= res.fidelity - 1e-3


def test_excursion_populates_higher_doublets(anchor_excursion):
    transient = anchor_excursion["populations"][:, 2:].max()
    assert transient > 0.05
    assert anchor_excursion["occupied_levels"] >= 4


# -- robustness -------------------------------------------------------------------------

def test_robustness_sigma_zero_recovers_square(anchor_params, anchor_basis,
                                               anchor_gate_optimum):
    pulse, res = anchor_gate_optimum
    rows = robustness_scan(anchor_params, anchor_basis, pulse, res,
                           "sigma", [0.0, 0.1 * pulse.t_gate])
    assert rows[0]["fidelity"] == pytest.approx(res.fidelity, abs=1e-12)
    assert abs(rows[1]["rel_change"]) < 1e-3


def test_robustness_flux_insensitive(anchor_params, anchor_basis,
                                     anchor_gate_optimum):
    pulse, res = anchor_gate_optimum
    rows = robustness_scan(anchor_params, anchor_basis, pulse, res,
                           "phi_ext", [0.0, 0.1])
    assert abs(rows[0]["rel_change"]) < 1e-9
    assert abs(rows[1]["rel_change"]) < 1e-2


def test_robustness_junction_disorder_hierarchy(anchor_params, anchor_basis,
                                                anchor_gate_optimum):
    pulse, res = anchor_gate_optimum
    ej_rows = robustness_scan(anchor_params, anchor_basis, pulse, res,
                              "dE_J", [0.05])
    cj_rows = robustness_scan(anchor_params, anchor_basis, pulse, res,
                              "dC_J", [0.05])
    assert abs(ej_rows[0]["rel_change"]) * 10.0 < abs(cj_rows[0]["rel_change"])


def test_robustness_unknown_axis(anchor_params, anchor_basis,
                                 anchor_gate_optimum):
    pulse, res = anchor_gate_optimum
    with pytest.raises(ParameterError):
        robustness_scan(anchor_params, anchor_basis, pulse, res, "bogus", [0.1])


# -- dissipative channel -------------------------------------------------------------------

def test_dissipative_consistency_with_unitary(anchor_params, anchor_basis,
                                              anchor_gate_optimum):
    # compare the two evolution engines at matched level truncation
    pulse, _ = anchor_gate_optimum
    m_q = 14
    matched = simulate_gate(anchor_params, pulse, anchor_basis, M=m_q)
    out = dissipative_gate_fidelity(
        anchor_params, anchor_basis, pulse, matched.u_closest,
        rates={"gamma_phi": 0.0, "gamma_down": 0.0, "gamma_up": 0.0},
        M_q=m_q, n_fock_zeta=2, zeta_nbar=0.0)
    assert out["fidelity"] == pytest.approx(matched.fidelity, abs=1e-6)


@pytest.mark.slow
def test_dissipative_disorder_dominates_dissipation(anchor_basis,
                                                    anchor_gate_optimum):
    pulse, res = anchor_gate_optimum
    base = CircuitParams.from_energies(E_J=0.165, E_L=1e-3, E_C_theta=1.75e-4,
                                       E_C_phi=0.378)
    m_q = 14
    matched = simulate_gate(base, pulse, anchor_basis, M=m_q)
    disordered = base.with_(dC=0.05)
    with_rates = dissipative_gate_fidelity(
        disordered, anchor_basis, pulse, matched.u_closest, M_q=m_q,
        n_fock_zeta=6)
    without_rates = dissipative_gate_fidelity(
        disordered, anchor_basis, pulse, matched.u_closest,
        rates={"gamma_phi": 0.0, "gamma_down": 0.0, "gamma_up": 0.0},
        M_q=m_q, n_fock_zeta=6)
    # moderate disorder costs little fidelity, dissipation even less
    assert abs(with_rates["fidelity"] / matched.fidelity - 1.0) < 0.01
    assert abs(with_rates["fidelity"] - without_rates["fidelity"]) < 1e-4


@pytest.mark.slow
def test_dissipative_insensitive_to_zeta_occupation(anchor_basis,
                                                    anchor_gate_optimum):
    pulse, res = anchor_gate_optimum
    disordered = CircuitParams.from_energies(
        E_J=0.165, E_L=1e-3, E_C_theta=1.75e-4, E_C_phi=0.378, dC=0.05)
    fidelities = []
    for nbar, cutoff in ((0.0, 4), (2.0, 14), (5.0, 24)):
        out = dissipative_gate_fidelity(disordered, anchor_basis, pulse,
                                        res.u_closest, M_q=10,
                                        n_fock_zeta=cutoff, zeta_nbar=nbar)
        fidelities.append(out["fidelity"])
    spread = max(fidelities) - min(fidelities)
    assert spread < 2e-3
