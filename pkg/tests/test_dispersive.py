import numpy as np
import pytest

from zeropi.dispersive import (DispersiveResult, coupling_table,
                               dispersive_shifts, qubit_levels,
                               straddling_scan)
from zeropi.params import BasisSpec, CircuitParams, ParameterError


def _two_level_table(g):
    table = np.zeros((2, 2), dtype=complex)
    table[0, 1] = g
    table[1, 0] = np.conj(g)
    return table


def test_two_level_closed_form():
    """chi_0/chi_1 against the analytic two-level expression, exactly."""
    g, omega_q, omega_r = 0.01, 1.0, 0.8
    res = dispersive_shifts(_two_level_table(g), np.array([0.0, omega_q]),
                            omega_r)
    chi_01 = abs(g) ** 2 / (-omega_q - omega_r)
    chi_10 = abs(g) ** 2 / (omega_q - omega_r)
    assert res.chi_levels[0] == pytest.approx(chi_01 - chi_10, abs=1e-16)
    assert res.chi_levels[1] == pytest.approx(chi_10 - chi_01, abs=1e-16)
    assert res.chi_qubit == pytest.approx(chi_10 - chi_01, abs=1e-16)
    assert res.lambda_levels[0] == pytest.approx(chi_01, abs=1e-16)


def test_two_level_perturbation_oracle():
    """Numeric second-order shifts of the coupled ladder reproduce chi_i.

    Builds qubit x oscillator with coupling g sigma_x-like (a + a^dag) and
    extracts the photon-number-linear, state-dependent shift.
    """
    g, omega_q, omega_r, n_fock = 2e-4, 1.0, 0.73, 8
    h_q = np.diag([0.0, omega_q])
    a = np.diag(np.sqrt(np.arange(1, n_fock)), 1)
    quad = a + a.T
    sx = np.array([[0, 1], [1, 0]], dtype=float)
    h = (np.kron(h_q, np.eye(n_fock))
         + omega_r * np.kron(np.eye(2), np.diag(np.arange(n_fock)))
         + g * np.kron(sx, quad))
    vals = np.linalg.eigvalsh(h)
    # identify dressed |i, n> adiabatically: bare order works at tiny g
    bare = np.array([i * omega_q + n * omega_r for i in range(2)
                     for n in range(n_fock)])
    order = np.argsort(bare)
    dressed = np.empty_like(bare)
    dressed[order] = np.sort(vals)

    def level(i, n):
        return dressed[i * n_fock + n]

    chi_num = [(level(i, 2) - level(i, 1)) - (level(i, 1) - level(i, 0))
               for i in (0, 1)]
    # second differences isolate the n-quadratic part; chi_i is the slope
    chi_slope = [(level(i, 1) - level(i, 0)) - omega_r for i in (0, 1)]
    res = dispersive_shifts(_two_level_table(g), np.array([0.0, omega_q]),
                            omega_r)
    for i in (0, 1):
        assert abs(chi_num[i]) < 1e-9  # shift is linear in n at this order
        assert chi_slope[i] == pytest.approx(res.chi_levels[i], rel=2e-3)


def test_validity_masking_is_per_pair():
    omega = np.array([0.0, 1.0, 2.5])
    g = np.zeros((3, 3), dtype=complex)
    g[0, 1] = g[1, 0] = 0.05
    g[1, 2] = g[2, 1] = 0.04
    # resonator right at the 1 -> 2 transition: that pair is invalid,
    # the 0 -> 1 pair still counts
    res = dispersive_shifts(g, omega, omega_r=1.5)
    assert not res.validity[2, 1]
    assert res.validity[1, 0]
    assert res.chi_pairs[2, 1] == 0.0
    assert res.chi_pairs[1, 0] != 0.0
    assert not res.all_valid


def test_zero_coupling_gives_bare_frequencies():
    omega = np.array([0.0, 0.9, 1.7])
    res = dispersive_shifts(np.zeros((3, 3)), omega, omega_r=0.5)
    assert np.all(res.chi_levels == 0.0)
    assert res.omega_q_tilde == pytest.approx(0.9)
    assert res.omega_r_tilde == pytest.approx(0.5)


def test_sum_structure_identity():
    rng = np.random.default_rng(11)
    m = 6
    g = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    g = 0.01 * (g + g.conj().T)
    omega = np.sort(rng.uniform(0.0, 3.0, size=m))
    res = dispersive_shifts(g, omega, omega_r=0.421)
    chi = res.chi_pairs
    for i in range(m):
        lhs = res.chi_levels[i] + 2.0 * chi[:, i].sum()
        rhs = chi[i, :].sum() + chi[:, i].sum()
        assert lhs == pytest.approx(rhs, abs=1e-15)
    # two-level reduction recomposition
    assert res.chi_qubit == pytest.approx(
        0.5 * (res.chi_levels[1] - res.chi_levels[0]), abs=1e-18)
    assert res.omega_r_tilde == pytest.approx(
        0.421 + 0.5 * (res.chi_levels[0] + res.chi_levels[1]), abs=1e-15)


@pytest.fixture(scope="module")
def straddle_system():
    params = CircuitParams.from_energies(E_J=0.167, E_L=1.25e-3,
                                         E_C_theta=1.25e-4, E_C_phi=0.374)
    basis = BasisSpec(n_charge_max=14, n_fock_phi=200)
    spectrum, ops = qubit_levels(params, basis, M=40)
    return params, basis, spectrum, ops


def test_coupling_table_definitional(straddle_system):
    params, basis, spectrum, ops = straddle_system
    from zeropi.circuit import embed
    from zeropi.spectral import matrix_element

    g = coupling_table(params, "theta", 2e-3, 5, spectrum, ops,
                       cg_over_cmu=0.2)
    n_theta = embed({"theta": ops.n_ops["theta"]}, ops.dims, ops.modes)
    for i in range(5):
        for j in range(5):
            direct = 0.2 * 2e-3 * matrix_element(n_theta, spectrum, i, j)
            assert g[i, j] == pytest.approx(direct, abs=1e-18)
    assert np.abs(g - g.conj().T).max() < 1e-15
    zero = coupling_table(params, "theta", 0.0, 5, spectrum, ops, 0.2)
    assert np.abs(zero).max() == 0.0


def test_protected_transition_structure(straddle_system):
    _, _, spectrum, ops = straddle_system
    params = CircuitParams.from_energies(E_J=0.167, E_L=1.25e-3,
                                         E_C_theta=1.25e-4, E_C_phi=0.374)
    g = coupling_table(params, "theta", 1e-3, 6, spectrum, ops, 0.2)
    assert abs(g[0, 1]) < 1e-8 * abs(g[0, 2])
    assert abs(g[1, 3]) > 1e3 * abs(g[0, 1])


def test_scan_far_detuned_tail(straddle_system):
    params, basis, spectrum, ops = straddle_system
    grid = np.linspace(0.5, 1.5, 12)  # far above every included transition
    rows = straddling_scan(params, "phi", grid, 1e-3, basis, M=30,
                           cg_over_cmu=0.2, spectrum=spectrum, ops=ops)
    chi = np.abs([r["chi_phi"] for r in rows])
    assert np.all(np.diff(chi) < 0.0)
    assert chi[-1] < chi[0]


def test_scan_sign_change_across_crossing(straddle_system):
    params, basis, spectrum, ops = straddle_system
    omega = spectrum.eigenvalues - spectrum.eigenvalues[0]
    target = omega[2]  # strong interwell transition
    grid = np.array([target - 5e-3, target + 5e-3])
    g = coupling_table(params, "theta", 1e-4, 30, spectrum, ops, 0.2)
    below = dispersive_shifts(g, omega[:30], grid[0])
    above = dispersive_shifts(g, omega[:30], grid[1])
    pair_below = below.chi_pairs[2, 0]
    pair_above = above.chi_pairs[2, 0]
    assert np.sign(pair_below) != np.sign(pair_above)


@pytest.mark.slow
def test_straddling_feature_and_m_convergence(straddle_system):
    params, basis, spectrum, ops = straddle_system
    grid = np.linspace(2e-3, 0.105, 180)
    rows_phi = straddling_scan(params, "phi", grid, 3e-3, basis, M=30,
                               cg_over_cmu=0.2, spectrum=spectrum, ops=ops)
    rows_theta = straddling_scan(params, "theta", grid, 3e-3, basis, M=30,
                                 cg_over_cmu=0.2, spectrum=spectrum, ops=ops)
    ghz = params.omega_p_over_2pi
    chi_phi = np.array([abs(r["chi_phi"]) for r in rows_phi]) * ghz
    chi_theta = np.array([abs(r["chi_theta"]) for r in rows_theta]) * ghz
    valid_phi = np.array([r["all_valid"] for r in rows_phi])
    valid_theta = np.array([r["all_valid"] for r in rows_theta])
    peak_phi = chi_phi[valid_phi].max()
    peak_theta = chi_theta[valid_theta].max()
    # straddling-like enhancement at the 1e5 Hz scale for phi coupling,
    # orders of magnitude above the protected theta coupling
    assert 3e4 < peak_phi < 1e6
    assert peak_phi > 30.0 * peak_theta

    rows_40 = straddling_scan(params, "phi", grid, 3e-3, basis, M=40,
                              cg_over_cmu=0.2, spectrum=spectrum, ops=ops)
    chi_40 = np.array([abs(r["chi_phi"]) for r in rows_40]) * ghz
    idx = int(np.argmax(np.where(valid_phi, chi_phi, 0.0)))
    assert chi_40[idx] == pytest.approx(chi_phi[idx], rel=0.05)
