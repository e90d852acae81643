"""Single-qubit gate driven by a charge pulse on the theta coordinate.

The multilevel propagator is computed in the truncated eigenbasis of the
circuit Hamiltonian; its 2x2 logical block is compared against the closest
unitary from the singular-value decomposition

    u_red = W_pre S W_post^dag,   u_closest = W_pre W_post^dag,
    distance = max_s |1 - s|,

whose rotation axis yields the gate's Bloch-sphere action.  Average gate
fidelity including leakage uses

    F = (Tr(M M^dag) + |Tr M|^2) / (d (d + 1)),   M = u_closest^dag u_red

with d = 2, the standard extension to trace-decreasing logical blocks.
All gates are reported in the frame of the undriven eigenbasis at t = 0;
|0> is the lower-energy eigenstate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize as opt

from .circuit import ModeOperators, build_drive_ops, build_hamiltonian
from .dynamics import (LindbladSpec, PulseSpec, lindblad_propagate,
                       propagate_unitary, thermal_state)
from .operators import embed
from .params import BasisSpec, CircuitParams, ParameterError
from .spectral import _rebuild_with, diagonalize, matrix_element_table

ANGLE_PI_FLAG_TOL = 0.2
DEFAULT_LEVELS = 30
#: default effective-drive-rate window (amplitude x coupling ratio, omega_p
#: units); in the ideal square-pulse model the unitary distance falls
#: monotonically with the rate, so the upper edge caps the gate speed
DEFAULT_RATE_RANGE = (0.08, 0.5)
DEFAULT_HYPERBOLA_MARGIN = (0.7, 1.3)


class OptimizationFailedError(RuntimeError):
    """No pulse below the distance threshold; carries the best candidate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass
class GateResult:
    u_reduced: np.ndarray
    u_closest: np.ndarray
    distance: float
    fidelity: float
    phi_xz: float
    phi_xy: float
    leakage: float
    pulse_used: PulseSpec
    rotation_angle: float
    angle_flagged: bool
    hyperbola_ratio: float


@dataclass
class GateSystem:
    """Eigen-truncated level system plus the projected drive operator."""

    params: CircuitParams
    basis: BasisSpec
    omega: np.ndarray          # level energies, ground-referenced
    drive: np.ndarray          # theta-drive operator in the eigenbasis
    theta_ratio: float         # n_theta coefficient in the drive (C_g / C_theta)
    n_theta_elements: np.ndarray

    @property
    def M(self) -> int:
        return len(self.omega)

    @property
    def h0(self) -> np.ndarray:
        return np.diag(self.omega).astype(complex)


def prepare_gate_system(params: CircuitParams, basis: BasisSpec,
                        M: int = DEFAULT_LEVELS) -> GateSystem:
    """Diagonalize the two-mode circuit and project the theta drive.

    dE_J / dC_J disorder lives inside the two-mode sector and is included;
    dC / dE_L couple the zeta mode and belong to the dissipative treatment.
    """
    if params.dC != 0.0 or params.dE_L != 0.0:
        raise ParameterError("dC / dE_L couple zeta; use the dissipative gate path")
    modes = ("theta", "phi")
    ops = ModeOperators(params, basis, modes)
    h = build_hamiltonian(params, basis, modes, ops=ops)
    spectrum = diagonalize(h, M, basis_used=basis)
    drive_full = build_drive_ops(params, basis, modes, ops=ops)["theta"]
    drive = matrix_element_table(drive_full, spectrum, M)
    n_theta = embed({"theta": ops.n_ops["theta"]}, ops.dims, modes)
    n_elements = matrix_element_table(n_theta, spectrum, M)
    omega = spectrum.eigenvalues - spectrum.eigenvalues[0]
    return GateSystem(params, basis, omega, drive,
                      params.C_g / params.mode_capacitances()[1], n_elements)


def closest_unitary(u_reduced: np.ndarray) -> tuple[np.ndarray, float, float]:
    """(u_closest, distance, leakage) from the SVD of the logical block."""
    w_pre, s, w_post_h = np.linalg.svd(u_reduced)
    if s.max() > 1.0 + 1e-9:
        raise ValueError(f"singular value {s.max()} exceeds 1; block not from a unitary")
    return w_pre @ w_post_h, float(np.abs(1.0 - s).max()), float(1.0 - np.mean(s ** 2))


def average_gate_fidelity(u_reduced: np.ndarray, u_target: np.ndarray) -> float:
    """Average fidelity of the (possibly leaky) logical block against a unitary."""
    m = u_target.conj().T @ u_reduced
    d = m.shape[0]
    return float((np.trace(m @ m.conj().T).real + abs(np.trace(m)) ** 2)
                 / (d * (d + 1)))


def rotation_angles(u_closest: np.ndarray) -> tuple[float, float, float, bool]:
    """(phi_xz, phi_xy, rotation_angle, flagged) of a 2x2 unitary.

    Strips the global phase, decomposes as a rotation by ``rotation_angle``
    about an axis, and reports the axis polar angle in the XZ plane
    (0 -> X, pi/2 -> Z) plus its out-of-plane deviation.  Rotations whose
    angle is more than 0.2 rad away from pi are flagged but still reported.
    """
    det = np.linalg.det(u_closest)
    r = u_closest * np.exp(-0.5j * np.angle(det))
    c = 0.5 * np.trace(r).real
    sx = -0.5 * (r[0, 1].imag + r[1, 0].imag)
    sy = -0.5 * (r[0, 1].real - r[1, 0].real)
    sz = -0.5 * (r[0, 0].imag - r[1, 1].imag)
    s = math.hypot(sx, math.hypot(sy, sz))
    angle = 2.0 * math.atan2(s, c)
    if angle > math.pi:  # same rotation about the flipped axis
        angle = 2.0 * math.pi - angle
        sx, sy, sz = -sx, -sy, -sz
    flagged = abs(angle - math.pi) > ANGLE_PI_FLAG_TOL
    if s < 1e-12:
        return 0.0, 0.0, angle, True
    phi_xz = math.atan2(abs(sz), abs(sx))
    phi_xy = math.atan2(abs(sy), math.hypot(sx, sz))
    return phi_xz, phi_xy, angle, flagged


def _gate_result(system: GateSystem, u_full: np.ndarray,
                 pulse: PulseSpec) -> GateResult:
    u_red = u_full[:2, :2]
    u_close, distance, leakage = closest_unitary(u_red)
    fidelity = average_gate_fidelity(u_red, u_close)
    phi_xz, phi_xy, angle, flagged = rotation_angles(u_close)
    ratio = system.theta_ratio * pulse.amplitude * pulse.t_gate / math.pi
    return GateResult(u_red, u_close, distance, fidelity, phi_xz, phi_xy,
                      leakage, pulse, angle, flagged, ratio)


def simulate_gate(params: CircuitParams, pulse: PulseSpec, basis: BasisSpec,
                  M: int = DEFAULT_LEVELS,
                  system: GateSystem | None = None) -> GateResult:
    """Multilevel propagator for the pulse, reduced to the logical doublet."""
    system = system or prepare_gate_system(params, basis, M)
    u = propagate_unitary(system.h0, system.drive, pulse)
    return _gate_result(system, u, pulse)


def _square_distance_scan(system: GateSystem, amplitudes, t_values) -> np.ndarray:
    """Distance over the (amplitude, t_gate) grid for square pulses."""
    dist = np.empty((len(amplitudes), len(t_values)))
    for ia, amp in enumerate(amplitudes):
        vals, vecs = np.linalg.eigh(system.h0 + amp * system.drive)
        left = vecs[:2, :]
        right = vecs.conj().T[:, :2]
        for it, t in enumerate(t_values):
            u_red = (left * np.exp(-1j * vals * t)) @ right
            s = np.linalg.svd(u_red, compute_uv=False)
            dist[ia, it] = np.abs(1.0 - s).max()
    return dist


def optimize_pulse(params: CircuitParams, basis: BasisSpec,
                   search_box: tuple[tuple[float, float], tuple[float, float]] | None = None,
                   M: int = DEFAULT_LEVELS, grid_shape: tuple[int, int] = (60, 60),
                   distance_threshold: float = 0.1,
                   system: GateSystem | None = None,
                   nm_maxiter: int = 200) -> tuple[PulseSpec, GateResult]:
    """Square-pulse (V_sq, t_g) optimization by coarse scan plus simplex.

    The default search box follows the short-time displacement condition
    ratio x amplitude x t_gate ~ pi: amplitudes map the effective rate over
    DEFAULT_RATE_RANGE and gate times bracket the matching hyperbola.
    Deterministic by construction; raises OptimizationFailedError (best
    candidate attached) when nothing beats ``distance_threshold``.
    """
    system = system or prepare_gate_system(params, basis, M)
    if search_box is None:
        r_lo, r_hi = DEFAULT_RATE_RANGE
        amp_box = (r_lo / system.theta_ratio, r_hi / system.theta_ratio)
        t_box = (DEFAULT_HYPERBOLA_MARGIN[0] * math.pi / r_hi,
                 DEFAULT_HYPERBOLA_MARGIN[1] * math.pi / r_lo)
    else:
        amp_box, t_box = search_box

    amplitudes = np.linspace(amp_box[0], amp_box[1], grid_shape[0])
    t_values = np.linspace(t_box[0], t_box[1], grid_shape[1])
    dist = _square_distance_scan(system, amplitudes, t_values)
    ia, it = np.unravel_index(np.argmin(dist), dist.shape)

    def objective(x):
        amp, t = x
        if not (amp_box[0] <= amp <= amp_box[1] and t_box[0] <= t <= t_box[1]):
            return 2.0
        vals, vecs = np.linalg.eigh(system.h0 + amp * system.drive)
        u_red = (vecs[:2, :] * np.exp(-1j * vals * t)) @ vecs.conj().T[:, :2]
        s = np.linalg.svd(u_red, compute_uv=False)
        return float(np.abs(1.0 - s).max())

    result = opt.minimize(objective, x0=[amplitudes[ia], t_values[it]],
                          method="Nelder-Mead",
                          options={"maxiter": nm_maxiter, "fatol": 1e-10,
                                   "xatol": 1e-8})
    amp_best, t_best = result.x
    pulse = PulseSpec(amplitude=float(amp_best), t_gate=float(t_best))
    best = simulate_gate(params, pulse, basis, M, system=system)
    if best.distance > distance_threshold:
        raise OptimizationFailedError(
            f"best distance {best.distance:.3g} above threshold "
            f"{distance_threshold}", best=best)
    return pulse, best


def multilevel_excursion(params: CircuitParams, pulse: PulseSpec,
                         basis: BasisSpec, M: int = DEFAULT_LEVELS,
                         n_samples: int = 200, initial_level: int = 0,
                         system: GateSystem | None = None) -> dict:
    """Per-eigenlevel populations over the gate for |0> initial condition."""
    system = system or prepare_gate_system(params, basis, M)
    t_grid = np.linspace(0.0, pulse.t_end, n_samples)
    _, samples = propagate_unitary(system.h0, system.drive, pulse, t_grid=t_grid)
    populations = np.abs(samples[:, :, initial_level]) ** 2
    totals = populations.sum(axis=1)
    return {
        "t": t_grid,
        "populations": populations,
        "total_probability_deviation": float(np.abs(totals - 1.0).max()),
        "final_logical_population": float(populations[-1, :2].sum()),
        "occupied_levels": int(np.sum(populations.max(axis=0) > 0.01)),
    }


def gate_parameter_map(params: CircuitParams, basis: BasisSpec,
                       e_j_values, e_c_theta_values, M: int = DEFAULT_LEVELS,
                       count_excursions: bool = True) -> list[dict]:
    """Optimized gate across an (E_J, E_C_theta) grid at fixed E_L.

    Each row records the optimal fidelity, rotation angles and the
    hyperbola ratio; per-point failures land in the row's ``error`` field.
    """
    rows = []
    for e_j in e_j_values:
        for e_c in e_c_theta_values:
            row = {"E_J": float(e_j), "E_C_theta": float(e_c)}
            try:
                point = _rebuild_with(_rebuild_with(params, "E_J", e_j),
                                      "E_C_theta", e_c)
                system = prepare_gate_system(point, basis, M)
                pulse, res = optimize_pulse(point, basis, M=M, system=system)
                row.update(fidelity=res.fidelity, infidelity=1.0 - res.fidelity,
                           distance=res.distance, phi_xz=res.phi_xz,
                           phi_xy=res.phi_xy, leakage=res.leakage,
                           amplitude=pulse.amplitude, t_gate=pulse.t_gate,
                           hyperbola_ratio=res.hyperbola_ratio)
                if count_excursions:
                    exc = multilevel_excursion(point, pulse, basis, M,
                                               n_samples=120, system=system)
                    row["occupied_levels"] = exc["occupied_levels"]
            except Exception as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    return rows


def robustness_scan(params: CircuitParams, basis: BasisSpec,
                    reference_pulse: PulseSpec, reference_gate: GateResult,
                    axis: str, grid, M: int = DEFAULT_LEVELS) -> list[dict]:
    """Fidelity against the fixed reference unitary along one robustness axis.

    Axes: 'sigma' (tanh edge width, area-matched), 'phi_ext', 'dE_J',
    'dC_J'.  The drive amplitude and duration stay at the reference
    optimum; dC_J re-derives the drive operator, adding its parasitic
    phi-mode component.
    """
    if axis not in ("sigma", "phi_ext", "dE_J", "dC_J"):
        raise ParameterError(f"unknown robustness axis {axis!r}")
    u_ref = reference_gate.u_closest
    f_ref = reference_gate.fidelity
    rows = []
    base_system = prepare_gate_system(params, basis, M) if axis == "sigma" else None
    for value in grid:
        row = {axis: float(value)}
        try:
            if axis == "sigma":
                pulse = replace(reference_pulse,
                                shape="tanh" if value > 0 else "square",
                                sigma=float(value))
                system = base_system
            else:
                pulse = reference_pulse
                system = prepare_gate_system(_rebuild_with(params, axis, value),
                                             basis, M)
            u = propagate_unitary(system.h0, system.drive, pulse)
            u_red = u[:2, :2]
            fid = average_gate_fidelity(u_red, u_ref)
            _, distance, leakage = closest_unitary(u_red)
            row.update(fidelity=fid, rel_change=(fid - f_ref) / f_ref,
                       distance=distance, leakage=leakage)
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


DEFAULT_NOISE_RATES = {
    # placeholder worst-case qubit rates (omega_p units); the underlying
    # noise theory is an input to this package, not derived here
    "gamma_phi": 1e-8,
    "gamma_down": 1e-8,
    "gamma_up": 1e-8,
}


def dissipative_gate_fidelity(params: CircuitParams, basis: BasisSpec,
                              pulse: PulseSpec, reference_u: np.ndarray,
                              rates: dict | None = None,
                              M_q: int = 12, n_fock_zeta: int = 8,
                              zeta_nbar: float = 0.0,
                              Q_zeta: float = 30000.0,
                              dt: float | None = None) -> dict:
    """Gate fidelity with zeta-mode coupling and Lindblad dissipation.

    The two-mode circuit (including any dE_J / dC_J terms) is reduced to
    its lowest ``M_q`` eigenlevels and tensored with a zeta Fock space;
    dC / dE_L disorder then couples the sectors and adds the parasitic
    zeta drive.  The qubit channel is reconstructed from the four logical
    basis matrices and scored against the disorder-free closest unitary.
    """
    rates = {**DEFAULT_NOISE_RATES, **(rates or {})}
    clean = params.with_(dC=0.0, dE_L=0.0)
    modes = ("theta", "phi")
    ops = ModeOperators(clean, basis, modes)
    h = build_hamiltonian(clean, basis, modes, ops=ops)
    spectrum = diagonalize(h, M_q, basis_used=basis)
    omega = spectrum.eigenvalues - spectrum.eigenvalues[0]

    n_theta = matrix_element_table(
        embed({"theta": ops.n_ops["theta"]}, ops.dims, modes), spectrum, M_q)
    x_phi = matrix_element_table(
        embed({"phi": ops.x_ops["phi"]}, ops.dims, modes), spectrum, M_q)
    drive_q = matrix_element_table(
        build_drive_ops(clean, basis, modes, ops=ops)["theta"], spectrum, M_q)

    from .operators import destroy, osc_momentum_like, osc_position, osc_zpf
    omega_zeta, x_zpf_z, n_zpf_z = osc_zpf(params.E_C_zeta, params.E_L)
    a_z = destroy(n_fock_zeta).toarray().astype(complex)
    n_z = 1j * n_zpf_z * (a_z.conj().T - a_z)
    x_z = x_zpf_z * (a_z + a_z.conj().T)
    eye_q = np.eye(M_q, dtype=complex)
    eye_z = np.eye(n_fock_zeta, dtype=complex)

    C_phi, C_theta, C_zeta, _ = params.mode_capacitances()
    h_static = (np.kron(np.diag(omega).astype(complex), eye_z)
                + np.kron(eye_q, omega_zeta * (a_z.conj().T @ a_z)))
    if params.dC != 0.0:
        h_static += (-8.0 * params.C * params.dC / (C_zeta * C_theta)) * np.kron(n_theta, n_z)
    if params.dE_L != 0.0:
        h_static += params.E_L * params.dE_L * np.kron(x_phi, x_z)

    drive_op = np.kron(drive_q, eye_z)
    if params.dC != 0.0:
        cross = -params.C_g * params.C * params.dC / (C_zeta * C_theta)
        drive_op = drive_op + cross * np.kron(eye_q, n_z)

    collapse = []
    kappa_zeta = omega_zeta / Q_zeta
    collapse.append((np.kron(eye_q, a_z), kappa_zeta * (zeta_nbar + 1.0)))
    if zeta_nbar > 0.0:
        collapse.append((np.kron(eye_q, a_z.conj().T), kappa_zeta * zeta_nbar))
    sigma_minus = np.zeros((M_q, M_q), dtype=complex)
    sigma_minus[0, 1] = 1.0
    sigma_z = np.zeros((M_q, M_q), dtype=complex)
    sigma_z[0, 0], sigma_z[1, 1] = -1.0, 1.0
    if rates["gamma_down"] > 0.0:
        collapse.append((np.kron(sigma_minus, eye_z), rates["gamma_down"]))
    if rates["gamma_up"] > 0.0:
        collapse.append((np.kron(sigma_minus.conj().T, eye_z), rates["gamma_up"]))
    if rates["gamma_phi"] > 0.0:
        collapse.append((np.kron(sigma_z, eye_z), 0.5 * rates["gamma_phi"]))

    spec = LindbladSpec(hamiltonian=h_static, collapse_ops=collapse,
                        time_terms=[(pulse.envelope, drive_op)])
    rho_zeta = thermal_state(n_fock_zeta, zeta_nbar)
    t_grid = np.array([pulse.t_end])
    if dt is None:
        scale = max(np.abs(omega).max() + abs(pulse.amplitude) * np.abs(drive_q).max(),
                    omega_zeta * n_fock_zeta)
        dt = pulse.t_end / math.ceil(pulse.t_end * scale / 0.02)

    channel = np.zeros((2, 2, 2, 2), dtype=complex)  # channel[i, j] = R(|i><j|)
    for i in range(2):
        for j in range(2):
            rho_q = np.zeros((M_q, M_q), dtype=complex)
            rho_q[i, j] = 1.0
            rho0 = np.kron(rho_q, rho_zeta)
            rho_t = lindblad_propagate(spec, rho0, t_grid, dt=dt,
                                       validate_state=False)[-1]
            reduced = rho_t.reshape(M_q, n_fock_zeta, M_q, n_fock_zeta)
            rho_q_out = np.trace(reduced, axis1=1, axis2=3)
            channel[i, j] = rho_q_out[:2, :2]

    fid = _channel_average_fidelity(channel, reference_u)
    leak = 1.0 - 0.5 * (channel[0, 0].trace() + channel[1, 1].trace()).real
    return {"fidelity": fid, "leakage": leak, "kappa_zeta": kappa_zeta,
            "rates": rates, "zeta_nbar": zeta_nbar}


def _channel_average_fidelity(channel: np.ndarray, u_target: np.ndarray) -> float:
    """Average fidelity of a (possibly trace-decreasing) 2x2 channel vs a unitary.

    channel[i, j] = E(|i><j|).  Reduces to the unitary-block formula when
    E is conjugation by a matrix.
    """
    d = 2
    f_sum = 0.0 + 0.0j
    for i in range(d):
        for j in range(d):
            rotated = u_target.conj().T @ channel[i, j] @ u_target
            f_sum += rotated[i, j]
    trace_term = sum((u_target.conj().T @ channel[k, k] @ u_target).trace()
                     for k in range(d))
    return float((f_sum.real + trace_term.real) / (d * (d + 1)))
