"""Adiabatic elimination of off-resonantly driven excited levels.

A weak drive V cos(omega t + beta) on a charge coordinate couples the
ground doublet {0, 1} to levels j >= 2 with amplitudes
Omega_ij = A e^{-i beta} <j|n|i> (A collects the capacitance ratio and eV).
Eliminating the excited levels with per-level decay rates gamma_j gives the
ground-manifold Hamiltonian

    h_{i i'} = omega_i delta_{i i'} - (1/2) sum_{j>=2}
               Omega_ij^* Omega_i'j [Delta_ji + Delta_ji']
               / ([i gamma_j/2 + Delta_ji] [-i gamma_j/2 + Delta_ji']),

with Delta_ji = (omega_j - omega_i) - omega; the i <-> i' structure makes
h exactly Hermitian.  In Pauli form h = const + (Delta_z/2) sigma_z +
(Delta_x/2) sigma_x after gauging the drive phase into sigma_x, so
Delta_z = h_11 - h_00 and Delta_x = 2 |h_01|.  Population inversion needs
Delta_x / Delta_z >> 1; the direct 0-1 drive amplitude is dropped as
exponentially small.  Everything assumes the off-resonance condition
|Omega_ij / Delta_ji| << 1, enforced as a hard ratio.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import ParameterError

DEFAULT_GAMMA = 1e-6
DEFAULT_OFF_RESONANCE_RATIO = 10.0
OMEGA_GRID_POINTS = 2000
OMEGA_GRID_RANGE = (0.02, 1.2)


class RejectedConfigurationError(RuntimeError):
    """Off-resonance condition violated for a specific transition."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


@dataclass
class RamanConfig:
    """Drive list plus level data for the adiabatic elimination.

    ``drives`` holds (omega, amplitude, phase) triples with the amplitude
    already including the coupling prefactor (capacitance ratio times eV,
    in hbar omega_p units).  ``gammas[j]`` is the total decay rate of level
    j to the ground manifold; a uniform small default is used when not
    given, since only the deep-resonance regularization depends on it.
    """

    drives: list
    M: int
    gammas: np.ndarray | None = None
    off_resonance_ratio: float = DEFAULT_OFF_RESONANCE_RATIO

    def __post_init__(self):
        if self.M < 3:
            raise ParameterError("need at least one level above the doublet")
        if not self.drives:
            raise ParameterError("at least one drive is required")
        if self.gammas is None:
            self.gammas = np.full(self.M, DEFAULT_GAMMA)
        self.gammas = np.asarray(self.gammas, dtype=float)
        if len(self.gammas) != self.M:
            raise ParameterError("gammas must have one entry per level")
        if np.any(self.gammas < 0.0):
            raise ParameterError("decay rates must be non-negative")


def drive_amplitudes(amplitude: float, phase: float,
                     n_elements: np.ndarray, M: int) -> np.ndarray:
    """Omega[i, j] = amplitude e^{-i phase} <j|n|i> for i in {0,1}, j in 2..M-1."""
    omega_ij = np.zeros((2, M), dtype=complex)
    for i in range(2):
        omega_ij[i, 2:] = amplitude * np.exp(-1j * phase) * n_elements[2:M, i]
    return omega_ij


def _check_off_resonance(omega_d: float, omega_levels: np.ndarray,
                         omega_ij: np.ndarray, ratio: float) -> None:
    for i in range(2):
        for j in range(2, len(omega_levels)):
            amp = abs(omega_ij[i, j])
            if amp == 0.0:
                continue
            delta = (omega_levels[j] - omega_levels[i]) - omega_d
            if abs(delta) < ratio * amp:
                raise RejectedConfigurationError(
                    f"drive at omega={omega_d:.6g} violates off-resonance for "
                    f"transition ({i}, {j}): |Delta|={abs(delta):.3g} < "
                    f"{ratio:g} * |Omega|={ratio * amp:.3g}", pair=(i, j))


def _elimination_sum(omega_ij_a: np.ndarray, omega_ij_b: np.ndarray,
                     omega_levels: np.ndarray, omega_a: float, omega_b: float,
                     gammas: np.ndarray) -> np.ndarray:
    """The 2x2 second-order block for drive pair (a, b)."""
    h = np.zeros((2, 2), dtype=complex)
    M = len(omega_levels)
    for i in range(2):
        for i2 in range(2):
            js = np.arange(2, M)
            d_a = (omega_levels[js] - omega_levels[i]) - omega_a
            d_b = (omega_levels[js] - omega_levels[i2]) - omega_b
            num = (np.conj(omega_ij_a[i, js]) * omega_ij_b[i2, js]) * (d_a + d_b)
            den = (0.5j * gammas[js] + d_a) * (-0.5j * gammas[js] + d_b)
            h[i, i2] = -0.5 * np.sum(num / den)
    return h


def effective_h_single(config: RamanConfig, omega_levels: np.ndarray,
                       n_elements: np.ndarray) -> dict:
    """Ground-manifold 2x2 Hamiltonian for a single off-resonant drive.

    Returns the matrix plus its sigma decomposition: ``delta_z`` is the
    splitting h_11 - h_00 (bare plus differential level repulsion) and
    ``delta_x`` = 2 |h_01| the drive-induced transverse coefficient.
    """
    if len(config.drives) != 1:
        raise ParameterError("effective_h_single expects exactly one drive")
    omega_levels = np.asarray(omega_levels, dtype=float)[:config.M]
    omega_d, amplitude, phase = config.drives[0]
    omega_ij = drive_amplitudes(amplitude, phase, n_elements, config.M)
    _check_off_resonance(omega_d, omega_levels, omega_ij, config.off_resonance_ratio)

    h = np.diag(omega_levels[:2]).astype(complex)
    h += _elimination_sum(omega_ij, omega_ij, omega_levels, omega_d, omega_d,
                          config.gammas)
    delta_z = (h[1, 1] - h[0, 0]).real
    delta_x = 2.0 * abs(h[0, 1])
    return {"h": h, "delta_z": delta_z, "delta_x": delta_x}


def effective_h_two_tone(config: RamanConfig, omega_levels: np.ndarray,
                         n_elements: np.ndarray) -> dict:
    """Two-drive elimination: static part plus cross terms oscillating at
    the drive-frequency difference.

    Equal-frequency drives reduce exactly to the single-tone result with
    the complex amplitudes summed (their relative phase factors out), so
    that case delegates to :func:`effective_h_single`.
    """
    if len(config.drives) != 2:
        raise ParameterError("effective_h_two_tone expects exactly two drives")
    (w1, a1, b1), (w2, a2, b2) = config.drives
    if w1 == w2:
        merged = a1 * np.exp(-1j * b1) + a2 * np.exp(-1j * b2)
        single = RamanConfig([(w1, abs(merged), -np.angle(merged))], config.M,
                             config.gammas, config.off_resonance_ratio)
        out = effective_h_single(single, omega_levels, n_elements)
        return {"static": out["h"], "oscillating": [],
                "delta_z": out["delta_z"], "delta_x": out["delta_x"]}

    omega_levels = np.asarray(omega_levels, dtype=float)[:config.M]
    amps = []
    for omega_d, amplitude, phase in config.drives:
        omega_ij = drive_amplitudes(amplitude, phase, n_elements, config.M)
        _check_off_resonance(omega_d, omega_levels, omega_ij,
                             config.off_resonance_ratio)
        amps.append((omega_d, omega_ij))

    static = np.diag(omega_levels[:2]).astype(complex)
    oscillating = []
    for k, (wk, om_k) in enumerate(amps):
        for l, (wl, om_l) in enumerate(amps):
            block = _elimination_sum(om_k, om_l, omega_levels, wk, wl,
                                     config.gammas)
            if k == l:
                static += block
            else:
                oscillating.append((wk - wl, block))
    delta_z = (static[1, 1] - static[0, 0]).real
    delta_x = 2.0 * abs(static[0, 1])
    return {"static": static, "oscillating": oscillating,
            "delta_z": delta_z, "delta_x": delta_x}


def admissible_omega_grid(omega_levels: np.ndarray, n_elements: np.ndarray,
                          amplitude: float, M: int,
                          grid=None, ratio: float = DEFAULT_OFF_RESONANCE_RATIO) -> np.ndarray:
    """Drive-frequency grid minus exclusion windows around each transition."""
    if grid is None:
        grid = np.linspace(OMEGA_GRID_RANGE[0], OMEGA_GRID_RANGE[1],
                           OMEGA_GRID_POINTS)
    grid = np.asarray(grid, dtype=float)
    keep = np.ones(len(grid), dtype=bool)
    for i in range(2):
        for j in range(2, M):
            amp = abs(amplitude * n_elements[j, i])
            if amp == 0.0:
                continue
            transition = omega_levels[j] - omega_levels[i]
            keep &= np.abs(grid - transition) >= ratio * amp
    return grid[keep]


def optimize_ratio(omega_levels: np.ndarray, n_elements: np.ndarray,
                   amplitude: float, M: int, omega_grid=None,
                   gammas: np.ndarray | None = None,
                   ratio: float = DEFAULT_OFF_RESONANCE_RATIO) -> dict:
    """max over admissible drive frequencies of |Delta_x / Delta_z|."""
    omega_levels = np.asarray(omega_levels, dtype=float)[:M]
    grid = admissible_omega_grid(omega_levels, n_elements, amplitude, M,
                                 omega_grid, ratio)
    if len(grid) == 0:
        raise RejectedConfigurationError("no admissible drive frequencies")
    best = None
    ratios = np.empty(len(grid))
    for idx, omega_d in enumerate(grid):
        config = RamanConfig([(float(omega_d), amplitude, 0.0)], M, gammas, ratio)
        out = effective_h_single(config, omega_levels, n_elements)
        value = abs(out["delta_x"] / out["delta_z"]) if out["delta_z"] != 0 else np.inf
        ratios[idx] = value
        if best is None or value > best[1]:
            best = (float(omega_d), value)
    return {"omega_star": best[0], "ratio_star": best[1],
            "grid": grid, "ratios": ratios}
