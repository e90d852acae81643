"""Time-evolution engines shared by the gate and cooling studies.

Unitary propagation handles piecewise-constant drives by exact stepwise
matrix exponentials (through the eigendecomposition of each constant
Hamiltonian) and smooth drives by a fourth-order Magnus integrator sampled
at two-point Gauss nodes, which stays exactly unitary; step halving
controls the error in both cases.

Dissipative evolution integrates the Lindblad master equation

    drho/dt = -i [H(t), rho] + sum_k rate_k D[L_k] rho,
    D[x] rho = x rho x^dag - (x^dag x rho + rho x^dag x) / 2

matrix-free with classical RK4; steady states of time-independent
generators come from a null-space solve of the dense-assembled Liouvillian
(desk scale only).  Times are in 1/omega_p units unless stated otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.constants as const
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .operators import OperatorMatrix, hermiticity_defect
from .params import ParameterError

UNITARITY_TOL = 1e-9
TRACE_TOL = 1e-8
POSITIVITY_MONITOR = -1e-8
POSITIVITY_ABORT = -1e-6
#: superoperators are assembled densely only below this system dimension
DENSE_SUPEROP_DIM = 60


class PropagationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PulseSpec:
    """Voltage pulse envelope for the charge drive.

    ``amplitude`` is the reduced voltage 2 e V / (hbar omega_p); multiplied
    by the drive operator's capacitance ratio it becomes the drive angular
    frequency directly.  ``shape`` is 'square' or 'tanh'; the tanh pulse
    keeps the square pulse's area and maximum amplitude when
    ``area_matched`` (plateau length t_gate, edges of width sigma).
    """

    amplitude: float
    t_gate: float
    t_start: float = 0.0
    shape: str = "square"
    sigma: float = 0.0
    carrier_omega: float | None = None
    phase: float = 0.0
    area_matched: bool = True

    def __post_init__(self):
        if self.t_gate <= 0.0:
            raise ParameterError("t_gate must be positive")
        if self.sigma < 0.0:
            raise ParameterError("sigma must be non-negative")
        if self.shape not in ("square", "tanh"):
            raise ParameterError(f"unknown pulse shape {self.shape!r}")
        if self.shape == "tanh" and self.sigma > 0.5 * self.t_gate:
            raise ParameterError("tanh edge width must satisfy sigma <= t_gate / 2")

    @property
    def t_end(self) -> float:
        if self.shape == "tanh" and self.sigma > 0.0:
            return self.t_start + self.t_gate + 8.0 * self.sigma
        return self.t_start + self.t_gate

    def envelope(self, t) -> np.ndarray:
        # closed interval: integrators sampling exactly at the switch-off
        # edge see the left limit, matching exact piecewise stepping
        t = np.asarray(t, dtype=float)
        if self.shape == "square" or self.sigma == 0.0:
            value = np.where((t >= self.t_start) & (t <= self.t_start + self.t_gate),
                             self.amplitude, 0.0)
        else:
            t0 = self.t_start + 4.0 * self.sigma
            t1 = t0 + self.t_gate
            value = 0.5 * self.amplitude * (np.tanh((t - t0) / self.sigma)
                                            - np.tanh((t - t1) / self.sigma))
        if self.carrier_omega is not None:
            value = value * np.cos(self.carrier_omega * t + self.phase)
        return value

    @property
    def is_piecewise_constant(self) -> bool:
        return (self.shape == "square" or self.sigma == 0.0) and self.carrier_omega is None


def _as_matrix(op) -> np.ndarray:
    if isinstance(op, OperatorMatrix):
        op = op.data
    if sp.issparse(op):
        op = op.toarray()
    return np.asarray(op, dtype=complex)


def _check_same_basis(a, b) -> None:
    if isinstance(a, OperatorMatrix) and isinstance(b, OperatorMatrix):
        if a.basis != b.basis:
            raise ParameterError("operators live on different bases")


def _expm_herm(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian h, via eigendecomposition (exactly unitary)."""
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * vals * t)) @ vecs.conj().T


def propagate_unitary(H0, drive_op, pulse: PulseSpec,
                      t_grid=None, tol: float = 1e-8,
                      max_refinements: int = 12):
    """Propagator of H(t) = H0 + envelope(t) * drive_op over the pulse.

    Returns ``U(t_end)``; with ``t_grid`` given, returns ``(U, samples)``
    where ``samples[k]`` is U(t_grid[k]).  Piecewise-constant pulses are
    stepped with exact matrix exponentials; smooth pulses use Magnus-4 with
    step halving until successive refinements agree to ``tol`` in max norm.
    """
    _check_same_basis(H0, drive_op)
    h0 = _as_matrix(H0)
    d = _as_matrix(drive_op)
    if h0.shape != d.shape:
        raise ParameterError("H0 and drive operator differ in dimension")
    if hermiticity_defect(h0) > 1e-10 or hermiticity_defect(d) > 1e-10:
        raise PropagationError("propagation requires Hermitian H0 and drive")

    if pulse.is_piecewise_constant:
        result = _propagate_piecewise(h0, d, pulse, t_grid)
    else:
        result = _propagate_magnus(h0, d, pulse, t_grid, tol, max_refinements)
    u_final = result[0] if t_grid is not None else result
    defect = np.abs(u_final.conj().T @ u_final - np.eye(len(u_final))).max()
    if defect > UNITARITY_TOL:
        raise PropagationError(f"propagator unitarity defect {defect:.3e}")
    return result


def _propagate_piecewise(h0, d, pulse, t_grid):
    t_on = pulse.t_start
    t_off = pulse.t_start + pulse.t_gate
    if t_grid is None:
        u = _expm_herm(h0 + pulse.amplitude * d, pulse.t_gate)
        if t_on > 0.0:
            u = u @ _expm_herm(h0, t_on)
        return u

    t_grid = np.asarray(t_grid, dtype=float)
    vals_off, vecs_off = np.linalg.eigh(h0)
    vals_on, vecs_on = np.linalg.eigh(h0 + pulse.amplitude * d)

    def u_of(t):
        t1 = np.clip(t, 0.0, t_on)
        t2 = np.clip(t, t_on, max(t_off, t_on)) - t_on
        t3 = max(t - t_off, 0.0)
        u = (vecs_off * np.exp(-1j * vals_off * t1)) @ vecs_off.conj().T
        u = (vecs_on * np.exp(-1j * vals_on * t2)) @ vecs_on.conj().T @ u
        if t3 > 0.0:
            u = (vecs_off * np.exp(-1j * vals_off * t3)) @ vecs_off.conj().T @ u
        return u

    samples = np.stack([u_of(t) for t in t_grid])
    return u_of(max(float(t_grid[-1]), pulse.t_end)), samples


_GAUSS_NODES = (0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0)


def _magnus_run(h0, d, pulse, t_start, t_end, n_steps, sample_times):
    """Fourth-order Magnus with two Gauss-Legendre samples per step."""
    dim = h0.shape[0]
    u = np.eye(dim, dtype=complex)
    samples = []
    sample_iter = iter(sample_times)
    next_sample = next(sample_iter, None)
    dt = (t_end - t_start) / n_steps
    c_comm = math.sqrt(3.0) / 12.0
    for k in range(n_steps):
        t0 = t_start + k * dt
        a1 = h0 + pulse.envelope(t0 + _GAUSS_NODES[0] * dt) * d
        a2 = h0 + pulse.envelope(t0 + _GAUSS_NODES[1] * dt) * d
        omega = -1j * 0.5 * dt * (a1 + a2) - dt * dt * c_comm * (a2 @ a1 - a1 @ a2)
        u = la.expm(omega) @ u
        t_next = t0 + dt
        while next_sample is not None and t_next >= next_sample - 1e-12:
            samples.append(u.copy())
            next_sample = next(sample_iter, None)
    while next_sample is not None:  # sample times past the integration window
        samples.append(u.copy())
        next_sample = next(sample_iter, None)
    return u, samples


def _propagate_magnus(h0, d, pulse, t_grid, tol, max_refinements):
    t_start, t_end = 0.0, pulse.t_end
    scale = float(np.abs(la.eigvalsh(h0)).max()
                  + abs(pulse.amplitude) * np.abs(la.eigvalsh(d)).max())
    n = max(64, int(scale * (t_end - t_start) / 0.25))
    want_samples = t_grid is not None
    sample_times = list(np.asarray(t_grid, dtype=float)) if want_samples else []
    u_prev, _ = _magnus_run(h0, d, pulse, t_start, t_end, n, [])
    for _ in range(max_refinements):
        n *= 2
        u, samples = _magnus_run(h0, d, pulse, t_start, t_end, n, sample_times)
        if np.abs(u - u_prev).max() < tol:
            return (u, np.stack(samples)) if want_samples else u
        u_prev = u
    raise PropagationError(
        f"step halving reached {n} steps without meeting tolerance {tol}")


def thermal_rates(omega: float, T: float, Q: float) -> tuple[float, float]:
    """(kappa, n_th) of a mode at angular frequency omega [rad/s], T [K].

    kappa = omega / Q and n_th = 1 / (exp(hbar omega / k_B T) - 1).
    """
    if omega <= 0.0:
        raise ParameterError("omega must be positive")
    if T < 0.0 or Q <= 0.0:
        raise ParameterError("require T >= 0 and Q > 0")
    if T == 0.0:
        n_th = 0.0
    else:
        n_th = 1.0 / math.expm1(const.hbar * omega / (const.k * T))
    return omega / Q, n_th


@dataclass
class LindbladSpec:
    """Generator data for dissipative evolution.

    ``hamiltonian`` is the static part; ``time_terms`` is a list of
    ``(f(t), operator)`` pairs adding ``f(t) * operator``.  Collapse entries
    are ``(operator, rate)`` with non-negative rates (the rate multiplies
    the dissipator, i.e. the operator is used unnormalized).
    """

    hamiltonian: object
    collapse_ops: list = field(default_factory=list)
    time_terms: list = field(default_factory=list)
    temperature_K: float | None = None

    def __post_init__(self):
        h = _as_matrix(self.hamiltonian)
        self._h = h
        self._collapse = []
        for op, rate in self.collapse_ops:
            if rate < 0.0:
                raise ParameterError("collapse rates must be non-negative")
            mat = _as_matrix(op)
            if mat.shape != h.shape:
                raise ParameterError("collapse operator dimension mismatch")
            self._collapse.append((mat, float(rate)))
        self._terms = [(f, _as_matrix(op)) for f, op in self.time_terms]
        for _, op in self._terms:
            if op.shape != h.shape:
                raise ParameterError("time-dependent term dimension mismatch")

    @property
    def dim(self) -> int:
        return self._h.shape[0]

    def h_of_t(self, t: float) -> np.ndarray:
        h = self._h
        if self._terms:
            h = h.copy()
            for f, op in self._terms:
                h += f(t) * op
        return h

    @property
    def is_time_dependent(self) -> bool:
        return bool(self._terms)


def _lindblad_rhs(spec: LindbladSpec, t: float, rho: np.ndarray,
                  prepared) -> np.ndarray:
    # non-Hermitian effective-Hamiltonian form: the anticommutator halves
    # fold into H_eff = H - (i/2) sum rate L^dag L, leaving only jump terms
    jumps, half_anticomm = prepared
    h_eff = spec.h_of_t(t) - 0.5j * half_anticomm
    out = -1j * (h_eff @ rho - rho @ h_eff.conj().T)
    for mat_scaled, mat_scaled_dag in jumps:
        out += mat_scaled @ rho @ mat_scaled_dag
    return out


def lindblad_propagate(spec: LindbladSpec, rho0, t_grid, dt: float | None = None,
                       validate_state: bool = True,
                       positivity_checks: bool = True) -> np.ndarray:
    """rho(t) on ``t_grid`` by matrix-free RK4 integration.

    Trace preservation is enforced as a monitor (drift beyond 1e-8 aborts);
    positivity is monitored at sample points, with violations below -1e-6
    aborting and smaller ones left to reporting-side clipping.
    """
    rho = _as_matrix(rho0)
    if rho.shape != (spec.dim, spec.dim):
        raise ParameterError("rho0 dimension mismatch")
    if validate_state:
        if abs(np.trace(rho) - 1.0) > 1e-8:
            raise ParameterError("rho0 must have unit trace")
        if hermiticity_defect(rho) > 1e-10:
            raise ParameterError("rho0 must be Hermitian")
        if la.eigvalsh(rho).min() < POSITIVITY_MONITOR:
            raise ParameterError("rho0 must be positive semidefinite")

    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1 or np.any(np.diff(t_grid) <= 0):
        raise ParameterError("t_grid must be strictly increasing")

    jumps = []
    half_anticomm = np.zeros((spec.dim, spec.dim), dtype=complex)
    for mat, rate in spec._collapse:
        scaled = math.sqrt(rate) * mat
        jumps.append((scaled, scaled.conj().T))
        half_anticomm += scaled.conj().T @ scaled
    prepared = (jumps, half_anticomm)

    if dt is None:
        scale = np.abs(la.eigvalsh(spec.h_of_t(t_grid[0]))).max()
        rate_sum = float(np.abs(half_anticomm).max())
        dt = 0.05 / max(scale, rate_sum, 1e-12)

    trace0 = np.trace(rho).real
    out = np.empty((len(t_grid), spec.dim, spec.dim), dtype=complex)
    t = 0.0
    idx = 0
    while idx < len(t_grid):
        target = float(t_grid[idx])
        while t < target - 1e-12:
            step = min(dt, target - t)
            k1 = _lindblad_rhs(spec, t, rho, prepared)
            k2 = _lindblad_rhs(spec, t + 0.5 * step, rho + 0.5 * step * k1, prepared)
            k3 = _lindblad_rhs(spec, t + 0.5 * step, rho + 0.5 * step * k2, prepared)
            k4 = _lindblad_rhs(spec, t + step, rho + step * k3, prepared)
            rho = rho + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += step
        if validate_state:
            # hermiticity is preserved by the generator; kill rounding drift
            rho = 0.5 * (rho + rho.conj().T)
            drift = abs(np.trace(rho).real - trace0)
            if drift > TRACE_TOL:
                raise PropagationError(
                    f"trace drift {drift:.3e} at t={t:.4g}; reduce dt (stiffness)")
            if positivity_checks:
                low = la.eigvalsh(rho).min()
                if low < POSITIVITY_ABORT:
                    raise PropagationError(
                        f"positivity violation {low:.3e} at t={t:.4g}")
        out[idx] = rho
        idx += 1
    return out


def build_liouvillian(spec: LindbladSpec, t: float = 0.0) -> sp.csr_matrix:
    """Row-major-vectorized superoperator matrix of the generator at time t."""
    d = spec.dim
    eye = sp.identity(d, format="csr")
    h = sp.csr_matrix(spec.h_of_t(t))
    liouv = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
    for mat, rate in spec._collapse:
        m = sp.csr_matrix(mat)
        mdm = (m.getH() @ m)
        liouv = liouv + rate * (sp.kron(m, m.conj())
                                - 0.5 * sp.kron(mdm, eye)
                                - 0.5 * sp.kron(eye, mdm.T))
    return liouv.tocsr()


class DegenerateSteadyStateError(RuntimeError):
    pass


def steady_state(spec: LindbladSpec, gap_rtol: float = 1e-10) -> np.ndarray:
    """Unique steady state of a time-independent Lindblad generator.

    Solves L rho = 0 with a trace-normalization row, verifies the residual,
    and checks null-space uniqueness through the two eigenvalues of L
    nearest zero (degenerate generators, e.g. purely unitary ones, raise).
    """
    if spec.is_time_dependent:
        raise ParameterError("steady_state requires a time-independent generator")
    d = spec.dim
    if d > DENSE_SUPEROP_DIM:
        raise ParameterError(
            f"steady-state solve limited to dimension {DENSE_SUPEROP_DIM}, got {d}")
    liouv = build_liouvillian(spec)
    scale = max(np.abs(liouv.data).max(), 1e-300)

    try:
        vals = spla.eigs(liouv, k=2, sigma=1e-8 * scale,
                         return_eigenvectors=False, which="LM",
                         v0=np.ones(d * d))
    except Exception:
        vals = None  # uniqueness then rests on the residual check below
    if vals is not None:
        near_zero = sorted(abs(v) for v in vals)
        if len(near_zero) > 1 and near_zero[1] < gap_rtol * scale:
            raise DegenerateSteadyStateError(
                "Liouvillian null space is degenerate; no unique steady state")

    a = liouv.tolil()
    trace_row = np.zeros(d * d)
    trace_row[::d + 1] = 1.0
    a[0] = trace_row
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0
    rho_vec = spla.spsolve(a.tocsc(), b)
    rho = rho_vec.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real

    residual = np.abs(liouv @ rho.reshape(-1)).max()
    if residual > 1e-10 * scale:
        raise DegenerateSteadyStateError(
            f"steady-state residual {residual:.3e} exceeds tolerance "
            f"(likely degenerate or ill-conditioned generator)")
    return rho


def thermal_state(dim: int, n_bar: float) -> np.ndarray:
    """Truncated thermal Fock-state density matrix with mean occupation n_bar."""
    if n_bar <= 0.0:
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    weights = (n_bar / (1.0 + n_bar)) ** np.arange(dim)
    weights /= weights.sum()
    return np.diag(weights).astype(complex)
