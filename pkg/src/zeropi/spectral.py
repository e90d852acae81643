"""Diagonalization, convergence control, matrix elements and spectral sweeps.

Eigenproblems below :data:`DENSE_CUTOFF` use a dense LAPACK solve restricted
to the requested number of pairs; larger problems use sparse shift-invert
Lanczos anchored below the spectrum with a Gershgorin bound.  Doublets are
paired by a gap-ratio test rather than by fixed index pairing, since
hybridized regimes can break the naive (2k, 2k+1) pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .circuit import ModeOperators, build_hamiltonian
from .operators import OperatorMatrix, displacement_by_pi, embed, hermiticity_defect
from .params import BasisSpec, CircuitParams, ParameterError

DENSE_CUTOFF = 1500
RESIDUAL_TOL = 1e-9
ORTHO_TOL = 1e-10
#: intra-pair gap below this fraction of the smaller adjacent gap -> doublet
DOUBLET_GAP_RATIO = 0.3
#: pairs closer than this (relative to the eigenvalue span) are treated as
#: numerically degenerate and post-rotated to localized-well combinations
DEGENERACY_RTOL = 1e-12


class DiagonalizationError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass
class Spectrum:
    """Sorted eigenpairs with doublet-pairing metadata."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, on the declared basis
    doublets: list[tuple[int, int, float]]
    basis: tuple[tuple[str, int], ...]
    basis_used: BasisSpec | None = None

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def splitting(self, pair_index: int) -> float:
        return self.doublets[pair_index][2]


def pair_doublets(eigenvalues: np.ndarray,
                  gap_ratio: float = DOUBLET_GAP_RATIO) -> list[tuple[int, int, float]]:
    """Greedy doublet pairing: accept (i, i+1) when the intra-pair gap is
    below ``gap_ratio`` times the smaller adjacent gap."""
    out = []
    e = np.asarray(eigenvalues)
    i = 0
    while i + 1 < len(e):
        inner = e[i + 1] - e[i]
        left = e[i] - e[i - 1] if i > 0 else math.inf
        right = e[i + 2] - e[i + 1] if i + 2 < len(e) else math.inf
        if inner < gap_ratio * min(left, right):
            out.append((i, i + 1, float(inner)))
            i += 2
        else:
            i += 1
    return out


def _theta_well_projector(n_max: int, center: float = 0.0,
                          half_width: float = 0.5 * math.pi) -> np.ndarray:
    """Charge-basis matrix of the indicator of |theta - center| < half_width."""
    n = np.arange(-n_max, n_max + 1)
    dn = n[None, :] - n[:, None]
    w = np.empty(dn.shape)
    on_diag = dn == 0
    w[on_diag] = half_width / math.pi
    off = dn[~on_diag]
    w[~on_diag] = np.sin(off * half_width) / (math.pi * off)
    phase = np.exp(1j * dn * center)
    return phase * w


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Deterministic gauge: largest-magnitude component real positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        idx = int(np.argmax(np.abs(out[:, j])))
        pivot = out[idx, j]
        if pivot != 0:
            out[:, j] *= np.conj(pivot) / abs(pivot)
    return out


def _rotate_degenerate_pairs(values, vectors, basis) -> np.ndarray:
    """Within numerically degenerate pairs, rotate to well-localized states.

    Orders each such pair so the theta=0-localized combination comes first,
    making 'localized-well' labeling deterministic when the solver returns
    an arbitrary mixture.
    """
    labels = [lbl for lbl, _ in basis]
    if "theta" not in labels:
        return vectors
    dims = dict(basis)
    n_max = (dims["theta"] - 1) // 2
    span = max(values[-1] - values[0], 1e-300)
    proj = None
    for i in range(len(values) - 1):
        if (values[i + 1] - values[i]) / span >= DEGENERACY_RTOL:
            continue
        if proj is None:
            proj = embed({"theta": sp.csr_matrix(_theta_well_projector(n_max))},
                         dims, tuple(labels)).tocsr()
        pair = vectors[:, i:i + 2]
        block = pair.conj().T @ (proj @ pair)
        block = 0.5 * (block + block.conj().T)
        w, rot = np.linalg.eigh(block)
        rotated = pair @ rot[:, ::-1]  # descending well-0 weight first
        vectors[:, i:i + 2] = rotated
    return vectors


def diagonalize(H: OperatorMatrix | sp.spmatrix | np.ndarray, k: int,
                basis_used: BasisSpec | None = None,
                gap_ratio: float = DOUBLET_GAP_RATIO) -> Spectrum:
    """Lowest-k eigenpairs of a Hermitian operator, with residual checks."""
    if isinstance(H, OperatorMatrix):
        matrix, basis = H.data, H.basis
    else:
        matrix, basis = H, (("full", H.shape[0]),)
    dim = matrix.shape[0]
    if k > dim:
        raise DiagonalizationError(f"requested {k} pairs from dimension {dim}")
    if hermiticity_defect(matrix) > 1e-10:
        raise DiagonalizationError("input operator is not Hermitian")

    if dim <= DENSE_CUTOFF or k > dim // 4 or not sp.issparse(matrix):
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
        values, vectors = la.eigh(dense, subset_by_index=[0, k - 1])
    else:
        matrix = sp.csr_matrix(matrix)
        sigma = _gershgorin_lower_bound(matrix)
        try:
            values, vectors = spla.eigsh(matrix, k=k, sigma=sigma, which="LM")
        except Exception as exc:  # ARPACK failures carry little context
            raise DiagonalizationError(f"sparse eigensolver failed: {exc}") from exc
        order = np.argsort(values)
        values, vectors = values[order], vectors[:, order]

    vectors = np.asarray(vectors, dtype=complex)
    scale = max(np.abs(values).max(), 1.0)
    residuals = np.linalg.norm(matrix @ vectors - vectors * values, axis=0)
    if residuals.max() > RESIDUAL_TOL * scale:
        raise DiagonalizationError(
            f"eigenpair residual {residuals.max():.3e} exceeds tolerance")
    vectors = _reorthonormalize_clusters(values, vectors)
    gram = vectors.conj().T @ vectors
    if np.abs(gram - np.eye(k)).max() > ORTHO_TOL:
        raise DiagonalizationError("eigenvectors lost orthonormality")

    vectors = _rotate_degenerate_pairs(values, vectors, basis)
    vectors = _fix_phases(vectors)
    return Spectrum(values, vectors, pair_doublets(values, gap_ratio), basis,
                    basis_used)


def _reorthonormalize_clusters(values: np.ndarray, vectors: np.ndarray,
                               cluster_rtol: float = 1e-4) -> np.ndarray:
    """QR-orthonormalize vectors within near-degenerate eigenvalue clusters.

    Iterative solvers can return slightly non-orthogonal vectors on tightly
    clustered doublets; the span of a cluster is well conditioned, so an
    in-cluster rotation restores orthonormality without mixing distinct
    levels.
    """
    span = max(values[-1] - values[0], 1e-300)
    out = vectors
    start = 0
    for end in range(1, len(values) + 1):
        boundary = end == len(values) or \
            (values[end] - values[end - 1]) / span > cluster_rtol
        if boundary:
            if end - start > 1:
                q, _ = np.linalg.qr(out[:, start:end])
                # keep the original orientation as closely as possible
                overlap = q.conj().T @ out[:, start:end]
                u, _, vh = np.linalg.svd(overlap)
                out[:, start:end] = q @ (u @ vh)
            start = end
    return out


def _gershgorin_lower_bound(matrix: sp.spmatrix) -> float:
    m = matrix.tocsr()
    diag = m.diagonal().real
    absrow = np.abs(m).sum(axis=1).A1 - np.abs(diag)
    return float((diag - absrow).min()) - 1e-9


def matrix_element(op: OperatorMatrix | np.ndarray | sp.spmatrix,
                   spectrum: Spectrum, i: int, j: int) -> complex:
    """<i| op |j> in the eigenbasis of ``spectrum``."""
    if not (0 <= i < spectrum.k and 0 <= j < spectrum.k):
        raise IndexError(f"indices ({i}, {j}) outside the {spectrum.k} computed levels")
    matrix = op.data if isinstance(op, OperatorMatrix) else op
    vi = spectrum.eigenvectors[:, i]
    vj = spectrum.eigenvectors[:, j]
    return complex(vi.conj() @ (matrix @ vj))


def matrix_element_table(op, spectrum: Spectrum, M: int) -> np.ndarray:
    """Dense M x M table of eigenbasis matrix elements of ``op``."""
    if M > spectrum.k:
        raise IndexError(f"requested {M} levels, spectrum holds {spectrum.k}")
    matrix = op.data if isinstance(op, OperatorMatrix) else op
    v = spectrum.eigenvectors[:, :M]
    return v.conj().T @ (matrix @ v)


def convergence_shift(values_a: np.ndarray, values_b: np.ndarray) -> float:
    """Relative eigenvalue shift between two solves, normalized by the span.

    The span normalization keeps the metric meaningful for near-degenerate
    low-lying doublets and invariant under global energy shifts.
    """
    n = min(len(values_a), len(values_b))
    a, b = values_a[:n], values_b[:n]
    span = max(a.max() - a.min(), 1e-300)
    return float(np.abs(a - b).max() / span)


def converge_basis(params: CircuitParams, tol: float | None = None,
                   start: BasisSpec | None = None,
                   modes: tuple[str, ...] = ("theta", "phi"),
                   k: int = 12) -> BasisSpec:
    """Smallest cutoffs with the lowest-k eigenvalues stable to ``tol``.

    Doubling search on all axes jointly until stable, then per-axis downward
    bisection against the converged reference.
    """
    start = start or BasisSpec()
    tol = start.convergence_tol if tol is None else tol
    if not math.isfinite(tol):
        return start

    axes = ["n_charge_max", "n_fock_phi"]
    if "zeta" in modes:
        axes.append("n_fock_zeta")

    def solve(spec: BasisSpec) -> np.ndarray:
        h = build_hamiltonian(params, spec, modes)
        return diagonalize(h, k, basis_used=spec).eigenvalues

    spec = start
    values = solve(spec)
    for _ in range(8):
        doubled = spec.with_(**{a: 2 * getattr(spec, a) for a in axes})
        doubled.check_limit(modes)
        values_next = solve(doubled)
        if convergence_shift(values, values_next) < tol:
            reference = values_next
            break
        spec, values = doubled, values_next
    else:
        raise ConvergenceError(
            f"eigenvalues not stable to {tol} within the dimension limit")

    final = {}
    for axis in axes:
        low, high = 1, getattr(spec, axis)
        # only the probed axis shrinks; the rest stay at their stable values
        while high - low > 1:
            mid = (low + high) // 2
            candidate = spec.with_(**{axis: mid})
            try:
                trial = solve(candidate)
            except Exception:
                low = mid
                continue
            if convergence_shift(trial, reference) < tol:
                high = mid
            else:
                low = mid
        final[axis] = high
    return spec.with_(**final, convergence_tol=tol)


def symmetry_residual(params: CircuitParams, basis: BasisSpec,
                      k: int = 12, n_fock: int | None = None) -> float:
    """Violation of the theta -> theta + pi displacement symmetry.

    The displacement U = exp(-i pi n_theta) is an approximate symmetry of
    the low-energy theta dynamics only: on the two-dimensional circuit it
    must be accompanied by a half-period phi displacement, so the defect is
    measured on the Born-Oppenheimer reduction, where it is carried by the
    odd potential harmonics.  Returns max|U H U^dag - H| over the reduced
    charge basis, normalized by the lowest-k eigenvalue span (making the
    measure invariant under global energy shifts).
    """
    from .effective1d import bo_ground_energy, build_1d_hamiltonian, default_theta_grid

    theta_grid = default_theta_grid()
    curve = bo_ground_energy(params, theta_grid, n_fock=n_fock)
    import warnings as _warnings
    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        h = build_1d_hamiltonian(curve, params, theta_grid,
                                 n_charge_max=basis.n_charge_max).data
    u_diag = displacement_by_pi(basis.n_charge_max).diagonal()
    du = sp.diags(u_diag)
    defect = (du @ h @ du - h).tocsr()
    if defect.nnz == 0 or np.abs(defect.data).max() == 0.0:
        return 0.0
    values = diagonalize(h, min(k, h.shape[0]), basis_used=basis).eigenvalues
    span = max(values[-1] - values[0], 1e-300)
    return float(np.abs(defect.data).max() / span)


def _rebuild_with(params: CircuitParams, name: str, value: float) -> CircuitParams:
    """Parameter update that keeps the capacitance network consistent."""
    energy_names = {"E_J", "E_L", "E_C_theta", "E_C_phi"}
    if name in energy_names:
        C_phi = 1.0 / params.E_C_phi
        energies = {n: getattr(params, n) for n in energy_names}
        energies[name] = value
        return CircuitParams.from_energies(
            cg_fraction=params.C_g / C_phi, c0_fraction=params.C_0 / C_phi,
            omega_p_over_2pi=params.omega_p_over_2pi,
            dE_J=params.dE_J, dE_L=params.dE_L, dC=params.dC, dC_J=params.dC_J,
            dC_g=params.dC_g, dC_0=params.dC_0,
            phi_ext=params.phi_ext, n_g_theta=params.n_g_theta, **energies)
    return params.with_(**{name: value})


def sweep_point(params: CircuitParams, basis: BasisSpec,
                modes: tuple[str, ...], k: int,
                element_pairs: tuple[tuple[int, int], ...] = ()) -> dict:
    """Diagonalize one parameter point and summarize it as a flat record."""
    ops = ModeOperators(params, basis, modes)
    h = build_hamiltonian(params, basis, modes, ops=ops)
    spec = diagonalize(h, k, basis_used=basis)
    row: dict = {f"E_{i}": float(spec.eigenvalues[i]) for i in range(k)}
    for idx, (i, j, s) in enumerate(spec.doublets):
        row[f"doublet_{idx}_lo"] = i
        row[f"doublet_{idx}_hi"] = j
        row[f"splitting_{idx}"] = s
    if element_pairs:
        n_theta = embed({"theta": ops.n_ops["theta"]}, ops.dims, ops.modes)
        for (i, j) in element_pairs:
            val = matrix_element(n_theta, spec, i, j)
            row[f"abs_n_theta_{i}{j}"] = abs(val)
    return row


def sweep(params: CircuitParams, axis: str, grid, basis: BasisSpec,
          modes: tuple[str, ...] = ("theta", "phi"), k: int = 12,
          element_pairs: tuple[tuple[int, int], ...] = (),
          workers: int = 1) -> list[dict]:
    """Per-grid-point spectral summaries along one parameter axis.

    Point failures are recorded in the row's ``error`` field and the sweep
    continues; rows come back in grid order regardless of worker count.
    """
    grid = list(grid)
    if not grid:
        raise ParameterError("sweep grid must be nonempty")
    tasks = [(params, axis, float(g), basis, modes, k, element_pairs)
             for g in grid]

    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_worker, tasks))
    else:
        rows = [_sweep_worker(t) for t in tasks]
    for value, row in zip(grid, rows):
        row[axis] = float(value)
    return rows


def _sweep_worker(task):
    params, axis, value, basis, modes, k, element_pairs = task
    try:
        point = _rebuild_with(params, axis, value)
        return sweep_point(point, basis, modes, k, element_pairs)
    except Exception as exc:  # propagate as data, not as a crashed worker
        return {"error": f"{type(exc).__name__}: {exc}"}
