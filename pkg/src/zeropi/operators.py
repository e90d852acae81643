"""Elementary operators on the truncated single-mode bases, plus the labeled
operator container used by all builders.

Everything here is representation-level plumbing: charge-basis shift and
number operators for the compact theta coordinate, oscillator quadratures
for phi/zeta/resonator, and Kronecker embedding over an ordered mode list.
Built operators are immutable and safe to share across parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class OperatorMatrix:
    """A complex matrix labeled by its truncated tensor-product basis.

    ``basis`` is an ordered tuple of ``(subsystem label, dimension)`` pairs;
    the matrix dimension must equal the product of the subsystem dimensions.
    When ``hermitian`` is set the constructor asserts
    ``max|A - A^dagger| < 1e-12`` (units of hbar omega_p).
    """

    data: object  # scipy sparse matrix or ndarray
    basis: tuple[tuple[str, int], ...]
    hermitian: bool = True

    def __post_init__(self):
        expected = 1
        for _, d in self.basis:
            expected *= d
        n, m = self.data.shape
        if n != m or n != expected:
            raise ValueError(f"operator shape {self.data.shape} does not match "
                             f"basis dimension {expected}")
        if self.hermitian:
            dev = hermiticity_defect(self.data)
            if dev >= HERMITICITY_TOL:
                raise ValueError(f"operator flagged hermitian but max|A - A^dag| "
                                 f"= {dev:.3e}")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def mode_labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.basis)

    def toarray(self) -> np.ndarray:
        if sp.issparse(self.data):
            return self.data.toarray()
        return np.asarray(self.data)

    def same_basis(self, other: "OperatorMatrix") -> bool:
        return self.basis == other.basis


def hermiticity_defect(matrix) -> float:
    """max|A - A^dagger| entrywise, for sparse or dense input."""
    if sp.issparse(matrix):
        diff = (matrix - matrix.getH()).tocoo()
        return float(np.abs(diff.data).max()) if diff.nnz else 0.0
    arr = np.asarray(matrix)
    return float(np.abs(arr - arr.conj().T).max())


# -- theta: Cooper-pair charge basis ----------------------------------------

def charge_number(n_max: int) -> sp.dia_matrix:
    """n_theta = diag(-n_max ... n_max)."""
    return sp.diags(np.arange(-n_max, n_max + 1, dtype=float))


def charge_shift(n_max: int, k: int = 1) -> sp.dia_matrix:
    """Translation exp(i k theta): |n> -> |n + k> on the truncated window."""
    dim = 2 * n_max + 1
    if abs(k) >= dim:
        return sp.dia_matrix((dim, dim))
    return sp.diags(np.ones(dim - abs(k)), -k)


def cos_k_theta(n_max: int, k: int = 1) -> sp.spmatrix:
    """cos(k theta) = (e^{ik theta} + e^{-ik theta}) / 2."""
    up = charge_shift(n_max, k)
    return 0.5 * (up + up.T)


def sin_k_theta(n_max: int, k: int = 1) -> sp.spmatrix:
    """sin(k theta) = (e^{ik theta} - e^{-ik theta}) / (2i)."""
    up = charge_shift(n_max, k)
    return (up - up.T).astype(complex) * (-0.5j)


def displacement_by_pi(n_max: int) -> sp.dia_matrix:
    """exp(-i pi n_theta): diagonal (-1)^n in the charge basis."""
    n = np.arange(-n_max, n_max + 1)
    return sp.diags(np.where(n % 2 == 0, 1.0, -1.0))


# -- oscillator modes --------------------------------------------------------

def destroy(dim: int) -> sp.dia_matrix:
    return sp.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def number_op(dim: int) -> sp.dia_matrix:
    return sp.diags(np.arange(dim, dtype=float))


def osc_position(zpf: float, dim: int) -> np.ndarray:
    """x = zpf (a + a^dagger); real symmetric tridiagonal, dense."""
    a = destroy(dim).toarray()
    return zpf * (a + a.T)


def osc_momentum_like(zpf: float, dim: int) -> np.ndarray:
    """Conjugate-charge operator n = i zpf_n (a^dagger - a), dense complex."""
    a = destroy(dim).toarray().astype(complex)
    return 1j * zpf * (a.T - a)


def osc_zpf(E_C: float, E_L: float) -> tuple[float, float, float]:
    """(omega, x_zpf, n_zpf) of H = 4 E_C n^2 + E_L x^2.

    omega = 4 sqrt(E_C E_L), x_zpf = sqrt(4 E_C / omega),
    n_zpf = sqrt(omega / (16 E_C)); x_zpf * n_zpf = 1/2 so that [x, n] = i.
    """
    omega = 4.0 * np.sqrt(E_C * E_L)
    x_zpf = np.sqrt(4.0 * E_C / omega)
    n_zpf = np.sqrt(omega / (16.0 * E_C))
    return omega, x_zpf, n_zpf


def osc_cos_sin(x_zpf: float, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """cos(x) and sin(x) of the position operator, via its eigenbasis.

    Exact on the truncated space and exactly Hermitian, unlike a Taylor
    series.  Shifted arguments follow from the angle-sum identities, e.g.
    cos(x - c) = cos(x) cos(c) + sin(x) sin(c), since c is a scalar.
    """
    x = osc_position(x_zpf, dim)
    vals, vecs = np.linalg.eigh(x)
    cos_x = (vecs * np.cos(vals)) @ vecs.T
    sin_x = (vecs * np.sin(vals)) @ vecs.T
    # symmetrize away last-bit asymmetry from the matrix products
    cos_x = 0.5 * (cos_x + cos_x.T)
    sin_x = 0.5 * (sin_x + sin_x.T)
    return cos_x, sin_x


# -- tensor embedding ---------------------------------------------------------

def kron_chain(blocks: list) -> sp.spmatrix:
    """Sparse Kronecker product of the given blocks, in order."""
    out = None
    for block in blocks:
        block = sp.csr_matrix(block)
        out = block if out is None else sp.kron(out, block, format="csr")
    return out


def embed(ops: dict, dims: dict, order: tuple[str, ...]) -> sp.spmatrix:
    """Embed per-mode operators into the tensor space defined by ``order``.

    ``ops`` maps a subset of labels to single-mode matrices; missing labels
    get identities of dimension ``dims[label]``.
    """
    blocks = []
    for label in order:
        blocks.append(ops.get(label, sp.identity(dims[label], format="csr")))
    return kron_chain(blocks)
