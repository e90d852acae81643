"""Hamiltonian and drive operators of the (possibly disordered) 0-pi circuit.

The circuit has four nodes; its normal modes are

    2 phi   = (p2 - p3) + (p4 - p1)
    2 theta = (p2 - p1) - (p4 - p3)
    2 zeta  = (p2 - p3) - (p4 - p1)
    2 Sigma = p1 + p2 + p3 + p4

with p_i the node phases.  theta lives on the Cooper-pair charge basis,
phi and zeta on harmonic-oscillator bases of their quadratic parts and the
optional Sigma mode on a reference oscillator basis (it has no potential;
the basis choice only affects truncation).  The symmetric Hamiltonian is

    H = sum_mu 4 E_C_mu (n_mu - ng_mu)^2
        - 2 E_J cos(theta) cos(phi - phi_ext/2) + E_L (phi^2 + zeta^2)

and pairwise element disorder, split as X_{1,2} = X (1 +/- dX/2), adds the
leading-order coupling terms between modes.  All operator construction here
is pure; returned operators are immutable.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .operators import (OperatorMatrix, charge_number, cos_k_theta, destroy,
                        embed, number_op, osc_cos_sin, osc_momentum_like,
                        osc_position, osc_zpf, sin_k_theta)
from .params import BasisSpec, CircuitParams, ParameterError

CANONICAL_ORDER = ("theta", "phi", "zeta", "sigma")

#: q_mu q_nu = (2e)^2 n_mu n_nu = 8 n_mu n_nu in units where e^2/2 = 1.
_Q_SQUARED = 8.0

# Normal-mode transformation: rows (phi, theta, zeta, Sigma) acting on node
# phases (p1, p2, p3, p4).  Orthogonal.
NORMAL_MODE_MATRIX = 0.5 * np.array([
    [-1.0, 1.0, -1.0, 1.0],
    [-1.0, 1.0, 1.0, -1.0],
    [1.0, 1.0, -1.0, -1.0],
    [1.0, 1.0, 1.0, 1.0],
])


class ConfigurationError(ValueError):
    """Raised when a builder is asked for terms its basis cannot represent."""


def node_to_normal(node_values) -> np.ndarray:
    """Map node-space 4-vectors to normal-mode coordinates (phi, theta, zeta, Sigma)."""
    values = np.asarray(node_values, dtype=float)
    if values.shape[-1] != 4:
        raise ValueError("expected a 4-vector of node values")
    return values @ NORMAL_MODE_MATRIX.T


def mode_capacitances(params: CircuitParams) -> tuple[float, float, float, float]:
    """(C_phi, C_theta, C_zeta, C_sigma); errors on non-positive results."""
    return params.mode_capacitances()


def _check_modes(modes: tuple[str, ...]) -> tuple[str, ...]:
    modes = tuple(modes)
    if not modes:
        raise ConfigurationError("at least one mode is required")
    filtered = tuple(m for m in CANONICAL_ORDER if m in modes)
    if set(filtered) != set(modes):
        unknown = set(modes) - set(CANONICAL_ORDER)
        raise ConfigurationError(f"unknown mode labels {sorted(unknown)}")
    if filtered != modes:
        raise ConfigurationError(
            f"modes must follow the canonical order {CANONICAL_ORDER}, got {modes}")
    return modes


class ModeOperators:
    """Per-mode elementary operators on a given truncation, built once.

    Caches the oscillator cos/sin matrices of phi, which dominate the build
    cost; instances are cheap to share between the builders below.
    """

    def __init__(self, params: CircuitParams, basis: BasisSpec,
                 modes: tuple[str, ...] = ("theta", "phi")):
        self.params = params
        self.basis = basis
        self.modes = _check_modes(modes)
        basis.check_limit(self.modes)
        self.dims = {m: basis.dim(m) for m in self.modes}

        p = params
        self.n_ops: dict[str, np.ndarray] = {}
        self.x_ops: dict[str, np.ndarray] = {}
        if "theta" in self.modes:
            self.n_ops["theta"] = charge_number(basis.n_charge_max)
        if "phi" in self.modes:
            _, x_zpf, n_zpf = osc_zpf(p.E_C_phi, p.E_L)
            d = self.dims["phi"]
            self.x_ops["phi"] = osc_position(x_zpf, d)
            self.n_ops["phi"] = osc_momentum_like(n_zpf, d)
            self.cos_phi, self.sin_phi = osc_cos_sin(x_zpf, d)
        if "zeta" in self.modes:
            _, x_zpf, n_zpf = osc_zpf(p.E_C_zeta, p.E_L)
            d = self.dims["zeta"]
            self.x_ops["zeta"] = osc_position(x_zpf, d)
            self.n_ops["zeta"] = osc_momentum_like(n_zpf, d)
        if "sigma" in self.modes:
            # Reference-oscillator basis: Sigma is free, so only n_sigma matters.
            _, _, n_zpf = osc_zpf(p.E_C_sigma, p.E_L)
            self.n_ops["sigma"] = osc_momentum_like(n_zpf, self.dims["sigma"])

    def embed(self, ops: dict) -> sp.spmatrix:
        return embed(ops, self.dims, self.modes)

    def cos_phi_shifted(self, phi_ext: float) -> np.ndarray:
        """cos(phi - phi_ext / 2) on the phi slot."""
        c = 0.5 * phi_ext
        return np.cos(c) * self.cos_phi + np.sin(c) * self.sin_phi

    def sin_phi_shifted(self, phi_ext: float) -> np.ndarray:
        """sin(phi - phi_ext / 2) on the phi slot."""
        c = 0.5 * phi_ext
        return np.cos(c) * self.sin_phi - np.sin(c) * self.cos_phi

    def basis_labels(self) -> tuple[tuple[str, int], ...]:
        return tuple((m, self.dims[m]) for m in self.modes)


def build_h_symm(params: CircuitParams, basis: BasisSpec,
                 modes: tuple[str, ...] = ("theta", "phi"),
                 ops: ModeOperators | None = None) -> OperatorMatrix:
    """Disorder-free 0-pi Hamiltonian on the requested modes.

    theta enters through 4 E_C_theta (n_theta - n_g)^2 in the charge basis;
    phi and zeta through their exact oscillator ladders; the Josephson term
    -2 E_J cos(theta) cos(phi - phi_ext/2) is built from operator cos/sin
    matrices (exact on the truncated space).  With zero disorder the zeta
    sector enters only through its free ladder, so the matrix is exactly
    block-diagonal between {theta, phi} and zeta.
    """
    ops = ops or ModeOperators(params, basis, modes)
    p = params
    n_theta = ops.n_ops["theta"]
    dim_theta = ops.dims["theta"]
    kinetic_theta = 4.0 * p.E_C_theta * (n_theta - p.n_g_theta * sp.identity(dim_theta)) ** 2

    terms = ops.embed({"theta": kinetic_theta})
    if "phi" in ops.modes:
        omega_phi, _, _ = osc_zpf(p.E_C_phi, p.E_L)
        h_phi = omega_phi * (number_op(ops.dims["phi"]) + 0.5 * sp.identity(ops.dims["phi"]))
        terms = terms + ops.embed({"phi": h_phi})
        josephson = -2.0 * p.E_J * ops.embed({
            "theta": cos_k_theta(basis.n_charge_max),
            "phi": ops.cos_phi_shifted(p.phi_ext),
        })
        terms = terms + josephson
    if "zeta" in ops.modes:
        omega_zeta, _, _ = osc_zpf(p.E_C_zeta, p.E_L)
        h_zeta = omega_zeta * (number_op(ops.dims["zeta"]) + 0.5 * sp.identity(ops.dims["zeta"]))
        terms = terms + ops.embed({"zeta": h_zeta})
    if "sigma" in ops.modes:
        n_sigma = ops.n_ops["sigma"]
        terms = terms + ops.embed({"sigma": 4.0 * p.E_C_sigma * (n_sigma @ n_sigma)})
    return OperatorMatrix(terms.tocsr(), ops.basis_labels(), hermitian=True)


def build_h_asymm(params: CircuitParams, basis: BasisSpec,
                  modes: tuple[str, ...] = ("theta", "phi", "zeta"),
                  ops: ModeOperators | None = None) -> OperatorMatrix:
    """Leading-order disorder couplings between the circuit modes.

    Implements - (C dC / C_zeta C_theta) q_theta q_zeta
               - (C_J dC_J / C_phi C_theta) q_phi q_theta
               + E_J dE_J sin(theta) sin(phi - phi_ext/2)
               + E_L dE_L phi zeta,
    identically zero when all disorder fractions vanish.
    """
    ops = ops or ModeOperators(params, basis, modes)
    p = params
    C_phi, C_theta, C_zeta, _ = p.mode_capacitances()
    if "zeta" not in ops.modes and (p.dC != 0.0 or p.dE_L != 0.0):
        raise ConfigurationError(
            "dC or dE_L disorder couples the zeta mode; include it in the basis")

    dim = ops.basis.total_dim(ops.modes)
    total = sp.csr_matrix((dim, dim), dtype=complex)
    if p.dC_J != 0.0:
        coeff = -_Q_SQUARED * p.C_J * p.dC_J / (C_phi * C_theta)
        total = total + coeff * ops.embed({"theta": ops.n_ops["theta"],
                                           "phi": ops.n_ops["phi"]})
    if p.dE_J != 0.0:
        total = total + p.E_J * p.dE_J * ops.embed({
            "theta": sin_k_theta(basis.n_charge_max),
            "phi": ops.sin_phi_shifted(p.phi_ext),
        })
    if p.dC != 0.0:
        coeff = -_Q_SQUARED * p.C * p.dC / (C_zeta * C_theta)
        total = total + coeff * ops.embed({"theta": ops.n_ops["theta"],
                                           "zeta": ops.n_ops["zeta"]})
    if p.dE_L != 0.0:
        total = total + p.E_L * p.dE_L * ops.embed({"phi": ops.x_ops["phi"],
                                                    "zeta": ops.x_ops["zeta"]})
    return OperatorMatrix(total.tocsr(), ops.basis_labels(), hermitian=True)


def build_hamiltonian(params: CircuitParams, basis: BasisSpec,
                      modes: tuple[str, ...] = ("theta", "phi"),
                      ops: ModeOperators | None = None) -> OperatorMatrix:
    """H_symm plus the disorder terms active for the given parameters."""
    ops = ops or ModeOperators(params, basis, modes)
    h = build_h_symm(params, basis, modes, ops=ops)
    p = params
    if any(x != 0.0 for x in (p.dC, p.dC_J, p.dE_J, p.dE_L)):
        h_asymm = build_h_asymm(params, basis, modes, ops=ops)
        return OperatorMatrix(h.data + h_asymm.data, h.basis, hermitian=True)
    return h


def _mode_disorder_components(node_fractions: tuple[float, ...]) -> dict[str, float]:
    """Transform per-node disorder fractions with the normal-mode rule."""
    vec = NORMAL_MODE_MATRIX @ np.asarray(node_fractions, dtype=float)
    return dict(zip(("phi", "theta", "zeta", "sigma"), vec))


def build_drive_ops(params: CircuitParams, basis: BasisSpec,
                    modes: tuple[str, ...] = ("theta", "phi"),
                    include_sigma_rows: bool = False,
                    include_dcg_dc0_rows: bool = False,
                    ops: ModeOperators | None = None) -> dict[str, OperatorMatrix]:
    """Charge-coupling operator multiplying each mode voltage.

    The returned operator for mode ``mu`` is the coefficient of the reduced
    voltage ``v_mu = 2 e V_mu / (hbar omega_p)``; for the symmetric circuit
    it is ``(C_g / C_mu) n_mu``, and capacitance disorder adds the cross
    drives ``-(C_g C_J dC_J / C_phi C_theta) n_phi`` etc.  Rows involving the
    Sigma mode or gate/ground-capacitance disorder are emitted only when
    explicitly enabled.
    """
    ops = ops or ModeOperators(params, basis, modes)
    p = params
    caps = dict(zip(("phi", "theta", "zeta", "sigma"), p.mode_capacitances()))

    coeffs: dict[str, dict[str, float]] = {m: {} for m in ops.modes}
    for mu in ops.modes:
        if mu == "sigma" and not include_sigma_rows:
            continue
        coeffs[mu][mu] = p.C_g / caps[mu]
    cross_phi_theta = p.C_g * p.C_J * p.dC_J / (caps["phi"] * caps["theta"])
    cross_zeta_theta = p.C_g * p.C * p.dC / (caps["zeta"] * caps["theta"])
    if p.dC_J != 0.0 and "phi" in ops.modes:
        coeffs["theta"]["phi"] = coeffs["theta"].get("phi", 0.0) - cross_phi_theta
        coeffs["phi"]["theta"] = coeffs["phi"].get("theta", 0.0) - cross_phi_theta
    if p.dC != 0.0:
        if "zeta" not in ops.modes:
            raise ConfigurationError("dC cross drive requires the zeta mode")
        coeffs["theta"]["zeta"] = coeffs["theta"].get("zeta", 0.0) - cross_zeta_theta
        coeffs["zeta"]["theta"] = coeffs["zeta"].get("theta", 0.0) - cross_zeta_theta

    if include_dcg_dc0_rows:
        _add_dcg_dc0_drive_rows(coeffs, params, ops, include_sigma_rows)

    out = {}
    for mu, row in coeffs.items():
        if not row:
            continue
        dim = ops.basis.total_dim(ops.modes)
        total = sp.csr_matrix((dim, dim), dtype=complex)
        for target, coeff in row.items():
            total = total + coeff * ops.embed({target: ops.n_ops[target]})
        out[mu] = OperatorMatrix(total.tocsr(), ops.basis_labels(), hermitian=True)
    return out


def _add_dcg_dc0_drive_rows(coeffs, params: CircuitParams, ops: ModeOperators,
                            include_sigma_rows: bool) -> None:
    """Gate/ground-capacitance disorder rows of the drive Hamiltonian.

    Coefficients follow the exactly inverted node capacitance network,
    (C_g / C_mu C_nu) [ (C_nu - C_g)/2 dC_g_sigma - C_0/2 dC_0_sigma ]
    for the V_nu q_mu cross rows, with sigma the group-complement mode.
    """
    p = params
    caps = dict(zip(("phi", "theta", "zeta", "sigma"), p.mode_capacitances()))
    dcg = _mode_disorder_components(p.dC_g)
    dc0 = _mode_disorder_components(p.dC_0)
    qmodes = [m for m in ("phi", "theta", "zeta") if m in ops.modes]

    def bracket(mode_label: str, c_ref: float) -> float:
        return (0.5 * (c_ref - p.C_g) * dcg[mode_label]
                - 0.5 * p.C_0 * dc0[mode_label])

    for mu in qmodes:
        # V_mu q_mu row with the Sigma component of the disorder
        coeffs[mu][mu] = coeffs[mu].get(mu, 0.0) + (
            p.C_g / caps[mu] ** 2) * bracket("sigma", caps[mu])
        # V_nu q_mu rows, sigma the remaining qubit-sector label
        for nu in qmodes:
            if nu == mu:
                continue
            remaining = ({"phi", "theta", "zeta"} - {mu, nu}).pop()
            coeffs[nu][mu] = coeffs[nu].get(mu, 0.0) + (
                p.C_g / (caps[mu] * caps[nu])) * bracket(remaining, caps[nu])
    if include_sigma_rows and "sigma" in ops.modes:
        for mu in qmodes:
            coeffs.setdefault("sigma", {})
            coeffs["sigma"][mu] = coeffs["sigma"].get(mu, 0.0) + (
                p.C_g / (caps[mu] * caps["sigma"])) * bracket(mu, caps["sigma"])
            coeffs[mu]["sigma"] = coeffs[mu].get("sigma", 0.0) + (
                p.C_g / (caps[mu] * caps["sigma"])) * bracket(mu, caps[mu])
        coeffs.setdefault("sigma", {})
        coeffs["sigma"]["sigma"] = coeffs["sigma"].get("sigma", 0.0) + (
            p.C_g / caps["sigma"] ** 2) * bracket("sigma", caps["sigma"])


def build_resonator_coupling(params: CircuitParams, mode: str, ev_rms: float,
                             basis: BasisSpec,
                             modes: tuple[str, ...] = ("theta", "phi"),
                             cg_over_cmu: float | None = None,
                             ops: ModeOperators | None = None) -> OperatorMatrix:
    """Capacitive qubit-resonator coupling from the voltage replacement rule.

    Substituting V_mu -> i V_rms (a^dag - a)/2 into the drive term gives
    (C_g/C_mu) (e V_rms) n_mu x i(a^dag - a); ``ev_rms`` is e V_rms in units
    of hbar omega_p.  ``cg_over_cmu`` overrides the stored capacitance ratio
    (the ratio is commonly quoted as a design assumption per coupled mode).
    """
    if mode not in ("theta", "phi", "zeta"):
        raise ParameterError(f"unknown coupling mode {mode!r}")
    ops = ops or ModeOperators(params, basis, modes)
    if mode not in ops.modes:
        raise ConfigurationError(f"coupling mode {mode!r} absent from basis modes")
    ratio = params.coupling_ratio(mode) if cg_over_cmu is None else cg_over_cmu

    dims = dict(ops.dims)
    dims["resonator"] = basis.dim("resonator")
    order = ops.modes + ("resonator",)
    a = destroy(dims["resonator"]).toarray().astype(complex)
    quad = 1j * (a.conj().T - a)
    coupling = ratio * ev_rms * embed(
        {mode: ops.n_ops[mode], "resonator": quad}, dims, order)
    return OperatorMatrix(coupling.tocsr(),
                          tuple((m, dims[m]) for m in order), hermitian=True)


def build_h_dcg_dc0(params: CircuitParams, basis: BasisSpec,
                    modes: tuple[str, ...] = CANONICAL_ORDER,
                    ops: ModeOperators | None = None) -> OperatorMatrix:
    """Purely capacitive gate/ground-capacitance disorder term (off by default).

    Three sums: a q_mu^2 correction from the Sigma disorder component,
    qubit-sector cross terms q_mu q_nu keyed by the remaining mode, and
    q_mu q_Sigma couplings.  Zero when all dC_g, dC_0 vanish.  Requires all
    four modes in the basis.
    """
    ops = ops or ModeOperators(params, basis, modes)
    if set(ops.modes) != set(CANONICAL_ORDER):
        raise ConfigurationError("build_h_dcg_dc0 requires all four circuit modes")
    p = params
    caps = dict(zip(("phi", "theta", "zeta", "sigma"), p.mode_capacitances()))
    dcg = _mode_disorder_components(p.dC_g)
    dc0 = _mode_disorder_components(p.dC_0)

    def bracket(label: str) -> float:
        return 0.5 * p.C_g * dcg[label] + 0.5 * p.C_0 * dc0[label]

    dim = ops.basis.total_dim(ops.modes)
    total = sp.csr_matrix((dim, dim), dtype=complex)
    sigma_bracket = bracket("sigma")
    if sigma_bracket != 0.0:
        for mu in CANONICAL_ORDER:
            n_mu = ops.n_ops[mu]
            coeff = -0.5 * _Q_SQUARED * sigma_bracket / caps[mu] ** 2
            total = total + coeff * ops.embed({mu: n_mu @ n_mu})
    qmodes = ("phi", "theta", "zeta")
    for mu in qmodes:
        for nu in qmodes:
            if nu == mu:
                continue
            remaining = ({"phi", "theta", "zeta"} - {mu, nu}).pop()
            coeff = -0.5 * _Q_SQUARED * bracket(remaining) / (caps[mu] * caps[nu])
            if coeff != 0.0:
                total = total + coeff * ops.embed({mu: ops.n_ops[mu],
                                                   nu: ops.n_ops[nu]})
    for mu in qmodes:
        coeff = -_Q_SQUARED * bracket(mu) / (caps["sigma"] * caps[mu])
        if coeff != 0.0:
            total = total + coeff * ops.embed({mu: ops.n_ops[mu],
                                               "sigma": ops.n_ops["sigma"]})
    return OperatorMatrix(total.tocsr(), ops.basis_labels(), hermitian=True)
