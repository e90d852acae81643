"""Circuit parameters, truncated-basis specifications and derived quantities.

Unit conventions used throughout the package:

* Energies are dimensionless, expressed in units of the junction plasma
  energy ``hbar * omega_p``.  Conversion to Hz happens only at I/O
  boundaries through :attr:`CircuitParams.omega_p_over_2pi`.
* Capacitances are expressed in units of ``e^2 / (2 hbar omega_p)`` so that
  the charging energy of a mode is simply ``E_C_mu = 1 / C_mu``.
* Charge operators are stored as the integer-valued ``n_mu = q_mu / 2e``;
  the Cooper-pair charge ``2e`` is folded into coupling coefficients, which
  therefore come out directly as angular frequencies (in omega_p units).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace


#: Z_phi / R_Q = sqrt(E_C_phi / E_L) / pi with the conventions above
#: (Z_phi = sqrt((L/2)/C_phi), R_Q = h/(2e)^2).
_IMPEDANCE_PREFACTOR = 1.0 / math.pi

#: Warn when a coupling capacitance ratio exceeds this value: the
#: voltage-replacement treatment of drives and resonators assumes weak
#: capacitive coupling and no quantitative bound is available beyond that.
WEAK_COUPLING_WARN_RATIO = 0.3


class ParameterError(ValueError):
    """Raised for physically inconsistent circuit parameters."""


def mode_capacitances_from_values(C: float, C_J: float, C_g: float = 0.0,
                                  C_0: float = 0.0) -> tuple[float, float, float, float]:
    """Mode capacitances (C_phi, C_theta, C_zeta, C_sigma) of the four normal modes.

    C_phi  = C_0 + C_g + 2 C_J
    C_theta = C_0 + C_g + 2 (C + C_J)
    C_zeta = C_0 + C_g + 2 C
    C_sigma = C_0 + C_g

    Raises :class:`ParameterError` if any derived capacitance is not
    strictly positive.
    """
    base = C_0 + C_g
    caps = (base + 2.0 * C_J, base + 2.0 * (C + C_J), base + 2.0 * C, base)
    labels = ("C_phi", "C_theta", "C_zeta", "C_sigma")
    for label, value in zip(labels, caps):
        if value <= 0.0:
            raise ParameterError(f"derived mode capacitance {label} = {value!r} "
                                 "is not strictly positive")
    return caps


@dataclass(frozen=True)
class CircuitParams:
    """All energies, capacitances and disorder fractions of the 0-pi circuit.

    ``E_J``, ``E_L``, ``E_C_theta`` and ``E_C_phi`` are in units of
    ``hbar * omega_p``.  Capacitances ``C``, ``C_J``, ``C_g``, ``C_0`` share
    one fixed relative scale (see module docstring) and must be consistent
    with the charging energies; use :meth:`from_energies` instead of the
    raw constructor unless you have already solved for them.

    Disorder fractions follow the symmetric split convention
    ``X_{1,2} = X (1 +/- dX / 2)`` for pairwise elements, which reproduces
    the leading-order disorder Hamiltonian coefficients exactly.
    """

    E_J: float
    E_L: float
    E_C_theta: float
    E_C_phi: float
    C: float
    C_J: float
    C_g: float = 0.0
    C_0: float = 0.0
    omega_p_over_2pi: float = 4.0e10
    dE_J: float = 0.0
    dE_L: float = 0.0
    dC: float = 0.0
    dC_J: float = 0.0
    dC_g: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    dC_0: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    phi_ext: float = 0.0
    n_g_theta: float = 0.0

    def __post_init__(self):
        for name in ("E_J", "E_L", "E_C_theta", "E_C_phi", "omega_p_over_2pi"):
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"{name} must be strictly positive")
        for name in ("dE_J", "dE_L", "dC", "dC_J"):
            if abs(getattr(self, name)) >= 1.0:
                raise ParameterError(f"|{name}| must be < 1")
        for name in ("dC_g", "dC_0"):
            vals = tuple(float(v) for v in getattr(self, name))
            if len(vals) != 4:
                raise ParameterError(f"{name} must have exactly four entries")
            if any(abs(v) >= 1.0 for v in vals):
                raise ParameterError(f"all |{name}| entries must be < 1")
            object.__setattr__(self, name, vals)
        caps = mode_capacitances_from_values(self.C, self.C_J, self.C_g, self.C_0)
        # The stored charging energies must agree with the capacitance network.
        for e_name, cap in (("E_C_phi", caps[0]), ("E_C_theta", caps[1])):
            stated = getattr(self, e_name)
            if abs(stated - 1.0 / cap) > 1e-9 * stated:
                raise ParameterError(
                    f"{e_name} = {stated!r} inconsistent with mode capacitance "
                    f"{1.0 / cap!r}; build parameters with CircuitParams.from_energies")

    @classmethod
    def from_energies(cls, E_J: float, E_L: float, E_C_theta: float,
                      E_C_phi: float, *, cg_fraction: float = 0.01,
                      c0_fraction: float = 0.01, **kwargs) -> "CircuitParams":
        """Solve the capacitance network for the given charging energies.

        ``cg_fraction`` and ``c0_fraction`` set the gate and ground
        capacitances as fractions of the phi-mode capacitance; they must
        sum below one so the junction capacitance stays positive.
        """
        if E_C_theta <= 0 or E_C_phi <= 0:
            raise ParameterError("charging energies must be strictly positive")
        C_phi = 1.0 / E_C_phi
        C_theta = 1.0 / E_C_theta
        if C_theta <= C_phi:
            raise ParameterError("E_C_theta must be smaller than E_C_phi "
                                 "(C_theta > C_phi in the 0-pi circuit)")
        if not 0.0 <= cg_fraction + c0_fraction < 1.0:
            raise ParameterError("cg_fraction + c0_fraction must lie in [0, 1)")
        C_g = cg_fraction * C_phi
        C_0 = c0_fraction * C_phi
        C_J = 0.5 * (C_phi - C_g - C_0)
        C = 0.5 * (C_theta - C_phi)
        return cls(E_J=E_J, E_L=E_L, E_C_theta=E_C_theta, E_C_phi=E_C_phi,
                   C=C, C_J=C_J, C_g=C_g, C_0=C_0, **kwargs)

    # -- derived quantities -------------------------------------------------

    def mode_capacitances(self) -> tuple[float, float, float, float]:
        """(C_phi, C_theta, C_zeta, C_sigma) of the normal modes."""
        return mode_capacitances_from_values(self.C, self.C_J, self.C_g, self.C_0)

    @property
    def E_C_zeta(self) -> float:
        return 1.0 / self.mode_capacitances()[2]

    @property
    def E_C_sigma(self) -> float:
        return 1.0 / self.mode_capacitances()[3]

    @property
    def omega_phi(self) -> float:
        """Harmonic frequency of the bare phi mode, 4 sqrt(E_C_phi E_L)."""
        return 4.0 * math.sqrt(self.E_C_phi * self.E_L)

    @property
    def omega_zeta(self) -> float:
        """Harmonic frequency of the zeta mode, 4 sqrt(E_C_zeta E_L)."""
        return 4.0 * math.sqrt(self.E_C_zeta * self.E_L)

    @property
    def z_phi_over_rq(self) -> float:
        return _IMPEDANCE_PREFACTOR * math.sqrt(self.E_C_phi / self.E_L)

    @property
    def z_theta_over_rq(self) -> float:
        return _IMPEDANCE_PREFACTOR * math.sqrt(self.E_C_theta / self.E_J)

    def regime_report(self) -> dict:
        """Impedance hierarchy check: the 0-pi regime needs Z_theta < R_Q < Z_phi."""
        z_phi = self.z_phi_over_rq
        z_theta = self.z_theta_over_rq
        return {
            "z_phi_over_rq": z_phi,
            "z_theta_over_rq": z_theta,
            "in_regime": z_theta < 1.0 < z_phi,
        }

    def coupling_ratio(self, mode: str) -> float:
        """C_g / C_mu for mode in {'phi', 'theta', 'zeta', 'sigma'}.

        Warns above :data:`WEAK_COUPLING_WARN_RATIO` where the weak-coupling
        voltage replacement becomes questionable.
        """
        caps = dict(zip(("phi", "theta", "zeta", "sigma"), self.mode_capacitances()))
        if mode not in caps:
            raise ParameterError(f"unknown mode label {mode!r}")
        ratio = self.C_g / caps[mode]
        if ratio > WEAK_COUPLING_WARN_RATIO:
            warnings.warn(
                f"C_g/C_{mode} = {ratio:.3g} exceeds {WEAK_COUPLING_WARN_RATIO}; "
                "the weak-coupling voltage replacement may be inaccurate",
                stacklevel=2)
        return ratio

    def with_(self, **changes) -> "CircuitParams":
        """Functional update preserving validation."""
        return replace(self, **changes)


@dataclass(frozen=True)
class BasisSpec:
    """Truncation cutoffs for the tensor-product basis.

    theta uses the Cooper-pair charge basis with ``n in [-n_charge_max,
    n_charge_max]``; phi, zeta and the resonator use Fock bases of their
    quadratic parts.
    """

    n_charge_max: int = 30
    n_fock_phi: int = 40
    n_fock_zeta: int = 10
    n_fock_res: int = 5
    convergence_tol: float = 1e-8
    dim_limit: int = 200_000

    def __post_init__(self):
        for name in ("n_charge_max", "n_fock_phi", "n_fock_zeta", "n_fock_res"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1")
        if self.dim_limit < 1:
            raise ParameterError("dim_limit must be >= 1")

    def dim(self, mode: str) -> int:
        if mode == "theta":
            return 2 * self.n_charge_max + 1
        if mode == "phi":
            return self.n_fock_phi
        if mode == "zeta":
            return self.n_fock_zeta
        if mode == "sigma":
            return self.n_fock_res  # reused cutoff; sigma is optional
        if mode == "resonator":
            return self.n_fock_res
        raise ParameterError(f"unknown mode label {mode!r}")

    def total_dim(self, modes: tuple[str, ...]) -> int:
        total = 1
        for mode in modes:
            total *= self.dim(mode)
        return total

    def check_limit(self, modes: tuple[str, ...]) -> None:
        total = self.total_dim(modes)
        if total > self.dim_limit:
            raise ParameterError(
                f"total Hilbert dimension {total} for modes {modes} exceeds "
                f"the configured limit {self.dim_limit}")

    def with_(self, **changes) -> "BasisSpec":
        return replace(self, **changes)
