"""Figure rendering for the command-line report path.

Each CLI command gets one PNG next to its CSV so a run is immediately
inspectable; the core library never imports matplotlib, keeping plotting
an I/O-boundary concern.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return path


def render_spectrum(rows: list[dict], path: str, axis: str | None) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ok = [r for r in rows if "error" not in r]
    levels = sorted(k for k in (ok[0] if ok else {}) if k.startswith("E_") and k[2:].isdigit())
    if axis and len(ok) > 1:
        x = [r[axis] for r in ok]
        for name in levels:
            ax.plot(x, [r[name] - r["E_0"] for r in ok], lw=0.9)
        ax.set_xlabel(axis)
    else:
        values = [ok[0][name] - ok[0]["E_0"] for name in levels]
        ax.hlines(values, 0, 1, lw=1.2)
        ax.set_xticks([])
    ax.set_ylabel("energy  [hbar omega_p]")
    ax.set_title("eigenlevels")
    return _finish(fig, path)


def render_bo_fit(fit, path: str) -> str:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for row, phi_ext in enumerate(fit.phi_ext_grid):
        curve = fit.curves[row] - fit.fourier[row, 0]
        ax1.plot(fit.theta_grid, curve, lw=0.9,
                 label=f"phi_ext={phi_ext:.2f}")
        model = fit.reconstruct(fit.theta_grid, phi_ext)
        ax1.plot(fit.theta_grid, model, "k--", lw=0.6)
    ax1.set_xlabel("theta")
    ax1.set_ylabel("effective potential  [hbar omega_p]")
    ax1.legend(fontsize=7)
    names = ("E_alpha", "E_beta", "E_gamma")
    values = (fit.E_alpha, abs(fit.E_beta), abs(fit.E_gamma))
    ax2.bar(names, values)
    ax2.set_yscale("log")
    ax2.set_ylabel("|coefficient|  [hbar omega_p]")
    ax2.set_title(f"max residual {fit.residual:.2e}")
    return _finish(fig, path)


def render_dispersive(rows_by_mode: dict, path: str, omega_p_hz: float) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for mode, rows in rows_by_mode.items():
        x = np.array([r["omega_r"] for r in rows]) * omega_p_hz / 1e9
        chi = np.abs([r[f"chi_{mode}"] for r in rows]) * omega_p_hz
        valid = np.array([r["all_valid"] for r in rows])
        ax.semilogy(x[valid], np.maximum(chi[valid], 1e-12), ".", ms=3,
                    label=f"{mode} (valid)")
        if (~valid).any():
            ax.semilogy(x[~valid], np.maximum(chi[~valid], 1e-12), "x", ms=3,
                        alpha=0.4, label=f"{mode} (flagged)")
    ax.set_xlabel("resonator frequency  [GHz]")
    ax.set_ylabel("|chi| / 2 pi  [Hz]")
    ax.legend(fontsize=8)
    ax.set_title("dispersive shift vs resonator frequency")
    return _finish(fig, path)


def render_gate_optimize(scan: dict, path: str) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 4.4))
    extent = [scan["t_values"][0], scan["t_values"][-1],
              scan["amplitudes"][0], scan["amplitudes"][-1]]
    img = ax.imshow(np.log10(np.maximum(scan["distance"], 1e-12)),
                    origin="lower", aspect="auto", extent=extent)
    fig.colorbar(img, ax=ax, label="log10 distance to unitary")
    ax.plot([scan["best_t"]], [scan["best_amplitude"]], "r*", ms=10)
    ax.set_xlabel("gate time  [1/omega_p]")
    ax.set_ylabel("drive amplitude  [reduced volts]")
    ax.set_title("pulse optimization landscape")
    return _finish(fig, path)


def render_gate_map(rows: list[dict], path: str) -> str:
    ok = [r for r in rows if "error" not in r]
    ej = sorted({r["E_J"] for r in ok})
    ec = sorted({r["E_C_theta"] for r in ok})
    infid = np.full((len(ej), len(ec)), np.nan)
    angle = np.full((len(ej), len(ec)), np.nan)
    for r in ok:
        i, j = ej.index(r["E_J"]), ec.index(r["E_C_theta"])
        infid[i, j] = max(r["infidelity"], 1e-12)
        angle[i, j] = r["phi_xz"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.6, 4.0))
    for ax, data, label in ((ax1, np.log10(infid), "log10 infidelity"),
                            (ax2, angle / math.pi, "phi_XZ / pi")):
        img = ax.imshow(data, origin="lower", aspect="auto",
                        extent=[min(ec), max(ec), min(ej), max(ej)])
        fig.colorbar(img, ax=ax, label=label)
        ax.set_xlabel("E_C_theta  [hbar omega_p]")
        ax.set_ylabel("E_J  [hbar omega_p]")
    return _finish(fig, path)


def render_robustness(rows_by_axis: dict, path: str) -> str:
    fig, axes = plt.subplots(1, len(rows_by_axis),
                             figsize=(3.4 * len(rows_by_axis), 3.4))
    if len(rows_by_axis) == 1:
        axes = [axes]
    for ax, (axis, rows) in zip(axes, rows_by_axis.items()):
        ok = [r for r in rows if "error" not in r]
        ax.plot([r[axis] for r in ok],
                [abs(r["rel_change"]) for r in ok], "o-", ms=3)
        ax.set_yscale("log")
        ax.set_xlabel(axis)
        ax.set_ylabel("|relative fidelity change|")
    return _finish(fig, path)


def render_raman(rows: list[dict], flux_rows: list[dict], path: str) -> str:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.semilogy([r["omega"] for r in rows],
                 [max(r["ratio"], 1e-16) for r in rows], lw=0.7)
    ax1.set_xlabel("drive frequency  [omega_p]")
    ax1.set_ylabel("|Delta_x / Delta_z|")
    if flux_rows:
        ok = [r for r in flux_rows if "error" not in r]
        ax2.semilogy([r["phi_ext"] for r in ok],
                     [max(r["ratio_star"], 1e-16) for r in ok], "o-", ms=3)
        ax2.set_xlabel("phi_ext  [rad]")
        ax2.set_ylabel("optimized ratio")
    return _finish(fig, path)


def render_cooling(rows: list[dict], path: str) -> str:
    ok = [r for r in rows if "error" not in r]
    z = [r["z_phi_over_rq"] for r in ok]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.loglog(z, [r["improvement"] for r in ok], "o-", ms=3)
    ax1.set_xlabel("Z_phi / R_Q")
    ax1.set_ylabel("T_phi gain from cooling")
    ax2.semilogx(z, [r["n_ss"] for r in ok], "o-", ms=3, label="cooled")
    ax2.semilogx(z, [r["n_th"] for r in ok], "s--", ms=3, label="thermal")
    ax2.set_xlabel("Z_phi / R_Q")
    ax2.set_ylabel("zeta occupation")
    ax2.legend(fontsize=8)
    return _finish(fig, path)


def render_validation(report: dict, path: str) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(report["t"], report["n_zeta_full"], lw=0.9, label="full model")
    ax.plot(report["t"], report["n_zeta_reduced"], "k--", lw=1.0,
            label="reduced rates")
    ax.set_xlabel("time  [s]")
    ax.set_ylabel("zeta occupation")
    ax.legend(fontsize=8)
    ax.set_title(f"steady-state discrepancy "
                 f"{report['relative_discrepancy']:.1%}")
    return _finish(fig, path)
