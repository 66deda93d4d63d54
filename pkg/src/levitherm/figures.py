"""Static figure rendering for report directories.

Everything draws through the Agg canvas so runs work headless, and the
PNG metadata is pinned so identical results produce identical bytes.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg", force=True)

import matplotlib.pyplot as plt
import numpy as np

from .spectra import esr_model, psd_model

_METADATA = {"Software": "levitherm"}


def _save(fig, path: str) -> None:
    fig.savefig(path, format="png", dpi=120, metadata=_METADATA)
    plt.close(fig)


def render_esr_fits(path: str, conditions, spectra, fits) -> None:
    """Grid of dip spectra with their fitted models, one panel per condition."""
    n = len(spectra)
    ncols = min(3, n)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.0 * ncols, 2.8 * nrows), squeeze=False, sharey=False
    )
    for k, ((intensity, pressure), spec, fit) in enumerate(zip(conditions, spectra, fits)):
        ax = axes[k // ncols][k % ncols]
        f_ghz = spec.frequencies / 1e9
        rate = spec.counts / spec.dwell_per_point
        ax.plot(f_ghz, rate, ".", ms=2.5, color="0.45", label="data")
        dense = np.linspace(spec.frequencies[0], spec.frequencies[-1], 400)
        ax.plot(dense / 1e9, esr_model(fit.params, dense), "-", color="C3", lw=1.2, label="fit")
        ax.set_title(f"I={intensity:.3g} W/m$^2$, p={pressure:.0f} Pa", fontsize=8)
        ax.set_xlabel("frequency (GHz)", fontsize=8)
        ax.set_ylabel("rate (1/s)", fontsize=8)
        ax.tick_params(labelsize=7)
    for k in range(n, nrows * ncols):
        axes[k // ncols][k % ncols].set_axis_off()
    axes[0][0].legend(fontsize=7, frameon=False)
    fig.tight_layout()
    _save(fig, path)


def render_psd_fit(path: str, psd, fit) -> None:
    """Measured displacement spectrum with the fitted oscillator response."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    f_khz = psd.frequencies / 1e3
    ax.semilogy(f_khz, psd.psd_values, ".", ms=2.5, color="0.45", label="data")
    dense = np.linspace(psd.frequencies[0], psd.frequencies[-1], 800)
    model = fit.amplitude / (
        (fit.resonance_omega**2 - (2.0 * math.pi * dense) ** 2) ** 2
        + (fit.damping_gamma * 2.0 * math.pi * dense) ** 2
    )
    ax.semilogy(dense / 1e3, model, "-", color="C3", lw=1.2, label="fit")
    ax.set_xlabel("frequency (kHz)")
    ax.set_ylabel("PSD (m$^2$/Hz)")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    _save(fig, path)


def render_beta_histogram(path: str, hist_rows) -> None:
    """Bar chart of the heating-coefficient histogram table."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    lows = [r[0] for r in hist_rows]
    highs = [r[1] for r in hist_rows]
    counts = [r[2] for r in hist_rows]
    widths = [h - l for l, h in zip(lows, highs)]
    ax.bar(lows, counts, width=widths, align="edge", color="C0", edgecolor="white")
    ax.set_xlabel(r"$\beta_{heat}$ (K Pa m$^2$/W)")
    ax.set_ylabel("particles")
    fig.tight_layout()
    _save(fig, path)


def render_cross_section_band(path: str, records, band_rows) -> None:
    """Log-log cross-section scatter with the fitted power law and band."""
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    r_nm = [rec.r_hydro * 1e9 for rec in records]
    sig = [rec.sigma_abs for rec in records]
    grid_nm = [row[0] * 1e9 for row in band_rows]
    center = [row[1] for row in band_rows]
    lower = [row[2] for row in band_rows]
    upper = [row[3] for row in band_rows]
    free = [row[4] for row in band_rows]
    ax.fill_between(grid_nm, lower, upper, color="C0", alpha=0.18, lw=0, label=r"$\pm2\sigma$ band")
    ax.loglog(grid_nm, center, "-", color="C0", lw=1.3, label=r"fixed $n=3$")
    ax.loglog(grid_nm, free, "--", color="C2", lw=1.1, label="free exponent")
    ax.loglog(r_nm, sig, "o", ms=4, color="0.25", mfc="none", label="particles")
    ax.set_xlabel("hydrodynamic radius (nm)")
    ax.set_ylabel(r"$\sigma_{abs}$ (m$^2$)")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    _save(fig, path)
