"""Figure rendering for the report path (PNG files next to the CSVs)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_FIGSIZE = (6.0, 4.5)
_DPI = 130


def save_resonance_scatter(path, resonances, rect, title):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ks = np.array([r.k for r in resonances], dtype=complex)
    if len(ks):
        ax.plot(ks.real, ks.imag, "o", color="tab:blue", markersize=5)
    ax.set_xlim(rect.re_min, rect.re_max)
    ax.set_ylim(rect.im_min, rect.im_max)
    ax.set_xlabel("Re k")
    ax.set_ylabel("Im k")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_oracle_map(path, re_axis, im_axis, values, roots=None):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    finite = np.isfinite(values)
    vmin = np.percentile(values[finite], 2) if np.any(finite) else -1.0
    vmax = np.percentile(values[finite], 98) if np.any(finite) else 1.0
    mesh = ax.pcolormesh(re_axis, im_axis, values, shading="auto",
                         cmap="viridis", vmin=vmin, vmax=vmax)
    fig.colorbar(mesh, ax=ax, label="min over n of log10 |d_n(k)|")
    if roots:
        ks = np.array([r.k for r in roots])
        ax.plot(ks.real, ks.imag, "r+", markersize=8)
    ax.set_xlabel("Re k")
    ax.set_ylabel("Im k")
    ax.set_title("constant-potential disk determinant landscape")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_convergence_plot(path, report):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for track in report.tracks:
        levels = np.arange(1, len(track.errors) + 1)
        ax.semilogy(levels, track.errors, "o-",
                    label=f"k near {track.values[-1]:.3f}")
    ax.set_xlabel("refinement level j")
    ax.set_ylabel("relative error E_j")
    ax.set_title("tracked-resonance convergence")
    ax.grid(True, which="both", alpha=0.3)
    if report.tracks:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
