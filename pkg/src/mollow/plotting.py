"""Self-contained SVG figures for the CLI (presentation only)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp, so reruns produce identical files
matplotlib.rcParams["svg.hashsalt"] = "mollow"
matplotlib.rcParams["svg.fonttype"] = "path"
_META = {"Date": None, "Creator": "mollow"}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def spectrum_svg(path, x, y, markers=(), ylabel="transmission", extra=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, y, color="tab:blue", lw=1.2)
    for m in markers:
        ax.axvline(m, color="0.5", ls=":", lw=0.8)
    ax.set_xlabel("probe - pump detuning (MHz)")
    ax.set_ylabel(ylabel)
    if extra is not None:
        ax2 = ax.twinx()
        ax2.plot(x, extra, color="tab:red", lw=1.0)
        ax2.set_ylabel("contrast (dB)", color="tab:red")
    _save(fig, path)


def trace_svg(path, phase, fluorescence, rabi):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(phase, fluorescence, color="tab:red", lw=1.0)
    ax.set_xlabel("beat phase")
    ax.set_ylabel("fluorescence (photons/us)")
    ax2 = ax.twinx()
    ax2.plot(phase, rabi, color="0.6", lw=0.8, ls="--")
    ax2.set_ylabel("|Omega(t)| (MHz)")
    _save(fig, path)


def beatmap_svg(path, deltas, k, magnitude_db):
    fig, ax = plt.subplots(figsize=(6, 4))
    freqs = np.multiply.outer(deltas, k)
    sc = ax.scatter(
        np.repeat(deltas, len(k)), np.abs(freqs).ravel(), c=magnitude_db.ravel(), s=6, cmap="viridis"
    )
    fig.colorbar(sc, ax=ax, label="magnitude (dB)")
    ax.set_xlabel("probe - pump detuning (MHz)")
    ax.set_ylabel("beat frequency (MHz)")
    _save(fig, path)
