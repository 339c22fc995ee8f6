"""Static figure rendering for the report paths.

Everything goes through the Agg backend straight to files; nothing here
ever opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_orbit_norms(path, pairs) -> None:
    """Orbit norm profile ||S^k x|| against k on a log scale."""
    ks = [p[0] for p in pairs]
    ns = [p[1] for p in pairs]
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.semilogy(ks, ns, marker=".", lw=1.0, color="tab:blue")
    ax.set_xlabel("step")
    ax.set_ylabel("orbit norm")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_density_distances(path, pairs) -> None:
    ks = [p[0] for p in pairs]
    ds = [p[1] for p in pairs]
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.bar(ks, ds, width=0.8, color="tab:orange")
    ax.set_xlabel("probe index")
    ax.set_ylabel("best orbit distance")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_b_decay(path, pairs) -> None:
    """log10 of the weight sequence against its index."""
    ks = [p[0] for p in pairs]
    vs = [p[1] for p in pairs]
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(ks, vs, marker="o", lw=1.0, color="tab:green")
    ax.set_xlabel("index")
    ax.set_ylabel("log10 weight")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
