"""Seeded random fixtures shared by the test batteries and the CLI suite."""

from __future__ import annotations

import numpy as np

from .linalg import operator_norm


def rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator derived from a base seed and a stream path.

    Distinct stream tuples give independent streams, so batteries can
    draw per-instance data without coupling.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


def random_vector(gen: np.random.Generator, dim: int) -> np.ndarray:
    v = gen.standard_normal(dim) + 1j * gen.standard_normal(dim)
    return v / np.sqrt(2.0)


def random_unit_vector(gen: np.random.Generator, dim: int) -> np.ndarray:
    v = random_vector(gen, dim)
    return v / np.linalg.norm(v)


def random_operator(gen: np.random.Generator, dim: int,
                    target_norm: float) -> np.ndarray:
    """Dense complex operator rescaled to the exact requested norm."""
    a = (gen.standard_normal((dim, dim))
         + 1j * gen.standard_normal((dim, dim))) / np.sqrt(2.0 * dim)
    top = operator_norm(a)
    if top == 0.0:
        return np.zeros((dim, dim), dtype=complex)
    return a * (target_norm / top)


def random_contraction(gen: np.random.Generator, dim: int,
                       target_norm: float = 1.0) -> np.ndarray:
    if not 0.0 <= target_norm <= 1.0:
        raise ValueError("contraction norm must lie in [0, 1]")
    return random_operator(gen, dim, target_norm)


def random_unitary(gen: np.random.Generator, dim: int) -> np.ndarray:
    a = (gen.standard_normal((dim, dim))
         + 1j * gen.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(a)
    # Fix the phase ambiguity so the draw is a deterministic function of gen.
    return q * (np.diag(r) / np.abs(np.diag(r)))
