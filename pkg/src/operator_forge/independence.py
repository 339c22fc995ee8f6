"""Forcing orbit linear independence with budgeted rank-one nudges.

Each step looks at the next orbit point of the current operator.  If it
already sticks out of the span of the earlier points, nothing is done;
otherwise a rank-one perturbation psi (x) w is added, where psi is the
minimal-norm functional that kills the current span and normalizes the
orbit point, and w is a fresh direction scaled to half the step budget
epsilon/2^(k+1).  The budgets sum below epsilon/2, and together with the
initial shrink by (1 - epsilon/2) the final operator stays a contraction
within epsilon of the input.  In finite dimension the procedure always
runs out of room, and running out of room is the success signal: the
orbit then spans the whole space.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import (HypothesisViolationError, MaxStepsExceededError,
                         NoRoomError)
from .linalg import (Frame, append_to_frame, apply_power, empty_frame, norm,
                     operator_norm, project, rank_one)
from .sampling import random_operator, rng

INDEPENDENCE_FLOOR = 1e-8

KRYLOV_RANK_TOL = 1e-10

_ROOM_TOL = 1e-6


@dataclass
class IndependenceState:
    k: int
    T_k: np.ndarray
    V_k_frame: Frame
    x: np.ndarray
    epsilon: float
    history: list[tuple[float, float]] = field(default_factory=list)

    @property
    def epsilon_remaining(self) -> float:
        return self.epsilon - sum(p * w for p, w in self.history)


def initial_state(T, x: np.ndarray, epsilon: float) -> IndependenceState:
    """Shrink T by (1 - epsilon/2) and start with the empty span."""
    T = np.asarray(T, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if operator_norm(T) > 1.0 + 1e-9:
        raise HypothesisViolationError("operator must be a contraction")
    if norm(x) == 0.0:
        raise HypothesisViolationError("start vector must be nonzero")
    if epsilon <= 0.0:
        raise HypothesisViolationError("epsilon must be positive")
    return IndependenceState(k=0, T_k=(1.0 - epsilon / 2.0) * T,
                             V_k_frame=empty_frame(x.shape[0]), x=x,
                             epsilon=float(epsilon))


def _fresh_direction(f: Frame) -> np.ndarray | None:
    """First standard basis vector with a residual against the frame."""
    for i in range(f.dim):
        e = np.zeros(f.dim, dtype=complex)
        e[i] = 1.0
        w = e - project(f, e)
        w = w - project(f, w)
        nw = norm(w)
        if nw > _ROOM_TOL:
            return w / nw
    return None


def independence_step(state: IndependenceState) -> IndependenceState:
    """Advance the span by one orbit point, perturbing only when needed.

    Raises no_room when the orbit point has numerically fallen into the
    span, or when no perturbation direction is left; both mean the orbit
    has filled the space.
    """
    k = state.k
    t = state.T_k
    v_k = apply_power(t, state.x, k)
    u = v_k - project(state.V_k_frame, v_k)
    ru = norm(u)
    if ru < INDEPENDENCE_FLOOR * norm(v_k) or ru == 0.0:
        raise NoRoomError(f"orbit point {k} lies in the current span")
    psi_norm = 1.0 / ru
    v_frame = append_to_frame(state.V_k_frame, v_k)

    v_next = t @ v_k
    res_next = v_next - project(v_frame, v_next)
    nv_next = norm(v_next)
    if nv_next > 0.0 and norm(res_next) >= INDEPENDENCE_FLOOR * nv_next:
        # the next orbit point is already independent
        return replace(state, k=k + 1, V_k_frame=v_frame,
                       history=state.history + [(psi_norm, 0.0)])

    blocked = append_to_frame(v_frame, v_next)
    w_dir = _fresh_direction(blocked)
    if w_dir is None:
        raise NoRoomError(
            f"span plus two orbit points fills the space at step {k}")
    w_norm = state.epsilon / (2.0 ** (k + 2) * psi_norm)
    psi_vec = u / (ru * ru)
    t_next = t + rank_one(psi_vec, w_norm * w_dir)
    return replace(state, k=k + 1, T_k=t_next, V_k_frame=v_frame,
                   history=state.history + [(psi_norm, w_norm)])


def make_orbit_independent(T, x: np.ndarray, epsilon: float,
                           max_steps: int | None = None):
    """Run steps until the orbit fills the space.

    Returns (T_final, steps, terminated_cyclic).  With max_steps at least
    the dimension, termination is guaranteed and the start vector is
    cyclic for T_final.
    """
    state = initial_state(T, x, epsilon)
    if max_steps is None:
        max_steps = state.x.shape[0] + 1
    for _ in range(max_steps):
        try:
            state = independence_step(state)
        except NoRoomError:
            return state.T_k, state.k, True
    raise MaxStepsExceededError(
        f"no termination within {max_steps} steps")


def krylov_matrix(T, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    cols = [x]
    for _ in range(x.shape[0] - 1):
        cols.append(T @ cols[-1])
    return np.column_stack(cols)


def krylov_rank(T, x: np.ndarray, tol: float = KRYLOV_RANK_TOL) -> int:
    """Numerical rank of the matrix with columns x, Tx, ..., T^(d-1)x."""
    if norm(np.asarray(x, dtype=complex)) == 0.0:
        raise HypothesisViolationError("start vector must be nonzero")
    sing = np.linalg.svd(krylov_matrix(T, x), compute_uv=False)
    if sing[0] == 0.0:
        return 0
    return int(np.count_nonzero(sing > tol * sing[0]))


def cyclicity_openness_probe(T_cyclic, x: np.ndarray, trials: int,
                             radius: float, seed: int = 0) -> float:
    """Fraction of norm-bounded perturbations that keep x cyclic."""
    T_cyclic = np.asarray(T_cyclic, dtype=complex)
    d = T_cyclic.shape[0]
    if krylov_rank(T_cyclic, x) != d:
        raise HypothesisViolationError("base operator is not cyclic for x")
    if trials < 1 or radius <= 0.0:
        raise HypothesisViolationError("need trials >= 1 and radius > 0")
    hits = 0
    for i in range(trials):
        gen = rng(seed, 91, i)
        bump = random_operator(gen, d, radius * float(gen.uniform(0.0, 1.0)))
        if krylov_rank(T_cyclic + bump, x) == d:
            hits += 1
    return hits / trials
