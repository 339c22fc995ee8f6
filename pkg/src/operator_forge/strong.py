"""Finite-rank approximants hitting a prescribed orbit target exactly.

Given T in B_R, unit controls x_j, a start vector x and a target z, the
returned S lies in B_R, moves every control by less than epsilon, and
satisfies S^N x = z at N = M + 1.  The construction routes the component
of x outside V = PH + TPH through a shift chain of M fresh directions
with a uniform gain g at most R + delta; a single rank-one tap at the
chain end delivers an inflated copy of the target, and the final rescale
by R / (R + 3 delta) deflates it back so the hit stays exact.

Chain-length comparisons run in extended-precision log arithmetic, and the
tap vector is accumulated in pre-scaled form, so no intermediate quantity
overflows even for chains hundreds of links long.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (BudgetExhaustedError, GammaDegenerateError,
                         HypothesisViolationError, InsufficientDimensionError)
from .linalg import (Frame, append_to_frame, apply_power, embed, extend_frame,
                     norm, operator_norm, orthonormalize, project)
from .sampling import random_contraction, random_unit_vector, rng

_CHAIN_CAP = 10_000_000


@dataclass
class StrongApproxRequest:
    T: np.ndarray
    R: float
    controls: list[np.ndarray]
    x: np.ndarray
    z: np.ndarray
    epsilon: float
    ambient_policy: str = "auto_embed"
    gamma_min: float = 1e-6
    retry_budget: int = 8
    seed: int = 0


@dataclass
class StrongApproxResult:
    S: np.ndarray
    N: int
    delta: float
    M: int
    gamma: float
    perturbed_controls: list[np.ndarray]
    perturbed_T: np.ndarray
    # construction internals, consumed by the weak-topology layer
    ambient_dim: int = 0
    base_dim: int = 0
    frame_v1: Frame | None = None
    chain: np.ndarray | None = None
    chain_gain: float = 0.0
    chain_peak_log10: float = 0.0


@dataclass
class StrongVerifyReport:
    norm_value: float
    norm_ok: bool
    control_residuals: list[float]
    control_ok: list[bool]
    hit_residual: float
    hit_ok: bool

    @property
    def ok(self) -> bool:
        return self.norm_ok and self.hit_ok and all(self.control_ok)


def choose_delta(R: float, epsilon: float) -> float:
    """Largest simple delta with 3 delta < epsilon and R + delta > 1 + 3 delta / R."""
    if R <= 1.0:
        raise HypothesisViolationError("R must exceed 1")
    if epsilon <= 0.0:
        raise HypothesisViolationError("epsilon must be positive")
    if R < 3.0:
        return min(epsilon / 6.0, R * (R - 1.0) / (2.0 * (3.0 - R)))
    return epsilon / 6.0


def choose_chain_length(R: float, delta: float, gamma: float,
                        norm_x: float, norm_z: float) -> int:
    """Minimal M >= 1 with gamma (R+d)^M > R^(M+1) ||x|| / d and
    gamma (R+d)^M > ||z|| (1+3d/R)^(M+1) / d, compared in log domain."""
    if delta <= 0.0 or gamma <= 0.0:
        raise HypothesisViolationError("delta and gamma must be positive")
    ld = np.longdouble
    l_gamma = np.log(ld(gamma))
    l_rd = np.log(ld(R) + ld(delta))
    l_r = np.log(ld(R))
    l_delta = np.log(ld(delta))
    l_alpha = np.log(ld(1.0) + ld(3.0) * ld(delta) / ld(R))
    if l_rd <= l_r or l_rd <= l_alpha:
        raise HypothesisViolationError("delta violates the growth inequalities")

    def ok(m: int) -> bool:
        lhs = l_gamma + ld(m) * l_rd
        if norm_x > 0.0 and not lhs > ld(m + 1) * l_r + np.log(ld(norm_x)) - l_delta:
            return False
        if norm_z > 0.0 and not lhs > ld(m + 1) * l_alpha + np.log(ld(norm_z)) - l_delta:
            return False
        return True

    guess = ld(1.0)
    if norm_x > 0.0:
        guess = max(guess, (l_r + np.log(ld(norm_x)) - l_delta - l_gamma) / (l_rd - l_r))
    if norm_z > 0.0:
        guess = max(guess, (l_alpha + np.log(ld(norm_z)) - l_delta - l_gamma) / (l_rd - l_alpha))
    m = max(1, int(np.floor(guess)) - 3)
    while not ok(m):
        m += 1
        if m > _CHAIN_CAP:
            raise BudgetExhaustedError("chain length search exceeded cap")
    while m > 1 and ok(m - 1):
        m -= 1
    return m


def _validate(req: StrongApproxRequest) -> None:
    if req.R <= 1.0:
        raise HypothesisViolationError("R must exceed 1")
    if req.epsilon <= 0.0:
        raise HypothesisViolationError("epsilon must be positive")
    if norm(req.x) == 0.0:
        raise HypothesisViolationError("x must be nonzero")
    for j, c in enumerate(req.controls):
        if abs(norm(c) - 1.0) > 1e-9:
            raise HypothesisViolationError(f"control {j} is not unit norm")
    if operator_norm(req.T) > req.R + 1e-9:
        raise HypothesisViolationError("T lies outside B_R")
    if req.ambient_policy not in ("fixed", "auto_embed"):
        raise HypothesisViolationError(
            f"unknown ambient_policy {req.ambient_policy!r}")


def strong_approximate(req: StrongApproxRequest) -> StrongApproxResult:
    _validate(req)
    T = np.asarray(req.T, dtype=complex)
    d = T.shape[0]
    R = float(req.R)
    eps = float(req.epsilon)
    x = np.asarray(req.x, dtype=complex)
    z = np.asarray(req.z, dtype=complex)
    controls = [np.asarray(c, dtype=complex) for c in req.controls]

    # gamma > 0 is restored, if needed, by seeded perturbations of the
    # controls and of T; each attempt perturbs the original data afresh.
    gen = rng(req.seed, 101)
    t_work, controls_work = T, controls
    frame_v = gamma = residual = None
    for attempt in range(req.retry_budget + 1):
        spanning = list(controls_work) + [t_work @ c for c in controls_work]
        frame_v = orthonormalize(spanning, dim=d)
        residual = x - project(frame_v, x)
        gamma = norm(residual)
        if gamma >= req.gamma_min:
            break
        if attempt == req.retry_budget:
            raise GammaDegenerateError(
                f"gamma stayed below {req.gamma_min} after "
                f"{req.retry_budget} perturbation attempts")
        scale = eps / 10.0
        controls_work = []
        for c in controls:
            p = c + scale * random_unit_vector(gen, d)
            controls_work.append(p / norm(p))
        t_work = (1.0 - scale) * T + scale * random_contraction(gen, d)

    delta = choose_delta(R, eps)
    m_len = choose_chain_length(R, delta, gamma, norm(x), norm(z))
    n_steps = m_len + 1
    dim_v = frame_v.size
    required = dim_v + m_len + 1

    if req.ambient_policy == "fixed":
        if d < required:
            raise InsufficientDimensionError(
                f"need ambient dimension {required}, have {d}",
                required_dim=required)
        ambient = d
        base = append_to_frame(frame_v, residual / gamma)
        ext = extend_frame(base, m_len)
        chain = np.column_stack([residual / gamma]
                                + [ext.matrix[:, base.size + i] for i in range(m_len)])
        frame_v_amb = frame_v
        t_amb, x_amb, z_amb = t_work, x, z
    else:
        ambient = d + dim_v + m_len + 1
        chain = np.zeros((ambient, m_len + 1), dtype=complex)
        chain[:d, 0] = residual / gamma
        for i in range(1, m_len + 1):
            chain[d + i - 1, i] = 1.0
        frame_v_amb = Frame(dim=ambient,
                            matrix=embed_matrix(frame_v.matrix, ambient))
        t_amb = embed(t_work, ambient)
        x_amb = embed(x, ambient)
        z_amb = embed(z, ambient)

    frame_u = orthonormalize([embed(c, ambient) for c in controls_work],
                             dim=ambient)
    tp = (t_amb @ frame_u.matrix) @ frame_u.matrix.conj().T

    # (TP)^(M+1) x with direction and log magnitude tracked separately, so
    # long chains neither overflow nor underflow
    rd = R + delta
    alpha = 1.0 + 3.0 * delta / R
    log_pow = None
    w_dir = None
    w = tp @ x_amb
    wn = norm(w)
    if wn > 0.0:
        acc = 0.0
        for _ in range(m_len):
            acc += float(np.log(wn))
            w = tp @ (w / wn)
            wn = norm(w)
            if wn == 0.0:
                break
        if wn > 0.0:
            log_pow = acc + float(np.log(wn))
            w_dir = w / wn
    nz = norm(z_amb)
    log_zt = float(np.log(nz) + (m_len + 1) * np.log(alpha)) if nz > 0.0 else None

    # Chain gain balanced to the data: gamma g^M = max(||z_tilde||,
    # ||(TP)^(M+1) x||) / delta, capped at R + delta (the cap never binds
    # when M came from choose_chain_length).  A uniform gain of R + delta
    # would push the running chain coefficient to gamma (c(R+delta))^M,
    # and rounding noise of that absolute size lands in the delivered
    # vector; the balanced gain keeps the peak near max(||z||, 1)/delta
    # while tap entries stay at most delta each, so every norm and
    # exactness postcondition is preserved.
    needs = [v for v in (log_pow, log_zt) if v is not None]
    tap = np.zeros(ambient, dtype=complex)
    if not needs:
        g = 0.0
        log_g = None
    else:
        log_g = (max(needs) - float(np.log(gamma * delta))) / m_len
        g = min(float(np.exp(log_g)), rd)
        log_g = float(np.log(g))
        if log_zt is not None:
            tap += (z_amb / nz) * float(
                np.exp(log_zt - m_len * log_g - np.log(gamma)))
        if log_pow is not None:
            tap -= w_dir * float(
                np.exp(log_pow - m_len * log_g - np.log(gamma)))

    c_scale = R / (R + 3.0 * delta)
    s_tilde = tp
    if g > 0.0:
        s_tilde += g * (chain[:, 1:] @ chain[:, :-1].conj().T)
    s_tilde += np.outer(tap, chain[:, m_len].conj())
    s = c_scale * s_tilde

    if g > 0.0:
        peak = (float(np.log(gamma)) + m_len * (float(np.log(c_scale)) + log_g))
        peak_log10 = peak / float(np.log(10.0))
    else:
        peak_log10 = 0.0

    frame_v1 = Frame(dim=ambient,
                     matrix=np.column_stack([frame_v_amb.matrix, chain]))
    frame_v1 = append_to_frame(frame_v1, tap)

    return StrongApproxResult(
        S=s, N=n_steps, delta=delta, M=m_len, gamma=gamma,
        perturbed_controls=controls_work, perturbed_T=t_work,
        ambient_dim=ambient, base_dim=d, frame_v1=frame_v1, chain=chain,
        chain_gain=g, chain_peak_log10=peak_log10)


def embed_matrix(mat: np.ndarray, new_dim: int) -> np.ndarray:
    out = np.zeros((new_dim, mat.shape[1]), dtype=complex)
    out[:mat.shape[0], :] = mat
    return out


def verify_strong(result: StrongApproxResult, req: StrongApproxRequest,
                  hit_tol: float = 1e-8) -> StrongVerifyReport:
    """Recompute every postcondition from scratch.

    Uses only the returned operator and the (possibly perturbed) request
    data; no intermediate from the construction is reused.
    """
    s = result.S
    ambient = s.shape[0]
    eps = float(req.epsilon)
    norm_value = operator_norm(s)
    norm_ok = norm_value <= req.R + 1e-9

    t_pert = embed(result.perturbed_T, ambient)
    residuals, control_ok = [], []
    for c in result.perturbed_controls:
        c_amb = embed(c, ambient)
        r = norm(s @ c_amb - t_pert @ c_amb)
        residuals.append(r)
        control_ok.append(r < eps)

    z_amb = embed(np.asarray(req.z, dtype=complex), ambient)
    hit = norm(apply_power(s, embed(np.asarray(req.x, dtype=complex), ambient),
                           result.N) - z_amb)
    hit_ok = hit <= hit_tol * max(1.0, norm(z_amb))
    return StrongVerifyReport(norm_value=norm_value, norm_ok=norm_ok,
                              control_residuals=residuals,
                              control_ok=control_ok,
                              hit_residual=hit, hit_ok=hit_ok)
