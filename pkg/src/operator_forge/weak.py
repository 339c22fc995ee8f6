"""Weak-topology approximants with exactly R-geometric orbit growth.

Step one replaces T by a nearby finite-rank T1 whose orbit hits the target
exactly (half the tolerance budget).  Step two restores the missing norm
growth: the defect form [u, v] = <(R^2 - T1* T1)u, v> on the invariant
subspace V1 is factored through its quotient isometry Q, and N isometric
copies of the quotient space are laid out in fresh coordinates, linked by
R-scaled partial isometries.  The sum T1 + W1 Q + sum_l R W_l W_{l-1}* is
R times an isometry on V1 + W_1 + ... + W_{N-1}, so every orbit norm grows
by the factor R per step, while everything added lands orthogonal to the
dual vectors and the pairing conditions survive untouched.

The copies are never stored as dense frames; the layout records the block
offsets and materializes a frame on demand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import (HypothesisViolationError, IndefiniteFormError,
                         InsufficientDimensionError)
from .linalg import (Frame, apply_power, embed, extend_frame, inner, norm,
                     operator_norm, orthonormalize, project)
from .strong import StrongApproxRequest, StrongApproxResult, strong_approximate

_DENSE_ASSEMBLY_LIMIT = 600
QUOTIENT_KERNEL_TOL = 1e-10


@dataclass
class WeakApproxRequest:
    T: np.ndarray
    controls: list[np.ndarray]
    duals: list[np.ndarray]
    x: np.ndarray
    z: np.ndarray
    epsilon: float
    R: float | None = None
    ambient_policy: str = "auto_embed"
    seed: int = 0


@dataclass
class GramForm:
    frame: Frame
    matrix: np.ndarray

    @property
    def rank_tolerance_scale(self) -> float:
        eigs = np.linalg.eigvalsh(self.matrix) if self.matrix.size else np.zeros(0)
        return float(eigs[-1]) if eigs.size else 0.0


class IsoCopyLayout:
    """N mutually orthogonal copies of the quotient space.

    In auto_embed mode the copies occupy fresh coordinate blocks starting
    at base_offset; in fixed mode an explicit orthonormal basis matrix is
    kept.  copy_frame(l) materializes copy l (1-based) as a Frame.
    """

    def __init__(self, ambient_dim: int, quotient_rank: int, count: int,
                 base_offset: int = -1, basis: np.ndarray | None = None):
        self.ambient_dim = ambient_dim
        self.quotient_rank = quotient_rank
        self.count = count
        self.base_offset = base_offset
        self.basis = basis

    def copy_frame(self, l: int) -> Frame:
        if not 1 <= l <= self.count:
            raise IndexError(f"copy index {l} outside 1..{self.count}")
        r = self.quotient_rank
        if self.basis is not None:
            return Frame(dim=self.ambient_dim,
                         matrix=self.basis[:, (l - 1) * r: l * r])
        mat = np.zeros((self.ambient_dim, r), dtype=complex)
        start = self.base_offset + (l - 1) * r
        for i in range(r):
            mat[start + i, i] = 1.0
        return Frame(dim=self.ambient_dim, matrix=mat)


@dataclass
class WeakApproxResult:
    S: np.ndarray | sp.spmatrix
    N: int
    layout: IsoCopyLayout
    scale_a: float
    base_R: float
    perturbed_T: np.ndarray
    perturbed_controls: list[np.ndarray]
    reduced: StrongApproxResult
    frame_v1: Frame

    @property
    def ambient_dim(self) -> int:
        return self.S.shape[0]


@dataclass
class WeakVerifyReport:
    norm_value: float
    norm_ok: bool
    pairings: list[float]
    pairing_ok: list[bool]
    dual_orthogonality: list[float]
    dual_ok: list[bool]
    growth_ratios: list[float]
    growth_ok: bool

    @property
    def ok(self) -> bool:
        return (self.norm_ok and self.growth_ok and all(self.pairing_ok)
                and all(self.dual_ok))


def gram_form(T, R: float, frame_v: Frame) -> GramForm:
    """Defect form G_ij = <(R^2 - T*T) f_j, f_i> over the frame."""
    if frame_v.size == 0:
        return GramForm(frame=frame_v, matrix=np.zeros((0, 0), dtype=complex))
    tf = T @ frame_v.matrix
    g = (R * R) * np.eye(frame_v.size) - tf.conj().T @ tf
    g = 0.5 * (g + g.conj().T)
    eigs = np.linalg.eigvalsh(g)
    scale = max(abs(eigs[0]), abs(eigs[-1]))
    if eigs[0] < -1e-9 * max(scale, 1.0):
        raise IndefiniteFormError(
            f"defect form has eigenvalue {eigs[0]:.3e}; operator exceeds R")
    return GramForm(frame=frame_v, matrix=g)


def quotient_isometry(form: GramForm, tol: float = QUOTIENT_KERNEL_TOL) -> np.ndarray:
    """Q with Q*Q = G; rows span the positive eigenspace of G.

    Directions with [u, u] below tol * max eigenvalue are the zero vectors
    of the seminorm and are dropped, matching the quotient construction.
    """
    r = form.frame.size
    if r == 0:
        return np.zeros((0, 0), dtype=complex)
    eigs, vecs = np.linalg.eigh(form.matrix)
    lam_max = float(eigs[-1])
    if lam_max <= 0.0:
        return np.zeros((0, r), dtype=complex)
    keep = eigs > tol * lam_max
    lam = eigs[keep]
    v = vecs[:, keep]
    return np.sqrt(lam)[:, None] * v.conj().T


def _validate(req: WeakApproxRequest, R: float, norm_cap: float) -> None:
    if len(req.duals) != len(req.controls):
        raise HypothesisViolationError("controls and duals must pair up")
    for j, y in enumerate(req.duals):
        if abs(norm(y) - 1.0) > 1e-9:
            raise HypothesisViolationError(f"dual {j} is not unit norm")
    if operator_norm(req.T) > norm_cap + 1e-9:
        raise HypothesisViolationError(
            f"operator norm exceeds {norm_cap}")
    if R <= 1.0:
        raise HypothesisViolationError("R must exceed 1")


def weak_approximate(req: WeakApproxRequest) -> WeakApproxResult:
    if req.R is None:
        raise HypothesisViolationError("R is required")
    R = float(req.R)
    _validate(req, R, R)
    eps = float(req.epsilon)

    strong_req = StrongApproxRequest(
        T=req.T, R=R, controls=req.controls, x=req.x, z=req.z,
        epsilon=eps / 2.0, ambient_policy=req.ambient_policy, seed=req.seed)
    reduced = strong_approximate(strong_req)
    t1 = reduced.S
    d1 = reduced.ambient_dim
    frame_v1 = reduced.frame_v1
    n_steps = reduced.N

    form = gram_form(t1, R, frame_v1)
    q = quotient_isometry(form)
    q_rank = q.shape[0]
    r = frame_v1.size

    if req.ambient_policy == "fixed":
        ambient = d1
        pool = [frame_v1.matrix[:, k] for k in range(r)]
        pool += [embed(np.asarray(y, dtype=complex), ambient) for y in req.duals]
        base_frame = orthonormalize(pool, dim=ambient)
        ext = extend_frame(base_frame, n_steps * q_rank)
        basis = ext.matrix[:, base_frame.size:]
        layout = IsoCopyLayout(ambient, q_rank, n_steps, basis=basis)
    else:
        ambient = d1 + n_steps * q_rank
        layout = IsoCopyLayout(ambient, q_rank, n_steps, base_offset=d1)

    s = _assemble(t1, q, frame_v1, layout, R)

    return WeakApproxResult(
        S=s, N=n_steps, layout=layout, scale_a=1.0, base_R=R,
        perturbed_T=reduced.perturbed_T,
        perturbed_controls=reduced.perturbed_controls,
        reduced=reduced, frame_v1=frame_v1)


def _assemble(t1: np.ndarray, q: np.ndarray, frame_v1: Frame,
              layout: IsoCopyLayout, R: float):
    """S = T1 + W_1 Q F* + sum_{l>=2} R W_l W_{l-1}*."""
    ambient = layout.ambient_dim
    d1 = t1.shape[0]
    r_rank = layout.quotient_rank
    count = layout.count

    if layout.basis is not None:
        # fixed ambient: copies are dense columns, assemble densely
        s = np.zeros((ambient, ambient), dtype=complex)
        s[:d1, :d1] = t1
        if r_rank:
            qfh = q @ frame_v1.matrix.conj().T
            w_prev = layout.copy_frame(1).matrix
            s += w_prev @ qfh
            for l in range(2, count + 1):
                w_cur = layout.copy_frame(l).matrix
                s += R * (w_cur @ w_prev.conj().T)
                w_prev = w_cur
        return s

    if ambient <= _DENSE_ASSEMBLY_LIMIT:
        s = np.zeros((ambient, ambient), dtype=complex)
        s[:d1, :d1] = t1
        if r_rank:
            qfh = q @ frame_v1.matrix.conj().T
            base = layout.base_offset
            s[base:base + r_rank, :d1] = qfh
            for l in range(2, count + 1):
                rs = base + (l - 1) * r_rank
                ps = base + (l - 2) * r_rank
                for i in range(r_rank):
                    s[rs + i, ps + i] = R
        return s

    rows, cols, vals = [], [], []
    nz = np.nonzero(t1)
    rows.extend(nz[0].tolist())
    cols.extend(nz[1].tolist())
    vals.extend(t1[nz].tolist())
    if r_rank:
        qfh = q @ frame_v1.matrix.conj().T
        base = layout.base_offset
        qr, qc = np.nonzero(qfh)
        rows.extend((base + qr).tolist())
        cols.extend(qc.tolist())
        vals.extend(qfh[qr, qc].tolist())
        for l in range(2, count + 1):
            rs = base + (l - 1) * r_rank
            ps = base + (l - 2) * r_rank
            rows.extend(range(rs, rs + r_rank))
            cols.extend(range(ps, ps + r_rank))
            vals.extend([R] * r_rank)
    return sp.coo_matrix((vals, (rows, cols)),
                         shape=(ambient, ambient), dtype=complex).tocsr()


def weak_supercyclic_approximate(req: WeakApproxRequest) -> WeakApproxResult:
    """Contraction variant: flat orbit norms, hit recovered by a scalar.

    Runs the growth construction at R = 1 + min(epsilon, 1)/4 with half the
    budget, then divides by R.  The scalar a = R^N restores the target:
    <z - a S^N x, y_j> = 0 while ||S|| <= 1 and ||S^(l+1) x|| = ||S^l x||.
    """
    eps = float(req.epsilon)
    if eps <= 0.0:
        raise HypothesisViolationError("epsilon must be positive")
    r_small = 1.0 + min(eps, 1.0) / 4.0
    _validate(req, r_small, norm_cap=1.0)
    inner_req = WeakApproxRequest(
        T=req.T, controls=req.controls, duals=req.duals, x=req.x, z=req.z,
        epsilon=eps / 2.0, R=r_small, ambient_policy=req.ambient_policy,
        seed=req.seed)
    grown = weak_approximate(inner_req)
    s = grown.S * (1.0 / r_small)
    return WeakApproxResult(
        S=s, N=grown.N, layout=grown.layout,
        scale_a=float(r_small) ** grown.N, base_R=r_small,
        perturbed_T=grown.perturbed_T,
        perturbed_controls=grown.perturbed_controls,
        reduced=grown.reduced, frame_v1=grown.frame_v1)


def verify_weak(result: WeakApproxResult, req: WeakApproxRequest,
                dual_tol: float = 1e-8,
                growth_rtol: float = 1e-9) -> WeakVerifyReport:
    """Recompute norm, pairings, dual orthogonality and the growth profile."""
    s = result.S
    ambient = s.shape[0]
    eps = float(req.epsilon)
    flat = result.scale_a != 1.0
    cap = 1.0 if flat else result.base_R
    target_ratio = 1.0 if flat else result.base_R

    norm_value = operator_norm(s)
    norm_ok = norm_value <= cap + 1e-9

    t_pert = result.perturbed_T
    duals_amb = [embed(np.asarray(y, dtype=complex), ambient)
                 for y in req.duals]
    pairings, pairing_ok = [], []
    for xj, yj in zip(result.perturbed_controls, duals_amb):
        xe = embed(xj, ambient)
        # the base operator acts inside its own block, so apply it there
        moved = s @ xe - embed(t_pert @ xj, ambient)
        p = abs(inner(moved, yj))
        pairings.append(p)
        pairing_ok.append(p < eps)

    x_amb = embed(np.asarray(req.x, dtype=complex), ambient)
    z_amb = embed(np.asarray(req.z, dtype=complex), ambient)
    norms = [norm(x_amb)]
    v = x_amb
    for _ in range(result.N):
        v = s @ v
        norms.append(norm(v))
    miss = z_amb - result.scale_a * v
    dual_vals = [abs(inner(miss, yj)) for yj in duals_amb]
    dual_ok = [val <= dual_tol for val in dual_vals]

    ratios, growth_ok = [], True
    for lo, hi in zip(norms[:-1], norms[1:]):
        ratio = hi / lo if lo > 0.0 else float("inf")
        ratios.append(ratio)
        if not abs(ratio - target_ratio) <= growth_rtol * target_ratio:
            growth_ok = False

    return WeakVerifyReport(
        norm_value=norm_value, norm_ok=norm_ok,
        pairings=pairings, pairing_ok=pairing_ok,
        dual_orthogonality=dual_vals, dual_ok=dual_ok,
        growth_ratios=ratios, growth_ok=growth_ok)
