"""Orbit computation, density scans, convergence bounds, and a finite
multi-target orbit driver.

The driver builds one operator whose orbit passes within epsilon of m
prescribed targets at scheduled times.  Each target is tilted by a fresh
coordinate so the start vector always has positive distance gamma to the
tilted span; the component along that distance hops onto a relay of
amplifying chains, and a rank-one tap at the end of each chain is solved
exactly against the simulated orbit so the scheduled state comes out to
working precision.  The background operator acts through its two-sided
compression to the tilted target span, which that compression leaves
invariant, so the orbit can never wander back onto the relay entrance
and re-fire it.  Tap norms stay below (R-1)/(2 sqrt(m)) by chain-length
choice, which keeps the assembled operator inside B_R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (BudgetExhaustedError, HypothesisViolationError)
from .linalg import (apply_power, embed, inner, norm, operator_norm,
                     orthonormalize, project)

_CHAIN_CAP = 10_000


@dataclass
class ProbeSet:
    probes: list[np.ndarray]
    radius: float

    def validate(self) -> None:
        if self.radius <= 0.0:
            raise HypothesisViolationError("probe radius must be positive")
        for k, p in enumerate(self.probes):
            if norm(p) == 0.0:
                raise HypothesisViolationError(f"probe {k} is zero")


@dataclass
class OrbitReport:
    points: list[np.ndarray]
    norms: list[float]
    growth_ratios: list[float]


@dataclass
class ProbeOutcome:
    hit: bool
    best_time: int
    best_distance: float
    best_scale: complex


@dataclass
class DensityReport:
    mode: str
    radius: float
    outcomes: list[ProbeOutcome]

    @property
    def hit_count(self) -> int:
        return sum(1 for o in self.outcomes if o.hit)


def orbit(T, x: np.ndarray, n_steps: int) -> OrbitReport:
    """x, Tx, ..., T^N x with norms and consecutive growth ratios."""
    if n_steps < 0:
        raise HypothesisViolationError("orbit horizon must be nonnegative")
    v = np.asarray(x, dtype=complex)
    points = [v.copy()]
    for _ in range(n_steps):
        v = T @ v
        points.append(v.copy())
    norms = [norm(p) for p in points]
    ratios = [b / a for a, b in zip(norms[:-1], norms[1:]) if a > 0.0]
    return OrbitReport(points=points, norms=norms, growth_ratios=ratios)


def growth_check(report: OrbitReport, R: float, tol: float = 1e-9) -> bool:
    return all(abs(r - R) <= tol * R for r in report.growth_ratios)


def projective_distance(z: np.ndarray, v: np.ndarray) -> float:
    """Distance from z to the complex line through v."""
    nv = norm(v)
    if nv == 0.0:
        raise HypothesisViolationError("line direction must be nonzero")
    overlap = abs(inner(z, v)) ** 2 / (nv * nv)
    return math.sqrt(max(0.0, norm(z) ** 2 - overlap))


def density_report(report: OrbitReport, probes: ProbeSet,
                   mode: str = "exact") -> DensityReport:
    """Nearest-approach scan of the orbit against each probe.

    Exact mode measures ||T^n x - p||; projective mode measures the
    distance from p to the line through T^n x and reports the optimal
    scale a = <p, v>/||v||^2 at the best time.
    """
    if mode not in ("exact", "projective"):
        raise HypothesisViolationError(f"unknown density mode {mode!r}")
    probes.validate()
    outcomes = []
    for p in probes.probes:
        best_d = math.inf
        best_t = 0
        best_a = complex(1.0)
        for t, pt in enumerate(report.points):
            if mode == "exact":
                dist = norm(pt - p)
                a = complex(1.0)
            else:
                npt = norm(pt)
                if npt == 0.0:
                    dist = norm(p)
                    a = complex(0.0)
                else:
                    dist = projective_distance(p, pt)
                    a = inner(p, pt) / (npt * npt)
            if dist < best_d:
                best_d, best_t, best_a = dist, t, a
        outcomes.append(ProbeOutcome(hit=best_d < probes.radius,
                                     best_time=best_t,
                                     best_distance=best_d,
                                     best_scale=best_a))
    return DensityReport(mode=mode, radius=probes.radius, outcomes=outcomes)


def weak_to_strong_bound(S, S_k, v: np.ndarray) -> tuple[float, float]:
    """||(S_k - S)v||^2 against 2||v||^2 - 2 Re<S_k v, S v>.

    Valid whenever S_k is a contraction and S preserves the norm of v;
    these hypotheses are checked, and the pair satisfies lhs <= rhs.
    """
    if operator_norm(S_k) > 1.0 + 1e-9:
        raise HypothesisViolationError("S_k must be a contraction")
    sv = S @ v
    nv = norm(v)
    if abs(norm(sv) - nv) > 1e-9 * max(nv, 1.0):
        raise HypothesisViolationError("S must preserve the norm of v")
    skv = S_k @ v
    lhs = norm(skv - sv) ** 2
    rhs = 2.0 * nv * nv - 2.0 * float(np.real(inner(skv, sv)))
    return lhs, rhs


def orbit_perturbation_bound(S, S_k, x: np.ndarray,
                             l: int) -> tuple[float, float]:
    """True orbit deviation after l steps against the unrolled recursion
    bound ||S_k^i x - S^i x|| <= ||S_k|| b_(i-1) + ||(S_k - S) S^(i-1) x||."""
    if l < 1:
        raise HypothesisViolationError("need at least one step")
    nk = operator_norm(S_k)
    bound = 0.0
    v = np.asarray(x, dtype=complex)
    for _ in range(l):
        bound = nk * bound + norm(S_k @ v - S @ v)
        v = S @ v
    true_err = norm(apply_power(S_k, np.asarray(x, dtype=complex), l) - v)
    return true_err, bound


@dataclass
class DriveReport:
    schedule: list[int]
    hit_errors: list[float]
    tap_norms: list[float]
    chain_lengths: list[int]
    gamma: float
    ambient_dim: int
    delta: float
    epsilon: float

    @property
    def ok(self) -> bool:
        return all(e < self.epsilon for e in self.hit_errors)


def multi_target_drive(T0, x: np.ndarray, targets: list[np.ndarray],
                       epsilon: float, R: float,
                       seed: int = 0) -> tuple[np.ndarray, list[int], DriveReport]:
    """One operator in B_R whose orbit visits every target within epsilon.

    Parameters are fully determined by the inputs; seed is accepted for
    interface symmetry but the construction is deterministic.
    """
    del seed
    if R <= 1.0:
        raise HypothesisViolationError("R must exceed 1")
    if epsilon <= 0.0:
        raise HypothesisViolationError("epsilon must be positive")
    if not targets:
        raise HypothesisViolationError("need at least one target")
    x = np.asarray(x, dtype=complex)
    if norm(x) == 0.0:
        raise HypothesisViolationError("start vector must be nonzero")
    targets = [np.asarray(z, dtype=complex) for z in targets]
    for k, z in enumerate(targets):
        if z.shape != x.shape:
            raise HypothesisViolationError(
                f"target {k} does not live in the space of the start vector")
        if norm(z) == 0.0:
            raise HypothesisViolationError(f"target {k} is zero")
    T0 = np.asarray(T0, dtype=complex)
    if operator_norm(T0) > R + 1e-9:
        raise HypothesisViolationError("T0 lies outside B_R")

    m = len(targets)
    d0 = x.shape[0]
    delta = R * (R - 1.0) / 2.0
    c = 1.0 / R
    h = (R + 1.0) / 2.0
    tilt = epsilon / 4.0
    tap_cap = c * delta / math.sqrt(m)

    # tilted targets in dimension d0 + m; the tilt guarantees positive
    # distance from x to their span (x inside it would force every tilt
    # coefficient, hence x itself, to vanish)
    dm = d0 + m
    tilted = []
    for j, z in enumerate(targets):
        v = embed(z, dm)
        v[d0 + j] = tilt
        tilted.append(v)

    confined = orthonormalize(tilted, dim=dm)
    x_dm = embed(x, dm)
    resid = x_dm - project(confined, x_dm)
    gamma = norm(resid)

    # chain lengths: the tap denominator seed h^(M+...) must clear the
    # worst numerator at the tap norm cap; the numerator is one step image
    # of the accumulated mass, hence the (1 + R) multiplier
    big_b = (1.0 + R) * (norm(x) + sum(norm(z) + epsilon for z in targets)
                         + 1.0)
    log_h = math.log(h)

    def chain_len(seed_size: float) -> int:
        need = math.log(big_b / (tap_cap * seed_size)) / log_h
        length = max(1, int(math.ceil(need)) + 1)
        if length > _CHAIN_CAP:
            raise BudgetExhaustedError(
                f"relay chain length {length} exceeds cap")
        return length

    lengths = [chain_len(gamma * h)]
    for _ in range(1, m):
        lengths.append(chain_len(tilt))

    schedule = [lengths[0] + 2]
    for length in lengths[1:]:
        schedule.append(schedule[-1] + length + 1)

    ambient = dm + sum(length + 1 for length in lengths)
    starts = []
    off = dm
    for length in lengths:
        starts.append(off)
        off += length + 1

    eta = embed(resid / gamma, ambient)

    # A = c P T0 P + h hop + h chains, P the tilted-span projection;
    # taps are solved columns
    a = np.zeros((ambient, ambient), dtype=complex)
    if confined.size:
        fmat = np.zeros((ambient, confined.size), dtype=complex)
        fmat[:dm, :] = confined.matrix
        compressed = fmat.conj().T @ (embed(T0, ambient) @ fmat)
        a += c * fmat @ compressed @ fmat.conj().T
    hop_target = np.zeros(ambient, dtype=complex)
    hop_target[starts[0]] = 1.0
    a += h * np.outer(hop_target, eta.conj())
    for j, length in enumerate(lengths):
        for i in range(length):
            a[starts[j] + i + 1, starts[j] + i] = h

    s = a.copy()
    tap_norms = []
    hit_errors = []
    v = embed(x, ambient)
    step = 0
    for j in range(m):
        end_coord = starts[j] + lengths[j]
        while step < schedule[j] - 1:
            v = s @ v
            step += 1
        kappa = complex(v[end_coord])
        expected = (gamma * h ** (lengths[j] + 1) if j == 0
                    else tilt * h ** lengths[j])
        if abs(kappa) < 0.5 * expected:
            raise BudgetExhaustedError(
                f"relay coefficient collapsed at target {j}")
        target_state = embed(tilted[j], ambient)
        if j + 1 < m:
            target_state[starts[j + 1]] = tilt
        partial = s @ v - kappa * s[:, end_coord]
        tap = (target_state - partial) / kappa
        tap_norm = norm(tap)
        if tap_norm > tap_cap:
            raise BudgetExhaustedError(
                f"tap norm {tap_norm:.3e} exceeds cap {tap_cap:.3e}")
        tap_norms.append(tap_norm)
        s[:, end_coord] += tap
        v = partial + kappa * tap + kappa * a[:, end_coord]
        step += 1
        z_amb = embed(targets[j], ambient)
        hit_errors.append(norm(v - z_amb))

    report = DriveReport(schedule=schedule, hit_errors=hit_errors,
                         tap_norms=tap_norms, chain_lengths=lengths,
                         gamma=gamma, ambient_dim=ambient, delta=delta,
                         epsilon=float(epsilon))
    return s, schedule, report


def verify_drive(S, x: np.ndarray, targets: list[np.ndarray],
                 schedule: list[int], epsilon: float,
                 R: float) -> tuple[bool, list[float], float]:
    """Replay the orbit and recheck every scheduled hit and the norm."""
    ambient = S.shape[0]
    v = embed(np.asarray(x, dtype=complex), ambient)
    errors = []
    step = 0
    for n_j, z in zip(schedule, targets):
        while step < n_j:
            v = S @ v
            step += 1
        errors.append(norm(v - embed(np.asarray(z, dtype=complex), ambient)))
    norm_value = operator_norm(S)
    ok = norm_value <= R + 1e-9 and all(e < epsilon for e in errors)
    return ok, errors, norm_value
