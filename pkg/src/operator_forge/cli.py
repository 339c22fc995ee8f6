"""Command-line runner: seeded experiments, JSON/CSV artifacts, figures.

Every subcommand writes a result JSON plus a manifest whose residuals are
recomputed by the matching verify operation, never copied from the
construction.  Exit codes: 0 success, 1 invalid config or failed --verify,
2 violated hypotheses, 3 structural infeasibility, 4 exhausted budget.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .battery import DEFAULT_SEED, SUMMARY_HEADER, demo_series, run_all
from .cyclic import (certificate_payload, cyclic_vector,
                     random_phase_eigenvalues, rapid_decrease_ok,
                     roots_of_unity)
from .exceptions import (BudgetExhaustedError, GammaDegenerateError,
                         HypothesisViolationError, IndefiniteFormError,
                         InsufficientDimensionError, MaxStepsExceededError,
                         NoRoomError, PositivityLostError)
from .independence import (cyclicity_openness_probe, krylov_matrix,
                           krylov_rank, make_orbit_independent)
from .linalg import operator_norm
from .orbits import (ProbeSet, density_report, multi_target_drive, orbit,
                     orbit_perturbation_bound, verify_drive,
                     weak_to_strong_bound)
from .sampling import (random_contraction, random_operator, random_unitary,
                       random_unit_vector, random_vector, rng)
from .schemas import ConfigError, ExperimentConfig, load_config_file, \
    validate_config
from .serialization import (dump_json, operator_to_json, vector_to_json,
                            write_csv)
from .strong import StrongApproxRequest, strong_approximate, verify_strong
from .weak import (WeakApproxRequest, verify_weak, weak_approximate,
                   weak_supercyclic_approximate)

ENV_PRECISION = "OPERATOR_FORGE_PRECISION"

DEFAULT_PRECISION = 512

# operators above this dimension are summarized, not embedded, in JSON
EMIT_OPERATOR_LIMIT = 600

_EXIT_HYPOTHESIS = 2
_EXIT_STRUCTURAL = 3
_EXIT_BUDGET = 4

_STRUCTURAL = (InsufficientDimensionError, GammaDegenerateError,
               IndefiniteFormError, PositivityLostError, NoRoomError)
_BUDGET = (BudgetExhaustedError, MaxStepsExceededError)


@dataclass
class RunManifest:
    config_digest: str
    artifact_version: str
    wall_time_s: float
    checks: list[dict]

    def payload(self) -> dict:
        return {"artifact_version": self.artifact_version,
                "config_digest": self.config_digest,
                "wall_time_s": self.wall_time_s,
                "checks": self.checks}


def _check(name: str, ok, residual=None) -> dict:
    entry: dict = {"name": name, "pass": bool(ok)}
    if residual is not None:
        entry["residual"] = float(residual)
    return entry


def _operator_payload(a) -> dict | None:
    if a.shape[0] > EMIT_OPERATOR_LIMIT:
        return None
    return operator_to_json(a)


def _cmd_approx_strong(cfg: ExperimentConfig, out: Path):
    p = cfg.params
    d, big_r, eps = p["dim"], p["R"], p["epsilon"]
    n = p["n_controls"]
    if d <= 2 * n:
        raise HypothesisViolationError(
            "need dim > 2*n_controls so the start vector can sit outside "
            "the control span")
    gen = rng(p.get("seed", DEFAULT_SEED), 301)
    t = random_operator(gen, d, 0.5 * big_r)
    controls = [random_unit_vector(gen, d) for _ in range(n)]
    x = random_unit_vector(gen, d)
    z = random_vector(gen, d)
    req = StrongApproxRequest(T=t, R=big_r, controls=controls, x=x, z=z,
                              epsilon=eps)
    res = strong_approximate(req)
    rep = verify_strong(res, req, hit_tol=p.get("tol", 1e-8))
    checks = [_check("operator_norm", rep.norm_ok, rep.norm_value),
              _check("orbit_hit", rep.hit_ok, rep.hit_residual)]
    checks += [_check(f"control_{j}", ok, r) for j, (ok, r) in
               enumerate(zip(rep.control_ok, rep.control_residuals))]
    payload = {
        "dim": d, "R": big_r, "epsilon": eps, "n_controls": n,
        "seed": p.get("seed", DEFAULT_SEED),
        "N": res.N, "chain_length": res.M, "delta": res.delta,
        "gamma": res.gamma, "ambient_dim": res.ambient_dim,
        "x": vector_to_json(x), "z": vector_to_json(z),
        "S": _operator_payload(res.S),
    }
    return payload, checks


def _cmd_approx_weak(cfg: ExperimentConfig, out: Path):
    p = cfg.params
    d, eps, n = p["dim"], p["epsilon"], p["n_pairs"]
    flat = p.get("supercyclic", False)
    if not flat and "R" not in p:
        raise ConfigError("R is required unless supercyclic is set")
    if d <= 2 * n:
        raise HypothesisViolationError(
            "need dim > 2*n_pairs so the start vector can sit outside "
            "the control span")
    gen = rng(p.get("seed", DEFAULT_SEED), 302)
    if flat:
        t = random_contraction(gen, d, 0.5)
    else:
        t = random_operator(gen, d, 0.5 * p["R"])
    controls = [random_unit_vector(gen, d) for _ in range(n)]
    duals = [random_unit_vector(gen, d) for _ in range(n)]
    x = random_unit_vector(gen, d)
    z = random_vector(gen, d)
    req = WeakApproxRequest(T=t, controls=controls, duals=duals, x=x, z=z,
                            epsilon=eps, R=p.get("R"))
    res = (weak_supercyclic_approximate if flat else weak_approximate)(req)
    rep = verify_weak(res, req, dual_tol=p.get("tol", 1e-8))
    checks = [_check("operator_norm", rep.norm_ok, rep.norm_value),
              _check("growth_profile", rep.growth_ok)]
    checks += [_check(f"pairing_{j}", ok, r) for j, (ok, r) in
               enumerate(zip(rep.pairing_ok, rep.pairings))]
    checks += [_check(f"dual_hit_{j}", ok, r) for j, (ok, r) in
               enumerate(zip(rep.dual_ok, rep.dual_orthogonality))]
    s_dense = res.S if isinstance(res.S, np.ndarray) else None
    payload = {
        "dim": d, "epsilon": eps, "n_pairs": n, "supercyclic": flat,
        "R": res.base_R, "scale_a": res.scale_a,
        "seed": p.get("seed", DEFAULT_SEED),
        "N": res.N, "ambient_dim": res.ambient_dim,
        "x": vector_to_json(x), "z": vector_to_json(z),
        "S": _operator_payload(s_dense) if s_dense is not None else None,
    }
    return payload, checks


def _cmd_cyclic_unitary(cfg: ExperimentConfig, out: Path):
    p = cfg.params
    d, trunc = p["d"], p["truncation"]
    precision = p.get("precision_bits", DEFAULT_PRECISION)
    mode = p.get("mode", "roots")
    if mode == "roots":
        lam = roots_of_unity(d, precision)
    else:
        lam = random_phase_eigenvalues(rng(p.get("seed", DEFAULT_SEED), 303),
                                       d, precision)
    cert = cyclic_vector(lam, trunc, precision=precision)
    from mpmath import mp, mpf
    with mp.workprec(precision):
        b0_exact = cert.b.b_values[0] == mpf(1)
        decay = rapid_decrease_ok(cert.b)
        tail = float(cert.b.b_values[trunc])
    checks = [_check("b0_exact", b0_exact),
              _check("rapid_decrease", decay),
              _check("tail_positive", tail > 0.0, tail)]
    payload = certificate_payload(cert)
    payload["mode"] = mode
    return payload, checks


def _cmd_independence(cfg: ExperimentConfig, out: Path):
    p = cfg.params
    d, eps = p["dim"], p["epsilon"]
    trials = p.get("trials", 12)
    gen = rng(p.get("seed", DEFAULT_SEED), 304)
    t = random_contraction(gen, d)
    x = random_unit_vector(gen, d)
    t_final, steps, terminated = make_orbit_independent(t, x, eps)
    rank = krylov_rank(t_final, x)
    drift = operator_norm(t_final - t)
    top = operator_norm(t_final)
    sv = np.linalg.svd(krylov_matrix(t_final, x), compute_uv=False)
    frac = cyclicity_openness_probe(t_final, x, trials, 0.1 * float(sv[-1]),
                                    seed=p.get("seed", DEFAULT_SEED))
    checks = [_check("terminated", terminated),
              _check("full_krylov_rank", rank == d, float(d - rank)),
              _check("contraction", top <= 1.0 + 1e-9, top),
              _check("distance_within_epsilon", drift < eps, drift),
              _check("openness_fraction", frac == 1.0, 1.0 - frac)]
    payload = {
        "dim": d, "epsilon": eps, "seed": p.get("seed", DEFAULT_SEED),
        "steps": steps, "krylov_rank": rank, "operator_move": drift,
        "openness_fraction": frac, "krylov_smallest_sv": float(sv[-1]),
        "x": vector_to_json(x), "T_final": _operator_payload(t_final),
    }
    return payload, checks


def _cmd_orbit(cfg: ExperimentConfig, out: Path):
    p = cfg.params
    d, steps = p["dim"], p["steps"]
    gen = rng(p.get("seed", DEFAULT_SEED), 305)
    t = random_operator(gen, d, p.get("norm", 1.0))
    x = random_unit_vector(gen, d)
    rep = orbit(t, x, steps)
    pairs = list(enumerate(rep.norms))
    write_csv(out / "orbit_norms.csv", ["step", "norm"], pairs)
    if p.get("figure", False):
        from .plots import save_orbit_norms
        save_orbit_norms(out / "orbit_norms.png", pairs)
    finite = all(np.isfinite(v) for v in rep.norms)
    checks = [_check("norms_finite", finite)]
    payload = {
        "dim": d, "steps": steps, "seed": p.get("seed", DEFAULT_SEED),
        "operator_norm_target": p.get("norm", 1.0),
        "norms": [float(v) for v in rep.norms],
        "growth_ratios": [float(v) for v in rep.growth_ratios],
    }
    return payload, checks


def _cmd_density(cfg: ExperimentConfig, out: Path):
    p = cfg.params
    d, steps = p["dim"], p["steps"]
    n_probes, radius = p["n_probes"], p["radius"]
    mode = p.get("mode", "projective")
    gen = rng(p.get("seed", DEFAULT_SEED), 306)
    t = random_unitary(gen, d)
    x = random_unit_vector(gen, d)
    rep = orbit(t, x, steps)
    probes = [random_unit_vector(gen, d) for _ in range(n_probes)]
    dens = density_report(rep, ProbeSet(probes=probes, radius=radius),
                          mode=mode)
    rows = []
    for j, o in enumerate(dens.outcomes):
        rows.append([j, mode, o.hit, o.best_time, o.best_distance,
                     float(o.best_scale.real), float(o.best_scale.imag)])
    write_csv(out / "density.csv",
              ["probe_index", "mode", "hit", "best_time", "best_distance",
               "scale_re", "scale_im"], rows)
    if p.get("figure", False):
        from .plots import save_density_distances
        save_density_distances(
            out / "density_distances.png",
            [(j, o.best_distance) for j, o in enumerate(dens.outcomes)])
    checks = [_check("report_complete", len(dens.outcomes) == n_probes),
              _check("hit_distances_within_radius",
                     all(o.best_distance <= radius
                         for o in dens.outcomes if o.hit))]
    payload = {
        "dim": d, "steps": steps, "n_probes": n_probes, "radius": radius,
        "mode": mode, "seed": p.get("seed", DEFAULT_SEED),
        "hit_count": dens.hit_count,
    }
    return payload, checks


def _cmd_drive(cfg: ExperimentConfig, out: Path):
    p = cfg.params
    d, m, eps = p["dim"], p["n_targets"], p["epsilon"]
    big_r = p.get("R", 2.0)
    gen = rng(p.get("seed", DEFAULT_SEED), 307)
    t = random_operator(gen, d, 0.5 * big_r)
    x = random_unit_vector(gen, d)
    targets = [random_vector(gen, d) for _ in range(m)]
    s, schedule, rep = multi_target_drive(t, x, targets, eps, big_r)
    ok, errors, norm_value = verify_drive(s, x, targets, schedule, eps,
                                          big_r)
    checks = [_check("operator_norm", norm_value <= big_r + 1e-9,
                     norm_value)]
    checks += [_check(f"hit_{j}", e < eps, e) for j, e in enumerate(errors)]
    payload = {
        "dim": d, "n_targets": m, "R": big_r, "epsilon": eps,
        "seed": p.get("seed", DEFAULT_SEED),
        "schedule": schedule, "hit_errors": errors,
        "tap_norms": rep.tap_norms, "chain_lengths": rep.chain_lengths,
        "gamma": rep.gamma, "ambient_dim": rep.ambient_dim,
        "x": vector_to_json(x),
        "targets": [vector_to_json(z) for z in targets],
        "S": _operator_payload(s),
    }
    return payload, checks


def _cmd_prop2_check(cfg: ExperimentConfig, out: Path):
    p = cfg.params
    trials = p["trials"]
    d_max = p.get("dim", 8)
    l_max = p.get("l_max", 6)
    seed = p.get("seed", DEFAULT_SEED)
    worst_ws = worst_op = -float("inf")
    bad_ws = bad_op = 0
    for i in range(trials):
        gen = rng(seed, 308, i)
        d = int(gen.integers(2, d_max + 1))
        s = random_unitary(gen, d)
        s_k = random_contraction(gen, d, float(gen.uniform(0.2, 1.0)))
        v = random_vector(gen, d)
        lhs, rhs = weak_to_strong_bound(s, s_k, v)
        worst_ws = max(worst_ws, lhs - rhs)
        bad_ws += lhs > rhs + 1e-9
    for i in range(trials):
        gen = rng(seed, 309, i)
        d = int(gen.integers(2, d_max + 1))
        s = random_operator(gen, d, float(gen.uniform(0.2, 1.2)))
        s_k = s + random_operator(gen, d, float(gen.uniform(0.0, 0.4)))
        x = random_vector(gen, d)
        lhs, rhs = orbit_perturbation_bound(s, s_k, x,
                                            int(gen.integers(1, l_max + 1)))
        worst_op = max(worst_op, lhs - rhs)
        bad_op += lhs > rhs + 1e-9
    checks = [_check("weak_to_strong", bad_ws == 0, worst_ws),
              _check("orbit_perturbation", bad_op == 0, worst_op)]
    payload = {
        "trials": trials, "dim": d_max, "l_max": l_max, "seed": seed,
        "weak_to_strong_violations": bad_ws,
        "orbit_perturbation_violations": bad_op,
        "worst_margins": [worst_ws, worst_op],
    }
    return payload, checks


def _cmd_suite(cfg: ExperimentConfig, out: Path):
    seed = cfg.params.get("seed", DEFAULT_SEED)
    outcomes = run_all(seed)
    for o in outcomes:
        print(f"criterion {o.crit_id} {o.name}: "
              f"{'pass' if o.passed else 'FAIL'} ({o.elapsed_s:.1f}s)")
    write_csv(out / "summary.csv", SUMMARY_HEADER,
              [o.summary_row() for o in outcomes])
    series = demo_series(seed)
    for o in outcomes:
        series.update(o.series)
    from .plots import (save_b_decay, save_density_distances,
                        save_orbit_norms)
    write_csv(out / "orbit_norms.csv", ["step", "norm"],
              series["orbit_norms"])
    save_orbit_norms(out / "orbit_norms.png", series["orbit_norms"])
    write_csv(out / "density_distances.csv", ["probe_index", "distance"],
              series["density_distances"])
    save_density_distances(out / "density_distances.png",
                           series["density_distances"])
    write_csv(out / "b_decay.csv", ["index", "log10_value"],
              series["b_decay"])
    save_b_decay(out / "b_decay.png", series["b_decay"])
    checks = [_check(o.name, o.passed, o.worst) | {"elapsed_s": o.elapsed_s}
              for o in outcomes]
    payload = {
        "seed": seed,
        "criteria": [{"criterion": o.crit_id, "name": o.name,
                      "instances": o.instances, "passed": o.passed,
                      "worst_residual": o.worst, "detail": o.detail}
                     for o in outcomes],
    }
    return payload, checks


_HANDLERS = {
    "approx-strong": _cmd_approx_strong,
    "approx-weak": _cmd_approx_weak,
    "cyclic-unitary": _cmd_cyclic_unitary,
    "independence": _cmd_independence,
    "orbit": _cmd_orbit,
    "density": _cmd_density,
    "drive": _cmd_drive,
    "prop2-check": _cmd_prop2_check,
    "suite": _cmd_suite,
}

# flag name, params key, type
_PARAM_FLAGS = {
    "approx-strong": [("--dim", "dim", int), ("--R", "R", float),
                      ("--n-controls", "n_controls", int),
                      ("--epsilon", "epsilon", float)],
    "approx-weak": [("--dim", "dim", int), ("--R", "R", float),
                    ("--n-pairs", "n_pairs", int),
                    ("--epsilon", "epsilon", float),
                    ("--supercyclic", "supercyclic", bool)],
    "cyclic-unitary": [("--d", "d", int), ("--truncation", "truncation", int),
                       ("--mode", "mode", str)],
    "independence": [("--dim", "dim", int), ("--epsilon", "epsilon", float),
                     ("--trials", "trials", int)],
    "orbit": [("--dim", "dim", int), ("--steps", "steps", int),
              ("--norm", "norm", float), ("--figure", "figure", bool)],
    "density": [("--dim", "dim", int), ("--steps", "steps", int),
                ("--n-probes", "n_probes", int),
                ("--radius", "radius", float), ("--mode", "mode", str),
                ("--figure", "figure", bool)],
    "drive": [("--dim", "dim", int), ("--n-targets", "n_targets", int),
              ("--R", "R", float), ("--epsilon", "epsilon", float)],
    "prop2-check": [("--dim", "dim", int), ("--trials", "trials", int),
                    ("--l-max", "l_max", int)],
    "suite": [],
}

_DEFAULTS = {
    "approx-strong": {"dim": 12, "R": 2.0, "n_controls": 2, "epsilon": 0.3},
    "approx-weak": {"dim": 10, "n_pairs": 2, "epsilon": 1.5},
    "cyclic-unitary": {"d": 8, "truncation": 6, "mode": "roots"},
    "independence": {"dim": 8, "epsilon": 0.2},
    "orbit": {"dim": 8, "steps": 60},
    "density": {"dim": 6, "steps": 200, "n_probes": 16, "radius": 0.4},
    "drive": {"dim": 4, "n_targets": 3, "epsilon": 1e-3},
    "prop2-check": {"trials": 200},
    "suite": {},
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="operator-forge",
        description="Constructive operator approximation experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _HANDLERS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; replaces the "
                                        "parameter flags")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--precision", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--out", default=".")
        p.add_argument("--verify", action="store_true",
                       help="exit nonzero when any manifest check fails")
        for flag, key, typ in _PARAM_FLAGS[name]:
            if typ is bool:
                p.add_argument(flag, dest=f"param_{key}",
                               action="store_true", default=None)
            else:
                p.add_argument(flag, dest=f"param_{key}", type=typ,
                               default=None)
    return parser


def _collect_config(args) -> ExperimentConfig:
    name = args.command
    explicit = {}
    for _, key, _typ in _PARAM_FLAGS[name]:
        val = getattr(args, f"param_{key}", None)
        if val is not None:
            explicit[key] = val
    if args.config:
        if explicit:
            raise ConfigError(
                "give parameters through --config or flags, not both")
        cfg = load_config_file(name, args.config)
        params = cfg.params
    else:
        params = {**_DEFAULTS[name], **explicit}
    if args.seed is not None:
        params["seed"] = args.seed
    if args.tol is not None:
        params["tol"] = args.tol
    if name == "cyclic-unitary" and "precision_bits" not in params:
        if args.precision is not None:
            params["precision_bits"] = args.precision
        elif os.environ.get(ENV_PRECISION):
            try:
                params["precision_bits"] = int(os.environ[ENV_PRECISION])
            except ValueError:
                raise ConfigError(
                    f"{ENV_PRECISION} must be an integer") from None
    return validate_config(name, params)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _collect_config(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    out = Path(cfg.params.get("out", args.out))
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        payload, checks = _HANDLERS[cfg.subcommand](cfg, out)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except HypothesisViolationError as e:
        print(f"hypothesis violated: {e}", file=sys.stderr)
        return _EXIT_HYPOTHESIS
    except _STRUCTURAL as e:
        print(f"construction infeasible: {e}", file=sys.stderr)
        return _EXIT_STRUCTURAL
    except _BUDGET as e:
        print(f"budget exhausted: {e}", file=sys.stderr)
        return _EXIT_BUDGET
    manifest = RunManifest(config_digest=cfg.digest(),
                           artifact_version=__version__,
                           wall_time_s=time.perf_counter() - t0,
                           checks=checks)
    dump_json(payload, out / "result.json")
    dump_json(manifest.payload(), out / "manifest.json")
    failed = [c["name"] for c in checks if not c["pass"]]
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        if args.verify:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
