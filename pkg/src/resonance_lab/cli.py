"""Experiment runner: INI config in, deterministic CSV/JSON reports out.

    resonance-lab <subcommand> --config <path> [--seed N] [--out <dir>]

Subcommands: spectrum, resonance, branch, semiflow, report.  Exit codes:
0 success, 2 config error, 3 numerical failure, 4 verdict negative (only
when the experiment declares expect_positive).  Identical config and seed
produce byte-identical outputs; the effective config and seed are embedded
in every JSON report.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bifurcation as bif
from . import semiflow as sf
from .grid import Grid, GridError, field_norms, make_grid
from .nonlinearity import (
    NonlinearityError,
    NonlinearitySpec,
    check_landesman_lazer,
    check_sign_condition,
    kernel_sphere_probe,
    make_nonlinearity,
)
from .potential import PotentialError, PotentialSpec, make_potential
from .reporting import write_csv, write_json, write_snapshots
from .solver import SolverConfig
from .spectral import (
    HamiltonianOperator,
    Projections,
    ResonantLambdaError,
    SpectralData,
    SpectralError,
    assemble_hamiltonian,
    build_projections,
    eigenpairs_below,
    morse_count,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERDICT = 4

SUBCOMMANDS = ("spectrum", "resonance", "branch", "semiflow", "report")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Parsed and validated experiment configuration."""

    grid: dict
    potential: dict
    nonlinearity: dict
    spectral: dict
    experiment: dict
    output_dir: str
    seed: int
    workers: int
    source_path: str

    def effective(self) -> dict:
        return {
            "grid": self.grid,
            "potential": self.potential,
            "nonlinearity": self.nonlinearity,
            "spectral": self.spectral,
            "experiment": self.experiment,
            "output": {"dir": self.output_dir},
            "run": {"seed": self.seed, "workers": self.workers},
        }


def _get(section, key, cast, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    raw = section[key]
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc


def parse_config(path: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")

    if "grid" not in parser:
        raise ConfigError("missing [grid] section")
    g = parser["grid"]
    grid_cfg = {
        "ndim": _get(g, "ndim", int, 1),
        "half_width": _get(g, "half_width", float, required=True),
        "points_per_axis": _get(g, "points_per_axis", int, required=True),
    }

    if "potential" not in parser:
        raise ConfigError("missing [potential] section")
    p = parser["potential"]
    pot_cfg = {"family": _get(p, "family", str, required=True)}
    for key in ("c", "ell", "offset", "depth", "width", "alpha",
                "cutoff_radius", "p"):
        val = _get(p, key, float)
        if val is not None:
            pot_cfg[key] = val
    center = _get(p, "center", str)
    if center is not None:
        pot_cfg["center"] = [float(tok) for tok in center.split()]
    policy = _get(p, "policy", str)
    if policy is not None:
        pot_cfg["policy"] = policy

    nl = parser["nonlinearity"] if "nonlinearity" in parser else {}
    nl_cfg = {"family": _get(nl, "family", str, "zero")}
    for key in ("amplitude", "width"):
        val = _get(nl, key, float)
        if val is not None:
            nl_cfg[key] = val

    spc = parser["spectral"] if "spectral" in parser else {}
    spec_cfg = {
        "ceiling": _get(spc, "ceiling", float),
        "tol_eig": _get(spc, "tol_eig", float, 1e-8),
        "cluster_tol": _get(spc, "cluster_tol", float),
        "max_count": _get(spc, "max_count", int, 64),
        "lambda0_index": _get(spc, "lambda0_index", int),
        "lambda0_value": _get(spc, "lambda0_value", float),
        "delta_request": _get(spc, "delta_request", float),
        "morse_lambdas": [
            float(tok)
            for tok in _get(spc, "morse_lambdas", str, "").split()
        ],
    }
    for key in ("tol_eig",):
        if spec_cfg[key] is not None and spec_cfg[key] <= 0:
            raise ConfigError(f"[spectral] {key} must be positive")

    exp = parser["experiment"] if "experiment" in parser else {}
    exp_cfg = {
        "side": _get(exp, "side", str, "minus"),
        "num_points": _get(exp, "num_points", int, 12),
        "growth_factor": _get(exp, "growth_factor", float, 4.0),
        "window": _get(exp, "window", int, 5),
        "tol_fp": _get(exp, "tol_fp", float, 1e-8),
        "tol_pde": _get(exp, "tol_pde", float, 1e-6),
        "max_iter": _get(exp, "max_iter", int, 200),
        "horizon": _get(exp, "horizon", float, 10.0),
        "dt": _get(exp, "dt", float),
        "stop": _get(exp, "stop", str, "equilibrium"),
        "save_every": _get(exp, "save_every", int, 10),
        "lam": _get(exp, "lam", float),
        "initial": _get(exp, "initial", str, "kernel 1.0"),
        "snapshots": _get(exp, "snapshots", bool, False),
        "tail_radii": [
            float(tok) for tok in _get(exp, "tail_radii", str, "").split()
        ],
        "probe_radii": [
            float(tok)
            for tok in _get(exp, "probe_radii", str, "1 10 100").split()
        ],
        "sample_budget": _get(exp, "sample_budget", int, 4096),
        "expect_positive": _get(exp, "expect_positive", bool, False),
    }
    for key in ("tol_fp", "tol_pde", "horizon", "growth_factor"):
        if exp_cfg[key] is not None and exp_cfg[key] <= 0:
            raise ConfigError(f"[experiment] {key} must be positive")

    out = parser["output"] if "output" in parser else {}
    run = parser["run"] if "run" in parser else {}
    return ExperimentConfig(
        grid=grid_cfg,
        potential=pot_cfg,
        nonlinearity=nl_cfg,
        spectral=spec_cfg,
        experiment=exp_cfg,
        output_dir=_get(out, "dir", str, "out"),
        seed=_get(run, "seed", int, 0),
        workers=_get(run, "workers", int, os.cpu_count() or 1),
        source_path=str(path),
    )


# -- pipeline pieces ----------------------------------------------------------


def _build_grid(cfg: ExperimentConfig) -> Grid:
    return make_grid(
        cfg.grid["ndim"], cfg.grid["half_width"], cfg.grid["points_per_axis"]
    )


def _build_potential(cfg: ExperimentConfig, grid: Grid) -> PotentialSpec:
    params = dict(cfg.potential)
    family = params.pop("family")
    if "ell" in params:
        params["ell"] = float(params["ell"])
    return make_potential(grid, family, **params)


def _build_nonlinearity(cfg: ExperimentConfig, grid: Grid) -> NonlinearitySpec:
    params = dict(cfg.nonlinearity)
    family = params.pop("family")
    return make_nonlinearity(grid, family, **params)


def _build_spectral(cfg: ExperimentConfig, op: HamiltonianOperator) -> SpectralData:
    s = cfg.spectral
    return eigenpairs_below(
        op,
        ceiling=s["ceiling"],
        tol_eig=s["tol_eig"],
        cluster_tol=s["cluster_tol"],
        max_count=s["max_count"],
    )


def _resolve_lambda0(cfg: ExperimentConfig, data: SpectralData) -> float:
    s = cfg.spectral
    try:
        if s["lambda0_index"] is not None:
            return data.select_lambda0(("index", s["lambda0_index"]))
        if s["lambda0_value"] is not None:
            return data.select_lambda0(("value", s["lambda0_value"]))
    except SpectralError as exc:
        raise ConfigError(f"unresolvable lambda0: {exc}") from exc
    raise ConfigError(
        "[spectral] needs lambda0_index or lambda0_value to select lambda0"
    )


def _initial_field(cfg: ExperimentConfig, grid: Grid,
                   proj: Projections | None) -> np.ndarray:
    spec = cfg.experiment["initial"].split()
    kind = spec[0]
    if kind == "zero":
        return np.zeros(grid.num_nodes)
    if kind == "kernel":
        if proj is None:
            raise ConfigError("initial = kernel requires a lambda0 selection")
        radius = float(spec[1]) if len(spec) > 1 else 1.0
        return radius * proj.kernel_fields[:, 0]
    if kind == "gaussian":
        amp = float(spec[1]) if len(spec) > 1 else 1.0
        center = np.zeros(grid.ndim)
        if len(spec) > 1 + grid.ndim:
            center = np.array([float(t) for t in spec[2 : 2 + grid.ndim]])
            width = float(spec[2 + grid.ndim]) if len(spec) > 2 + grid.ndim else 1.0
        else:
            width = 1.0
        d2 = np.sum((grid.points - center) ** 2, axis=1)
        return amp * np.exp(-d2 / width**2)
    raise ConfigError(f"unknown initial data spec {cfg.experiment['initial']!r}")


# -- subcommands ---------------------------------------------------------------


def _cmd_spectrum(cfg: ExperimentConfig, out_dir: Path, rng) -> int:
    grid = _build_grid(cfg)
    pot = _build_potential(cfg, grid)
    op = assemble_hamiltonian(grid, pot)
    data = _build_spectral(cfg, op)
    rows = [
        (center, len(idx), float(np.max(data.residuals[idx])))
        for center, idx in data.multiplets
    ]
    write_csv(out_dir / "spectrum.csv", ["lambda", "multiplicity", "residual"], rows)
    morse = {}
    for lam in cfg.spectral["morse_lambdas"]:
        mc = morse_count(data, lam)
        morse[repr(lam)] = {"k": mc.k, "conley_label": mc.conley_label}
    report = {
        "alpha_inf": op.alpha_inf,
        "alpha_inf_diagnostics": {
            "radii": op.alpha_bottom.radii,
            "minima": op.alpha_bottom.minima,
            "converged": op.alpha_bottom.converged,
        },
        "ceiling": data.ceiling,
        "eigenvalues": data.eigenvalues,
        "multiplets": [
            {"lambda": c, "multiplicity": len(idx)} for c, idx in data.multiplets
        ],
        "morse_counts": morse,
        "config": cfg.effective(),
    }
    write_json(out_dir / "spectrum.json", report)
    return EXIT_OK


def _verdict_dict(v) -> dict:
    return {
        "condition": v.condition,
        "holds": v.holds,
        "witnesses": v.witnesses,
        "mass_fraction": v.mass_fraction,
        "applicable": v.applicable,
        "note": v.note,
    }


def _cmd_resonance(cfg: ExperimentConfig, out_dir: Path, rng) -> int:
    grid = _build_grid(cfg)
    pot = _build_potential(cfg, grid)
    op = assemble_hamiltonian(grid, pot)
    data = _build_spectral(cfg, op)
    lam0 = _resolve_lambda0(cfg, data)
    proj = build_projections(data, lam0, cfg.spectral["delta_request"])
    spec = _build_nonlinearity(cfg, grid)

    report = {"lambda0": proj.lambda0, "delta": proj.delta, "verdicts": {}}
    if spec.has_limits():
        ll = check_landesman_lazer(spec, proj.kernel_fields, rng=rng)
        report["verdicts"]["LL+"] = _verdict_dict(ll.plus)
        report["verdicts"]["LL-"] = _verdict_dict(ll.minus)
    sr = check_sign_condition(
        spec, sample_budget=cfg.experiment["sample_budget"], rng=rng
    )
    report["verdicts"]["SR+"] = _verdict_dict(sr.plus)
    report["verdicts"]["SR-"] = _verdict_dict(sr.minus)

    # probes at different radii are independent; run them on the bounded
    # worker pool with per-task seeding so results do not depend on timing
    radii = cfg.experiment["probe_radii"]

    def probe_at(item):
        i, radius = item
        return kernel_sphere_probe(
            spec, proj, None, radius, sign=1,
            rng=np.random.default_rng([cfg.seed, i]),
        )

    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        results = list(pool.map(probe_at, enumerate(radii)))
    report["kernel_sphere_probe"] = [
        {
            "radius": pr.radius,
            "min_pairing": pr.min_pairing,
            "argmin_direction": pr.argmin_direction,
        }
        for pr in results
    ]
    report["config"] = cfg.effective()
    write_json(out_dir / "resonance.json", report)

    if cfg.experiment["expect_positive"]:
        positives = [v["holds"] for v in report["verdicts"].values()]
        if not any(positives):
            return EXIT_VERDICT
    return EXIT_OK


def _cmd_branch(cfg: ExperimentConfig, out_dir: Path, rng) -> int:
    grid = _build_grid(cfg)
    pot = _build_potential(cfg, grid)
    op = assemble_hamiltonian(grid, pot)
    data = _build_spectral(cfg, op)
    lam0 = _resolve_lambda0(cfg, data)
    proj = build_projections(data, lam0, cfg.spectral["delta_request"])
    spec = _build_nonlinearity(cfg, grid)
    e = cfg.experiment
    sign = -1.0 if e["side"] == "minus" else 1.0
    schedule = [
        proj.lambda0 + sign * proj.delta * 2.0 ** (-k)
        for k in range(1, e["num_points"] + 1)
    ]
    solver_cfg = SolverConfig(
        tol_fp=e["tol_fp"], tol_pde=e["tol_pde"], max_iter=e["max_iter"]
    )
    branch = bif.continue_branch(schedule, proj, op, spec, solver_cfg)
    rows = [
        (
            p.lam, p.l2, p.grad_l2, p.h1, p.kernel_l2, p.complement_l2,
            p.residual, p.energy, p.converged,
        )
        for p in branch
    ]
    write_csv(
        out_dir / "branch.csv",
        ["lambda", "l2", "grad_l2", "h1", "Pu_l2", "Qu_l2", "residual", "E",
         "converged"],
        rows,
    )
    summary = bif.summarize_branch(
        branch, proj, spec, e["growth_factor"], e["window"]
    )
    if spec.has_limits():
        ll = check_landesman_lazer(spec, proj.kernel_fields, rng=rng)
        summary.resonance = {
            "LL+": _verdict_dict(ll.plus), "LL-": _verdict_dict(ll.minus)
        }
    report = summary.to_dict()
    report["config"] = cfg.effective()
    write_json(out_dir / "bifurcation.json", report)
    if cfg.experiment["expect_positive"] and (
        summary.verdict is None or not summary.verdict.detected
    ):
        return EXIT_VERDICT
    return EXIT_OK


def _cmd_semiflow(cfg: ExperimentConfig, out_dir: Path, rng) -> int:
    grid = _build_grid(cfg)
    pot = _build_potential(cfg, grid)
    op = assemble_hamiltonian(grid, pot)
    spec = _build_nonlinearity(cfg, grid)
    e = cfg.experiment
    proj = None
    s = cfg.spectral
    if s["lambda0_index"] is not None or s["lambda0_value"] is not None:
        data = _build_spectral(cfg, op)
        proj = build_projections(data, _resolve_lambda0(cfg, data), s["delta_request"])
    if e["lam"] is not None:
        lam = e["lam"]
    elif proj is not None:
        lam = proj.lambda0 - proj.delta / 2.0
    else:
        raise ConfigError("[experiment] lam is required without a lambda0 selection")
    u0 = _initial_field(cfg, grid, proj)
    traj = sf.evolve(
        sf.SemiflowState(0.0, u0), lam, e["horizon"], op, spec,
        dt=e["dt"], stop=e["stop"], save_every=e["save_every"],
        projections=proj,
    )
    rows = []
    for st in traj.states:
        norms = field_norms(grid, st.u)
        rows.append(
            (
                st.t, norms.l2, norms.grad_l2, norms.h1, st.J,
                st.kernel_norm if st.kernel_norm is not None else math.nan,
                st.complement_norm if st.complement_norm is not None else math.nan,
            )
        )
    write_csv(
        out_dir / "trajectory.csv",
        ["t", "l2", "grad_l2", "h1", "J", "Pu_l2", "Qu_l2"],
        rows,
    )
    if e["snapshots"]:
        write_snapshots(out_dir / "snapshots.bin", grid, [s.u for s in traj.states])
    report = {
        "lam": lam,
        "equilibrium": traj.equilibrium,
        "stop_reason": traj.stop_reason,
        "steps": len(traj.dt_history),
        "J_initial": traj.states[0].J,
        "J_final": traj.states[-1].J,
        "config": cfg.effective(),
    }
    if proj is not None and e["tail_radii"]:
        tail = sf.tail_decay_report(traj, proj, op, spec, e["tail_radii"])
        report["tail_decay"] = {
            "alpha": tail.alpha,
            "eta": tail.eta,
            "n0": tail.n0,
            "all_passed": tail.all_passed,
            "all_guaranteed_passed": tail.all_guaranteed_passed,
            "rows": [
                {
                    "radius": r.radius, "t1": r.t1, "measured": r.measured,
                    "bound": r.bound, "passed": r.passed,
                    "guaranteed": r.guaranteed,
                }
                for r in tail.rows
            ],
        }
    write_json(out_dir / "semiflow.json", report)
    return EXIT_OK


def _cmd_report(cfg: ExperimentConfig, out_dir: Path, rng) -> int:
    import json as _json

    merged = {"config": cfg.effective()}
    for name in ("spectrum", "resonance", "bifurcation", "semiflow"):
        path = out_dir / f"{name}.json"
        if path.exists():
            merged[name] = _json.loads(path.read_text(encoding="utf-8"))
    write_json(out_dir / "report.json", merged)
    return EXIT_OK


_DISPATCH = {
    "spectrum": _cmd_spectrum,
    "resonance": _cmd_resonance,
    "branch": _cmd_branch,
    "semiflow": _cmd_semiflow,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="resonance-lab",
        description="Bifurcation-from-infinity experiments for semilinear "
        "Schrodinger problems on truncated boxes.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="INI config path")
    parser.add_argument("--seed", type=int, default=None, help="override [run] seed")
    parser.add_argument("--out", default=None, help="override [output] dir")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.output_dir = args.out
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        rng = np.random.default_rng(cfg.seed)
    except (ConfigError, GridError, PotentialError, NonlinearityError) as exc:
        print(f"config error ({args.config}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        return _DISPATCH[args.subcommand](cfg, out_dir, rng)
    except (ConfigError, GridError, PotentialError, NonlinearityError) as exc:
        print(f"config error ({args.config}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SpectralError, ResonantLambdaError, sf.StepRejected,
            sf.StepCascadeError, bif.BranchError, ValueError) as exc:
        print(f"numerical failure ({args.config}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
