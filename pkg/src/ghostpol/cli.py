"""Command line front end.

Exit codes: 0 on success, 2 on configuration errors, 1 on runtime
failures.  All randomized outputs are reproducible from the pair
(config file, seed).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np
from scipy import stats as scipy_stats

from . import countsim, discern, ghost, polcalc, qstate, svgplot, tomo
from .configio import ConfigError, ExperimentConfig, load_config, settings_fragment
from .optproj import OptimizationConfig, optimize


def _out_path(out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _sweep_curves(cfg: ExperimentConfig) -> list[ghost.ResponseCurve]:
    if not cfg.samples:
        raise ConfigError("a samples section is required")
    if not cfg.projectors:
        raise ConfigError("a projectors section is required")
    idler = [polcalc.compose(chain) for chain in cfg.projectors]
    curves = []
    for spec in cfg.samples:
        curves.append(
            ghost.sweep_family(
                cfg.state,
                spec.family,
                idler,
                probe_elements=cfg.probe_elements,
                thetas=spec.thetas,
                template=spec.template,
                conditional=cfg.conditional,
            )
        )
    return curves


def cmd_sweep(cfg: ExperimentConfig, out_dir: str) -> int:
    curves = _sweep_curves(cfg)
    bands_by_family: dict[str, np.ndarray] = {}
    if cfg.counting is not None:
        # Noisy mode: the curve becomes the mean corrected counts over
        # repeated runs and the CI band accompanies the plot.
        measured = []
        for tag, curve in enumerate(curves):
            runs = countsim.simulate_runs(
                curve, cfg.counting, cfg.runs, cfg.seed, family_tag=tag
            )
            corrected = countsim.correct_counts(runs, cfg.counting)
            mean = corrected.mean(axis=0)
            measured.append(
                ghost.ResponseCurve(curve.family, curve.thetas, mean)
            )
            n = corrected.shape[0]
            if n >= 2:
                tq = float(scipy_stats.t.ppf(0.975, n - 1))
                bands_by_family[curve.family] = (
                    corrected.std(axis=0, ddof=1) / np.sqrt(n) * tq
                )
        curves = measured
    curves = ghost.normalize_dataset(curves)
    scale = max(float(np.max(c.raw)) for c in curves)
    for curve in curves:
        ghost.curve_to_csv(curve, _out_path(out_dir, f"sweep_{curve.family}.csv"))
        band = bands_by_family.get(curve.family)
        svg = svgplot.curve_chart(
            curve.thetas,
            curve.normalized,
            [f"P{j + 1}" for j in range(curve.n_projectors)],
            f"{curve.family} response",
            bands=None if band is None else band / scale,
        )
        with open(_out_path(out_dir, f"sweep_{curve.family}.svg"),
                  "w", encoding="utf-8") as fh:
            fh.write(svg)
    return 0


def cmd_discriminate(cfg: ExperimentConfig, out_dir: str) -> int:
    if cfg.counting is None:
        raise ConfigError("discriminate needs a counting section")
    if cfg.runs < 2:
        raise ConfigError("discriminate needs runs >= 2")
    curves = _sweep_curves(cfg)
    corrected = []
    for tag, curve in enumerate(curves):
        runs = countsim.simulate_runs(
            curve, cfg.counting, cfg.runs, cfg.seed, family_tag=tag
        )
        corr = countsim.correct_counts(runs, cfg.counting)
        countsim.runset_to_csv(
            runs, corr, _out_path(out_dir, f"runs_{curve.family}.csv")
        )
        corrected.append(corr)
    scale = max(float(np.max(c.mean(axis=0))) for c in corrected)
    if scale <= 0.0:
        raise ValueError("dataset has no counts to normalize")
    outcomes = []
    for curve, corr in zip(curves, corrected):
        outcomes.append(
            discern.analyze_family(curve.family, curve.thetas, corr / scale)
        )
    report = discern.analyze_families(outcomes)
    discern.report_to_csv(report, _out_path(out_dir, "report.csv"))
    with open(_out_path(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(discern.summary_text(report))
    n_axes = corrected[0].shape[2]
    pairs = [(i, j) for i in range(n_axes) for j in range(i + 1, n_axes)]
    fams = [
        {
            "label": o.family,
            "centers": np.array([s.mean for s in o.stats]),
            "semi_axes": np.array([r.semi_axes for r in o.regions]),
            "kept": o.kept,
        }
        for o in report.families
    ]
    svg = svgplot.region_panels(
        fams, pairs, [f"P{k + 1}" for k in range(n_axes)],
        "response regions",
    )
    with open(_out_path(out_dir, "regions.svg"), "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(discern.summary_text(report), end="")
    return 0


def cmd_tomo(cfg: ExperimentConfig, out_dir: str) -> int:
    spec = cfg.tomography
    if spec is not None and spec.records_csv is not None:
        records = tomo.records_from_csv(spec.records_csv)
    else:
        if cfg.counting is None:
            raise ConfigError(
                "tomo needs a counting section or tomography.records_csv"
            )
        model = cfg.counting
        if spec is not None and spec.integration_time is not None:
            model = replace(model, integration_time=spec.integration_time)
        records = tomo.simulate_tomography(cfg.state, model, cfg.seed)
        tomo.records_to_csv(records, _out_path(out_dir, "records.csv"))
    result = tomo.reconstruct_mle(records)
    qstate.save_density_csv(result.rho, _out_path(out_dir, "rho.csv"))
    m = qstate.metrics(result.rho)
    lines = [
        f"concurrence: {m.concurrence:.6f}",
        f"linear_entropy: {m.linear_entropy:.6f}",
        f"fidelity_psi_plus: {m.fidelity:.6f}",
        f"purity: {m.purity:.6f}",
        f"log_likelihood: {result.log_likelihood:.6g}",
        f"iterations: {result.iterations}",
        f"converged: {result.converged}",
    ]
    with open(_out_path(out_dir, "metrics.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def cmd_optimize(cfg: ExperimentConfig, out_dir: str) -> int:
    spec = cfg.optimize
    if spec is None:
        raise ConfigError("an optimize section is required")
    opt_config = OptimizationConfig(
        samples=tuple(spec.samples),
        projectors=tuple(spec.projectors),
        probe=spec.probe,
        state=cfg.state,
        mode=spec.mode,
        vary_probe=spec.vary_probe,
        vary_projectors=spec.vary_projectors,
        vary_extinction=spec.vary_extinction,
        restarts=spec.restarts,
        max_evals=spec.max_evals,
        seed=cfg.seed,
    )
    result = optimize(opt_config)
    with open(_out_path(out_dir, "best_params.yaml"), "w",
              encoding="utf-8") as fh:
        fh.write(settings_fragment(result.probe, result.projectors))
    lines = ["stage,restart,start_objective,final_objective,n_evals"]
    for row in result.trace:
        lines.append(
            f"{row['stage']},{row['restart']},{row['start_objective']:.9g},"
            f"{row['final_objective']:.9g},{row['n_evals']}"
        )
    with open(_out_path(out_dir, "trace.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print(
        f"best objective {result.objective:.6g} after {result.n_evals} "
        f"evaluations (converged: {result.converged})"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghostpol",
        description="Simulate and analyze nonlocal polarimetric discrimination",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sweep", "response curves over an orientation grid"),
        ("discriminate", "confidence-region distinguishability analysis"),
        ("tomo", "simulate and reconstruct two-photon tomography"),
        ("optimize", "search for well-separating measurement settings"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=".", help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "sweep": cmd_sweep,
        "discriminate": cmd_discriminate,
        "tomo": cmd_tomo,
        "optimize": cmd_optimize,
    }
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        return handlers[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
