"""Search for measurement settings that spread response points apart.

The figure of merit is the smallest pairwise Euclidean distance
between the normalized response points of a configured sample set;
optimization is a seeded multi-start simplex search over the
orientation angles of the probe-side and idler-side projectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import polcalc
from .ghost import ProbeTransform, coincidence_probability
from .polcalc import PolElement
from .qstate import TwoQubitDensity, bell_psi_plus

QWP_RETARDANCE = math.pi / 2.0


@dataclass(frozen=True)
class ProjectorParam:
    """Waveplate plus polarizer settings of one projector.

    ``qwp_deg`` may be None for a bare polarizer.  ``extinction`` is
    the polarizer intensity extinction ratio; infinity selects an
    ideal polarizer.  ``qwp_first`` gives the traversal order: True
    means the light crosses the waveplate before the polarizer.
    """

    qwp_deg: float | None
    lp_deg: float
    extinction: float = math.inf
    qwp_first: bool = True

    def elements(self) -> list[PolElement]:
        if math.isinf(self.extinction):
            lp = PolElement("ideal_polarizer", self.lp_deg)
        else:
            lp = PolElement("partial_polarizer", self.lp_deg,
                            extinction=self.extinction)
        if self.qwp_deg is None:
            return [lp]
        qwp = PolElement("retarder", self.qwp_deg,
                         retardance_rad=QWP_RETARDANCE)
        return [qwp, lp] if self.qwp_first else [lp, qwp]

    def jones(self) -> np.ndarray:
        return polcalc.compose(self.elements())

    def mueller(self) -> np.ndarray:
        return polcalc.jones_to_mueller(self.jones())


@dataclass
class OptimizationConfig:
    samples: tuple[PolElement, ...]
    projectors: tuple[ProjectorParam, ...]
    probe: ProjectorParam | None = None
    state: TwoQubitDensity | None = None
    mode: str = "joint"
    vary_probe: bool = True
    vary_projectors: bool = True
    vary_extinction: bool = False
    restarts: int = 16
    max_evals: int = 4000
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.samples) < 2:
            raise ValueError("objective needs at least two samples")
        if len(self.projectors) < 1:
            raise ValueError("need at least one idler projector")
        if self.mode not in ("joint", "sequential"):
            raise ValueError("mode must be 'joint' or 'sequential'")
        if self.restarts < 1 or self.max_evals < 1:
            raise ValueError("restarts and max_evals must be positive")


@dataclass
class OptimizationResult:
    probe: ProjectorParam | None
    projectors: tuple[ProjectorParam, ...]
    objective: float
    n_evals: int
    converged: bool
    trace: list[dict] = field(default_factory=list)


def response_points(
    rho: TwoQubitDensity,
    samples: tuple[PolElement, ...],
    probe: ProjectorParam | None,
    projectors: tuple[ProjectorParam, ...],
) -> np.ndarray:
    """Raw response coordinates, one row per sample."""
    probe_jones = (
        np.eye(2, dtype=complex) if probe is None else probe.jones()
    )
    idler = [p.jones() for p in projectors]
    pts = np.empty((len(samples), len(idler)))
    for i, sample in enumerate(samples):
        transform = ProbeTransform.from_jones(
            probe_jones @ polcalc.element_jones(sample)
        )
        for j, proj in enumerate(idler):
            pts[i, j] = coincidence_probability(rho, transform, proj)
    return pts


def objective_min_separation(
    rho: TwoQubitDensity,
    samples: tuple[PolElement, ...],
    probe: ProjectorParam | None,
    projectors: tuple[ProjectorParam, ...],
) -> float:
    """Smallest pairwise distance between normalized response points.

    An all-zero response set (a fully blocking probe) scores 0.
    """
    pts = response_points(rho, samples, probe, projectors)
    peak = float(np.max(pts))
    if peak <= 0.0:
        return 0.0
    pts = pts / peak
    best = math.inf
    for i in range(pts.shape[0]):
        for j in range(i + 1, pts.shape[0]):
            best = min(best, float(np.linalg.norm(pts[i] - pts[j])))
    return best


def _pack(config: OptimizationConfig,
          vary_probe: bool, vary_projectors: bool) -> list[tuple[str, int, str]]:
    """Coordinate labels (target, index, field) of the varied params."""
    coords: list[tuple[str, int, str]] = []
    if vary_probe and config.probe is not None:
        if config.probe.qwp_deg is not None:
            coords.append(("probe", 0, "qwp_deg"))
        coords.append(("probe", 0, "lp_deg"))
        if config.vary_extinction and math.isfinite(config.probe.extinction):
            coords.append(("probe", 0, "extinction"))
    if vary_projectors:
        for k, proj in enumerate(config.projectors):
            if proj.qwp_deg is not None:
                coords.append(("proj", k, "qwp_deg"))
            coords.append(("proj", k, "lp_deg"))
            if config.vary_extinction and math.isfinite(proj.extinction):
                coords.append(("proj", k, "extinction"))
    return coords


def _apply(config: OptimizationConfig, coords: list[tuple[str, int, str]],
           x: np.ndarray,
           base: tuple[ProjectorParam | None, tuple[ProjectorParam, ...]],
           ) -> tuple[ProjectorParam | None, tuple[ProjectorParam, ...]]:
    probe, projectors = base
    projs = list(projectors)
    for value, (target, idx, fieldname) in zip(x, coords):
        if fieldname in ("qwp_deg", "lp_deg"):
            value = float(value) % 180.0
        else:
            value = max(1.0, float(value))
        if target == "probe":
            probe = replace(probe, **{fieldname: value})
        else:
            projs[idx] = replace(projs[idx], **{fieldname: value})
    return probe, tuple(projs)


def _start_points(coords: list[tuple[str, int, str]], n_starts: int,
                  x0: np.ndarray, seed: int) -> np.ndarray:
    """Deterministic spread of starts: x0 first, then a stratified
    scramble of the search box (angle torus, extinction in [1, 10])."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(
        entropy=seed, spawn_key=(7,))))
    n_dim = len(coords)
    starts = np.empty((n_starts, n_dim))
    starts[0] = x0
    extra = n_starts - 1
    if extra > 0:
        grid = np.empty((extra, n_dim))
        for d, (_, _, fieldname) in enumerate(coords):
            lo, hi = (1.0, 10.0) if fieldname == "extinction" else (0.0, 180.0)
            bins = (np.arange(extra) + rng.uniform(0.0, 1.0, size=extra))
            grid[:, d] = lo + rng.permutation(bins) / extra * (hi - lo)
        starts[1:] = grid
    return starts


def optimize(config: OptimizationConfig) -> OptimizationResult:
    """Multi-start maximization of the minimum pairwise separation.

    The returned settings never score below the best evaluated start
    point; ``converged`` reports whether any simplex run terminated
    within its evaluation budget.
    """
    rho = config.state if config.state is not None else bell_psi_plus()
    if config.mode == "sequential":
        stages = []
        if config.vary_probe and config.probe is not None:
            stages.append(("probe", True, False))
        if config.vary_projectors:
            stages.append(("projectors", False, True))
        if not stages:
            raise ValueError("nothing to vary")
    else:
        stages = [("joint", config.vary_probe, config.vary_projectors)]

    probe = config.probe
    projectors = config.projectors
    budget = max(1, config.max_evals // len(stages))
    total_evals = 0
    any_converged = False
    trace: list[dict] = []
    best_overall = -math.inf

    for stage_name, vary_probe, vary_projectors in stages:
        coords = _pack(config, vary_probe, vary_projectors)
        if not coords:
            continue
        base = (probe, projectors)

        def score(x: np.ndarray) -> float:
            p, pr = _apply(config, coords, x, base)
            return -objective_min_separation(rho, config.samples, p, pr)

        x0 = np.array([
            getattr(base[0], fieldname) if target == "probe"
            else getattr(base[1][idx], fieldname)
            for target, idx, fieldname in coords
        ])
        starts = _start_points(coords, config.restarts, x0, config.seed)
        per_start = max(1, budget // config.restarts)
        best_x = None
        best_val = -math.inf
        for s, start in enumerate(starts):
            start_val = -score(start)
            total_evals += 1
            if start_val > best_val:
                best_val, best_x = start_val, start.copy()
            res = minimize(
                score,
                start,
                method="Nelder-Mead",
                options={"maxfev": per_start, "xatol": 1e-4, "fatol": 1e-10},
            )
            total_evals += int(res.nfev)
            any_converged = any_converged or bool(res.success)
            final_val = -float(res.fun)
            if final_val > best_val:
                best_val, best_x = final_val, np.asarray(res.x, dtype=float)
            trace.append({
                "stage": stage_name,
                "restart": s,
                "start_objective": start_val,
                "final_objective": final_val,
                "n_evals": int(res.nfev),
            })
        probe, projectors = _apply(config, coords, best_x, base)
        best_overall = best_val

    if best_overall == -math.inf:
        raise ValueError("nothing to vary")
    return OptimizationResult(
        probe=probe,
        projectors=projectors,
        objective=best_overall,
        n_evals=total_evals,
        converged=any_converged,
        trace=trace,
    )


def nearest_feasible(
    target_mueller: np.ndarray,
    extinction: float = math.inf,
    qwp_first: bool = True,
    grid_step_deg: float = 7.5,
) -> tuple[ProjectorParam, float]:
    """Feasible waveplate-polarizer pair closest to a target matrix.

    Minimizes the Frobenius distance between the Mueller matrix of a
    quarter-wave retarder at angle a composed with a polarizer at
    angle b and the target.  A coarse angle grid seeds a simplex
    refinement, so distinct local basins are covered.
    """
    target = np.asarray(target_mueller, dtype=float)
    if target.shape != (4, 4):
        raise ValueError("target must be a 4x4 Mueller matrix")

    def distance(x: np.ndarray) -> float:
        param = ProjectorParam(
            qwp_deg=float(x[0]) % 180.0,
            lp_deg=float(x[1]) % 180.0,
            extinction=extinction,
            qwp_first=qwp_first,
        )
        return float(np.linalg.norm(param.mueller() - target))

    angles = np.arange(0.0, 180.0, grid_step_deg)
    best_x = None
    best_d = math.inf
    for a in angles:
        for b in angles:
            d = distance(np.array([a, b]))
            if d < best_d:
                best_d, best_x = d, np.array([a, b])
    res = minimize(
        distance,
        best_x,
        method="Nelder-Mead",
        options={"xatol": 1e-9, "fatol": 1e-14, "maxfev": 4000},
    )
    x = res.x if res.fun <= best_d else best_x
    final = ProjectorParam(
        qwp_deg=float(x[0]) % 180.0,
        lp_deg=float(x[1]) % 180.0,
        extinction=extinction,
        qwp_first=qwp_first,
    )
    return final, float(min(res.fun, best_d))
