"""Distinguishability analysis of response-space point clouds.

Each sample orientation yields a cloud of repeated response points;
its uncertainty is summarized by an axis-aligned 95% confidence
ellipsoid, and two samples count as distinguishable only when their
ellipsoids are strictly separated along the line joining the centers
(a conservative, sufficient criterion).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

SEMI_AXIS_FLOOR = 1e-12
ANGLE_PERIOD_DEG = 180.0


@dataclass(frozen=True)
class SampleStats:
    mean: np.ndarray
    std: np.ndarray
    ci95: np.ndarray
    n_runs: int


@dataclass(frozen=True)
class EllipsoidRegion:
    center: np.ndarray
    semi_axes: np.ndarray

    def __post_init__(self) -> None:
        center = np.asarray(self.center, dtype=float)
        scale = max(1.0, float(np.max(np.abs(center))) if center.size else 1.0)
        semi = np.maximum(np.asarray(self.semi_axes, dtype=float),
                          SEMI_AXIS_FLOOR * scale)
        if semi.shape != center.shape:
            raise ValueError("center and semi-axes dimensions disagree")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "semi_axes", semi)


@dataclass
class StepStats:
    median_deg: float
    max_deg: float
    min_deg: float


@dataclass
class FamilyOutcome:
    family: str
    thetas: np.ndarray
    stats: list[SampleStats]
    regions: list[EllipsoidRegion]
    kept: list[int]
    cross_excluded: list[int] = field(default_factory=list)
    step: StepStats | None = None


@dataclass
class DistinguishabilityReport:
    families: list[FamilyOutcome]
    exclusions: list[tuple[str, float, str, float]]


def summarize(points: np.ndarray) -> SampleStats:
    """Per-axis mean, sample std and 95% CI half-width of one cloud.

    ``points`` has shape (n_runs, n_axes); the half-width uses the
    Student t quantile with n_runs - 1 degrees of freedom.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two runs to summarize")
    n = pts.shape[0]
    mean = pts.mean(axis=0)
    std = pts.std(axis=0, ddof=1)
    tq = float(stats.t.ppf(0.975, n - 1))
    ci95 = tq * std / np.sqrt(n)
    return SampleStats(mean=mean, std=std, ci95=ci95, n_runs=n)


def region_from_stats(s: SampleStats) -> EllipsoidRegion:
    return EllipsoidRegion(center=s.mean, semi_axes=s.ci95)


def support_halfwidth(region: EllipsoidRegion, direction: np.ndarray) -> float:
    """Support function of an axis-aligned ellipsoid along a unit vector."""
    return float(np.sqrt(np.sum((region.semi_axes * direction) ** 2)))


def separable(a: EllipsoidRegion, b: EllipsoidRegion) -> bool:
    """Strict separation of two ellipsoids along their center line."""
    delta = b.center - a.center
    dist = float(np.linalg.norm(delta))
    if dist <= 0.0:
        return False
    u = delta / dist
    return support_halfwidth(a, u) + support_halfwidth(b, u) < dist


def separation_margin(a: EllipsoidRegion, b: EllipsoidRegion) -> float:
    """Signed slack of the center-line criterion (positive = separated)."""
    delta = b.center - a.center
    dist = float(np.linalg.norm(delta))
    if dist <= 0.0:
        u = np.zeros(a.center.shape)
        u[0] = 1.0
    else:
        u = delta / dist
    return dist - support_halfwidth(a, u) - support_halfwidth(b, u)


def max_distinguishable_subset(regions: list[EllipsoidRegion]) -> list[int]:
    """Greedy subset of mutually separable samples.

    Sweeps the orientation-ordered regions starting at index 0 and
    keeps a sample iff it is separable from every sample kept so far;
    the wrap-around pair (last kept vs first kept) is re-checked and
    the last sample dropped on conflict.
    """
    kept: list[int] = []
    for i, region in enumerate(regions):
        if all(separable(region, regions[k]) for k in kept):
            kept.append(i)
    if len(kept) >= 2 and not separable(regions[kept[-1]], regions[kept[0]]):
        kept.pop()
    return kept


def cross_family_exclusions(
    outcome_a: FamilyOutcome, outcome_b: FamilyOutcome
) -> list[tuple[str, float, str, float]]:
    """Drop kept samples that collide with the other family.

    For every non-separable cross-family pair the sample on the
    smaller-margin side (here: the larger uncertainty region, measured
    by its largest semi-axis) is excluded; ties drop from the second
    family.  Returns (family, theta, other_family, other_theta) rows.
    """
    exclusions: list[tuple[str, float, str, float]] = []
    changed = True
    while changed:
        changed = False
        for i in list(outcome_a.kept):
            for j in list(outcome_b.kept):
                ra = outcome_a.regions[i]
                rb = outcome_b.regions[j]
                if separable(ra, rb):
                    continue
                if float(np.max(ra.semi_axes)) > float(np.max(rb.semi_axes)):
                    outcome_a.kept.remove(i)
                    outcome_a.cross_excluded.append(i)
                    exclusions.append(
                        (outcome_a.family, float(outcome_a.thetas[i]),
                         outcome_b.family, float(outcome_b.thetas[j]))
                    )
                else:
                    outcome_b.kept.remove(j)
                    outcome_b.cross_excluded.append(j)
                    exclusions.append(
                        (outcome_b.family, float(outcome_b.thetas[j]),
                         outcome_a.family, float(outcome_a.thetas[i]))
                    )
                changed = True
                break
            if changed:
                break
    return exclusions


def step_stats(kept_thetas: np.ndarray,
               period: float = ANGLE_PERIOD_DEG) -> StepStats:
    """Median, max and min angular gap between kept orientations.

    The gap set includes the wrap-around gap across the period.
    """
    thetas = np.sort(np.asarray(kept_thetas, dtype=float))
    if thetas.size == 0:
        raise ValueError("no kept orientations")
    if thetas.size == 1:
        return StepStats(period, period, period)
    gaps = np.diff(thetas)
    wrap = period - thetas[-1] + thetas[0]
    gaps = np.append(gaps, wrap)
    return StepStats(
        median_deg=float(np.median(gaps)),
        max_deg=float(np.max(gaps)),
        min_deg=float(np.min(gaps)),
    )


def analyze_family(
    family: str, thetas: np.ndarray, run_points: np.ndarray
) -> FamilyOutcome:
    """Stats, regions and greedy subset for one family.

    ``run_points`` has shape (n_runs, n_thetas, n_axes) in normalized
    response coordinates.
    """
    pts = np.asarray(run_points, dtype=float)
    stats_list = [summarize(pts[:, t, :]) for t in range(pts.shape[1])]
    regions = [region_from_stats(s) for s in stats_list]
    kept = max_distinguishable_subset(regions)
    outcome = FamilyOutcome(
        family=family,
        thetas=np.asarray(thetas, dtype=float),
        stats=stats_list,
        regions=regions,
        kept=kept,
    )
    return outcome


def analyze_families(
    outcomes: list[FamilyOutcome],
) -> DistinguishabilityReport:
    """Apply cross-family exclusions pairwise and finalize step stats."""
    exclusions: list[tuple[str, float, str, float]] = []
    for i in range(len(outcomes)):
        for j in range(i + 1, len(outcomes)):
            exclusions.extend(cross_family_exclusions(outcomes[i], outcomes[j]))
    for outcome in outcomes:
        if outcome.kept:
            outcome.step = step_stats(outcome.thetas[outcome.kept])
    return DistinguishabilityReport(families=outcomes, exclusions=exclusions)


def report_to_csv(report: DistinguishabilityReport, path: str) -> None:
    """One row per analyzed orientation with stats and kept flags."""
    n_axes = report.families[0].regions[0].center.size if report.families else 0
    header = ["family", "theta_deg", "kept", "cross_excluded"]
    header += [f"mean{k + 1}" for k in range(n_axes)]
    header += [f"std{k + 1}" for k in range(n_axes)]
    header += [f"ci95_{k + 1}" for k in range(n_axes)]
    lines = [",".join(header)]
    for outcome in report.families:
        kept = set(outcome.kept)
        crossed = set(outcome.cross_excluded)
        for t in range(outcome.thetas.size):
            s = outcome.stats[t]
            cells = [
                outcome.family,
                f"{outcome.thetas[t]:.6g}",
                "1" if t in kept else "0",
                "1" if t in crossed else "0",
            ]
            cells += [f"{v:.9g}" for v in s.mean]
            cells += [f"{v:.9g}" for v in s.std]
            cells += [f"{v:.9g}" for v in s.ci95]
            lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def summary_text(report: DistinguishabilityReport) -> str:
    lines = []
    for outcome in report.families:
        total = outcome.thetas.size
        lines.append(
            f"family {outcome.family}: kept {len(outcome.kept)} of {total} orientations"
        )
        if outcome.step is not None:
            lines.append(
                f"  angular step deg: median {outcome.step.median_deg:.4g}, "
                f"max {outcome.step.max_deg:.4g}, min {outcome.step.min_deg:.4g}"
            )
    if report.exclusions:
        lines.append("cross-family exclusions:")
        for fam, theta, other, other_theta in report.exclusions:
            lines.append(
                f"  {fam} at {theta:.6g} deg vs {other} at {other_theta:.6g} deg"
            )
    else:
        lines.append("cross-family exclusions: none")
    return "\n".join(lines) + "\n"
