"""Monte Carlo coincidence counting with drift and accidentals.

Randomness is drawn from per-cell PCG64 streams spawned from one
master seed, so a simulated dataset does not depend on evaluation
order or on which subsets are simulated together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ghost import ResponseCurve

# Tags keeping per-purpose seed streams disjoint.
_TAG_DRIFT = 0
_TAG_CELL = 1
_TAG_SINGLES = 2


@dataclass(frozen=True)
class CountModel:
    """Detection model parameters.

    Rates are per second, the coincidence window is in seconds,
    ``singles_background`` is the uncorrelated singles rate per arm and
    ``drift_amplitude`` is the half-width of the uniform per-run
    multiplicative drift.
    """

    pair_rate: float
    integration_time: float
    eff_signal: float = 1.0
    eff_idler: float = 1.0
    coincidence_window: float = 0.0
    singles_background: float = 0.0
    drift_amplitude: float = 0.0

    def __post_init__(self) -> None:
        if self.pair_rate < 0.0 or self.integration_time <= 0.0:
            raise ValueError("pair rate must be >= 0 and integration time > 0")
        for name in ("eff_signal", "eff_idler"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.coincidence_window < 0.0 or self.singles_background < 0.0:
            raise ValueError("window and singles rate must be >= 0")
        if not 0.0 <= self.drift_amplitude < 1.0:
            raise ValueError("drift amplitude must lie in [0, 1)")

    def accidental_mean(self) -> float:
        """Mean accidental coincidences per integration window."""
        return (
            self.singles_background
            * self.singles_background
            * self.coincidence_window
            * self.integration_time
        )

    def signal_mean(self, p_joint: float, drift_factor: float = 1.0) -> float:
        return (
            self.pair_rate
            * self.integration_time
            * self.eff_signal
            * self.eff_idler
            * p_joint
            * drift_factor
        )


@dataclass
class RunSet:
    """Repeated coincidence measurements over a (theta, projector) grid."""

    family: str
    thetas: np.ndarray
    counts: np.ndarray
    singles: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=float)
        self.singles = np.asarray(self.singles, dtype=float)
        if self.counts.ndim != 3:
            raise ValueError("counts must be (runs, thetas, projectors)")
        if self.counts.shape[0] < 1 or self.counts.shape[1] < 1:
            raise ValueError("RunSet needs at least one run and one theta")
        totals = self.counts.sum(axis=(1, 2))
        if np.any(totals <= 0.0):
            raise ValueError("RunSet contains an all-zero run")

    @property
    def n_runs(self) -> int:
        return self.counts.shape[0]


def _generator(master_seed: int, spawn_key: tuple[int, ...]) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=spawn_key)
    return np.random.Generator(np.random.PCG64(seq))


def simulate_counts(
    p_joint: float,
    model: CountModel,
    seed: int,
    spawn_key: tuple[int, ...] = (),
    drift_factor: float = 1.0,
) -> int:
    """One Poisson coincidence count for one joint probability."""
    if not -1e-12 <= p_joint <= 1.0 + 1e-12:
        raise ValueError("joint probability must lie in [0, 1]")
    mean = model.signal_mean(min(max(p_joint, 0.0), 1.0), drift_factor)
    mean += model.accidental_mean()
    rng = _generator(seed, (_TAG_CELL, *spawn_key))
    return int(rng.poisson(mean))


def simulate_runs(
    curve: ResponseCurve,
    model: CountModel,
    n_runs: int,
    seed: int,
    family_tag: int = 0,
) -> RunSet:
    """Simulate repeated runs over a whole response curve.

    Each run carries one multiplicative drift factor, uniform in
    [1 - a, 1 + a]; every (run, theta, projector) cell uses its own
    seed stream keyed by index, not by evaluation order.
    """
    if n_runs < 1:
        raise ValueError("need at least one run")
    n_theta, n_proj = curve.raw.shape
    counts = np.empty((n_runs, n_theta, n_proj), dtype=float)
    singles = np.empty((n_runs, 2), dtype=float)
    singles_mean = model.singles_background * model.integration_time
    for r in range(n_runs):
        drift_rng = _generator(seed, (_TAG_DRIFT, family_tag, r))
        drift = 1.0 + model.drift_amplitude * drift_rng.uniform(-1.0, 1.0)
        for t in range(n_theta):
            for j in range(n_proj):
                counts[r, t, j] = simulate_counts(
                    curve.raw[t, j],
                    model,
                    seed,
                    spawn_key=(family_tag, r, t, j),
                    drift_factor=drift,
                )
        srng = _generator(seed, (_TAG_SINGLES, family_tag, r))
        singles[r] = srng.poisson(singles_mean, size=2)
    return RunSet(
        family=curve.family,
        thetas=curve.thetas.copy(),
        counts=counts,
        singles=singles,
        seed=seed,
    )


def correct_counts(runs: RunSet, model: CountModel) -> np.ndarray:
    """Accidental-, efficiency- and drift-corrected counts.

    Per cell: subtract the accidental mean, divide by the detection
    efficiencies, clip negatives to zero; then rescale every run to
    the mean run total, removing common-mode drift.
    """
    if model.eff_signal <= 0.0 or model.eff_idler <= 0.0:
        raise ValueError("cannot correct with zero detection efficiency")
    corrected = runs.counts - model.accidental_mean()
    corrected /= model.eff_signal * model.eff_idler
    corrected = np.clip(corrected, 0.0, None)
    totals = corrected.sum(axis=(1, 2))
    if np.any(totals <= 0.0):
        raise ValueError("a run has no counts left after corrections")
    target = totals.mean()
    corrected *= (target / totals)[:, None, None]
    return corrected


def runset_to_csv(runs: RunSet, corrected: np.ndarray, path: str) -> None:
    """Write raw and corrected counts, one row per cell and run."""
    lines = ["run,theta_deg,projector_index,raw,corrected"]
    n_runs, n_theta, n_proj = runs.counts.shape
    for r in range(n_runs):
        for t in range(n_theta):
            for j in range(n_proj):
                lines.append(
                    f"{r},{runs.thetas[t]:.6g},{j},"
                    f"{runs.counts[r, t, j]:.9g},{corrected[r, t, j]:.9g}"
                )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
