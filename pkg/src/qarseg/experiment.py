"""Replicated simulation experiments and their summary tables.

Each replication simulates a preset process with its own seed stream,
runs the genetic search, and records the estimated break count, break
locations and orders.  Summaries mirror the usual reporting layout:
distribution of the estimated break count per quantile mode, mean and
standard deviation of the relative break locations conditional on the
correct count, and order-selection frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import relative_locations
from .ga import GaConfig, run
from .mdl import QuantileSpec
from .simgen import simulate_preset

MULT_TAUS = (0.25, 0.5, 0.75)


def parse_tau_mode(mode: str) -> QuantileSpec:
    """A mode is a single quantile ('0.5') or 'mult' (equal-weight trio)."""
    if mode == "mult":
        return QuantileSpec.equal(MULT_TAUS)
    return QuantileSpec.equal([float(mode)])


@dataclass(frozen=True)
class ReplicationResult:
    rep: int
    m_hat: int
    lambdas: tuple[float, ...]
    orders: tuple[int, ...]


@dataclass(frozen=True)
class ModeSummary:
    tau_mode: str
    results: tuple[ReplicationResult, ...]
    true_m: int

    @property
    def reps(self) -> int:
        return len(self.results)

    def m_hat_percentages(self) -> dict[int, float]:
        counts: dict[int, int] = {}
        for r in self.results:
            counts[r.m_hat] = counts.get(r.m_hat, 0) + 1
        return {m: 100.0 * c / self.reps for m, c in sorted(counts.items())}

    def correct_rate(self) -> float:
        return self.m_hat_percentages().get(self.true_m, 0.0)

    def conditional_lambda_stats(self) -> list[tuple[float, float | None]]:
        """(mean, std) of each relative break location among correct-count runs.

        std is None when fewer than two qualifying replications exist.
        """
        if self.true_m == 0:
            return []
        hits = [r.lambdas for r in self.results if r.m_hat == self.true_m]
        if not hits:
            return []
        arr = np.array(hits)
        means = arr.mean(axis=0)
        stds = arr.std(axis=0, ddof=1) if len(hits) > 1 else [None] * self.true_m
        return [(float(mu), None if sd is None else float(sd)) for mu, sd in zip(means, stds)]

    def order_frequencies(self) -> list[dict[int, float]]:
        """Per-segment selected-order percentages among correct-count runs."""
        hits = [r.orders for r in self.results if r.m_hat == self.true_m]
        if not hits:
            return []
        out = []
        for j in range(self.true_m + 1):
            counts: dict[int, int] = {}
            for orders in hits:
                counts[orders[j]] = counts.get(orders[j], 0) + 1
            out.append({p: 100.0 * c / len(hits) for p, c in sorted(counts.items())})
        return out


@dataclass(frozen=True)
class ExperimentSummary:
    preset: str
    n: int
    reps: int
    seed: int
    true_m: int
    true_lambdas: tuple[float, ...]
    modes: tuple[ModeSummary, ...]

    def to_dict(self) -> dict:
        return {
            "schema_version": "1.0",
            "kind": "experiment_summary",
            "preset": self.preset,
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "true_m": self.true_m,
            "true_lambdas": list(self.true_lambdas),
            "modes": [
                {
                    "tau": mode.tau_mode,
                    "m_hat_percent": {str(k): v for k, v in mode.m_hat_percentages().items()},
                    "lambda_conditional": [
                        {"mean": mu, "std": sd} for mu, sd in mode.conditional_lambda_stats()
                    ],
                    "order_percent": [
                        {str(k): v for k, v in freq.items()} for freq in mode.order_frequencies()
                    ],
                    "replications": [
                        {
                            "rep": r.rep,
                            "m_hat": r.m_hat,
                            "lambdas": list(r.lambdas),
                            "orders": list(r.orders),
                        }
                        for r in mode.results
                    ],
                }
                for mode in self.modes
            ],
        }

    def csv_rows(self) -> list[tuple]:
        """Long-format rows (tau, metric, key, value) for external plotting."""
        rows = [("tau", "metric", "key", "value")]
        for mode in self.modes:
            for m, pct in mode.m_hat_percentages().items():
                rows.append((mode.tau_mode, "m_hat_percent", str(m), f"{pct:.10g}"))
            for j, (mu, sd) in enumerate(mode.conditional_lambda_stats()):
                rows.append((mode.tau_mode, "lambda_mean", str(j + 1), f"{mu:.10g}"))
                rows.append((mode.tau_mode, "lambda_std", str(j + 1), "" if sd is None else f"{sd:.10g}"))
            for j, freq in enumerate(mode.order_frequencies()):
                for p, pct in freq.items():
                    rows.append((mode.tau_mode, f"order_percent_seg{j + 1}", str(p), f"{pct:.10g}"))
        return rows


def replication_seeds(master_seed: int, rep: int) -> tuple[np.random.Generator, int]:
    """Independent (simulation rng, search seed) pair for one replication."""
    sim_ss, ga_ss = np.random.SeedSequence((master_seed, rep)).spawn(2)
    return np.random.default_rng(sim_ss), int(ga_ss.generate_state(1)[0])


def run_replication(
    preset: str, n: int, spec: QuantileSpec, config: GaConfig, master_seed: int, rep: int
) -> ReplicationResult:
    sim_rng, ga_seed = replication_seeds(master_seed, rep)
    real = simulate_preset(preset, n, sim_rng)
    result = run(real.series, spec, replace(config, seed=ga_seed))
    seg = result.segmentation
    return ReplicationResult(
        rep=rep,
        m_hat=seg.m,
        lambdas=relative_locations(seg),
        orders=seg.orders,
    )


def run_experiment(
    preset: str,
    n: int,
    reps: int,
    tau_modes: list[str],
    config: GaConfig,
    seed: int,
    progress=None,
) -> ExperimentSummary:
    """Run `reps` independent replications for each quantile mode."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    probe = simulate_preset(preset, n, np.random.default_rng(0))
    modes = []
    for mode in tau_modes:
        spec = parse_tau_mode(mode)
        results = []
        for rep in range(reps):
            results.append(run_replication(preset, n, spec, config, seed, rep))
            if progress is not None:
                progress(mode, rep)
        modes.append(ModeSummary(tau_mode=mode, results=tuple(results), true_m=probe.true_m))
    return ExperimentSummary(
        preset=preset,
        n=n,
        reps=reps,
        seed=seed,
        true_m=probe.true_m,
        true_lambdas=probe.true_lambdas,
        modes=tuple(modes),
    )
