"""Island-model genetic search over segmentations.

A candidate is encoded as a length-n gene vector: position t carries -1
(no new segment starts at t) or an order p in 1..max_order (a segment of
order p starts at t).  The first gene always carries the first segment's
order.  Candidates are stored sparsely as (position, order) pairs; the
dense gene vector is materialized on demand.

Each island evolves independently: rank-based parent selection, child by
crossover with probability crossover_prob else mutation, elitism.  Every
migration_interval generations the best chromosomes of island i replace
the worst of island i+1 (ring topology).  The search stops when the
global best criterion value is unchanged for stall_limit consecutive
migrations or after max_generations generations.  Runs are deterministic
given (series, quantile spec, config) and independent of thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import MAX_ORDER, Segmentation, TimeSeries, min_segment_length
from .mdl import QuantileSpec, mdl_multi, mdl_single, structure_codelength
from .qr_solver import FitCache

_MIN_ELIGIBLE = min_segment_length(1)  # 10: smallest room a new segment can need


@dataclass(frozen=True)
class Chromosome:
    """Sparse gene vector: (position, order) for each segment start.

    Positions are 1-based; the first start is always position 1.
    """

    n: int
    starts: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "starts", tuple((int(t), int(p)) for t, p in self.starts)
        )
        if not self.starts or self.starts[0][0] != 1:
            raise ValueError("first segment must start at position 1")
        prev_t = None
        prev_p = None
        for t, p in self.starts:
            if not 1 <= p <= MAX_ORDER:
                raise ValueError(f"order {p} outside 1..{MAX_ORDER}")
            if prev_t is not None:
                if t - prev_t < min_segment_length(prev_p):
                    raise ValueError(
                        f"starts at {prev_t} and {t} violate the minimum length "
                        f"{min_segment_length(prev_p)} for order {prev_p}"
                    )
            prev_t, prev_p = t, p
        if self.n - prev_t + 1 < min_segment_length(prev_p):
            raise ValueError(
                f"last segment (start {prev_t}) shorter than the minimum "
                f"{min_segment_length(prev_p)} for order {prev_p}"
            )

    def genes(self) -> np.ndarray:
        """Dense length-n gene vector with -1 at non-start positions."""
        g = np.full(self.n, -1, dtype=np.int64)
        for t, p in self.starts:
            g[t - 1] = p
        return g

    @classmethod
    def from_genes(cls, genes) -> "Chromosome":
        genes = np.asarray(genes, dtype=np.int64)
        starts = tuple((int(t) + 1, int(p)) for t, p in enumerate(genes) if p != -1)
        return cls(n=genes.size, starts=starts)


def decode(chrom: Chromosome) -> Segmentation:
    """Segmentation described by a chromosome: start at t ends the previous segment at t-1."""
    breaks = tuple(t - 1 for t, _ in chrom.starts[1:])
    orders = tuple(p for _, p in chrom.starts)
    return Segmentation(n=chrom.n, breaks=breaks, orders=orders)


def encode(seg: Segmentation, n: int | None = None) -> Chromosome:
    """Inverse of decode."""
    if n is not None and n != seg.n:
        raise ValueError("length mismatch")
    starts = tuple(
        (seg.segment_range(j)[0], seg.orders[j]) for j in range(seg.segment_count)
    )
    return Chromosome(n=seg.n, starts=starts)


@dataclass(frozen=True)
class GaConfig:
    islands: int = 40
    subpopulation: int = 40
    migration_interval: int = 5
    migrants: int = 2
    stall_limit: int = 20
    max_generations: int = 100
    seed: int = 0
    max_order: int = MAX_ORDER
    break_prob: float | None = None  # default 10/n
    crossover_prob: float | None = None  # default (n-10)/n
    keep_prob: float = 0.3
    drop_prob: float = 0.3

    def __post_init__(self):
        for name in ("islands", "subpopulation", "migration_interval", "migrants",
                     "stall_limit", "max_generations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.migrants >= self.subpopulation:
            raise ValueError("migrants must be smaller than the subpopulation")
        if not 1 <= self.max_order <= MAX_ORDER:
            raise ValueError(f"max_order outside 1..{MAX_ORDER}")
        for name in ("break_prob", "crossover_prob"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} outside [0, 1]")
        if not (0.0 <= self.keep_prob <= 1.0 and 0.0 <= self.drop_prob <= 1.0):
            raise ValueError("mutation probabilities outside [0, 1]")
        if self.keep_prob + self.drop_prob > 1.0:
            raise ValueError("keep_prob + drop_prob must not exceed 1")

    def break_prob_for(self, n: int) -> float:
        return self.break_prob if self.break_prob is not None else _MIN_ELIGIBLE / n

    def crossover_prob_for(self, n: int) -> float:
        return (
            self.crossover_prob
            if self.crossover_prob is not None
            else (n - _MIN_ELIGIBLE) / n
        )


def _max_feasible_order(remaining: int, max_order: int) -> int:
    """Largest order whose minimum segment length fits in `remaining` observations."""
    best = 0
    for p in range(1, max_order + 1):
        if min_segment_length(p) <= remaining:
            best = p
        else:
            break
    return best


def _draw_order(remaining: int, max_order: int, rng: np.random.Generator) -> int:
    pmax = _max_feasible_order(remaining, max_order)
    if pmax < 1:
        raise ValueError(f"no feasible order for {remaining} remaining observations")
    return int(rng.integers(1, pmax + 1))


def random_chromosome(n: int, config: GaConfig, rng: np.random.Generator) -> Chromosome:
    """Constrained random candidate: new starts appear at each eligible
    position with probability break_prob, orders drawn uniformly among
    those whose minimum length still fits."""
    if n < _MIN_ELIGIBLE:
        raise ValueError(f"series too short (need n >= {_MIN_ELIGIBLE})")
    pi_b = config.break_prob_for(n)
    last_eligible = n - _MIN_ELIGIBLE + 1
    starts = []
    t = 1
    while True:
        p = _draw_order(n - t + 1, config.max_order, rng)
        starts.append((t, p))
        free = t + min_segment_length(p)
        if free > last_eligible or pi_b <= 0.0:
            break
        # geometric jump = independent break coin at every eligible position
        t = free + int(rng.geometric(pi_b)) - 1
        if t > last_eligible:
            break
    return Chromosome(n=n, starts=starts)


def crossover(parent_a: Chromosome, parent_b: Chromosome, rng: np.random.Generator) -> Chromosome:
    """Uniform gene inheritance with left-to-right constraint repair.

    Scanning positions in order, each gene comes from either parent with
    probability 1/2; adopting a start with order p blocks the next
    m_p - 1 positions.  Positions where both parents carry -1 are skipped
    (the coin cannot change the outcome there).
    """
    if parent_a.n != parent_b.n:
        raise ValueError("parents must encode series of the same length")
    ga = dict(parent_a.starts)
    gb = dict(parent_b.starts)
    candidates = sorted(set(ga) | set(gb))
    starts = []
    t = 1
    for q in candidates:
        if q < t:
            continue
        pick = ga.get(q, -1) if rng.random() < 0.5 else gb.get(q, -1)
        if pick != -1:
            starts.append((q, pick))
            t = q + min_segment_length(pick)
        else:
            t = q + 1
    return Chromosome(n=parent_a.n, starts=tuple(starts))


def mutate(parent: Chromosome, config: GaConfig, rng: np.random.Generator) -> Chromosome:
    """Positionwise mutation under the minimum-length constraint.

    At each eligible position: keep the parent's gene with probability
    keep_prob, clear it with probability drop_prob, otherwise draw a
    fresh segment start with a uniformly chosen feasible order.  The
    first position always stays a segment start.
    """
    n = parent.n
    pg = dict(parent.starts)
    last_eligible = n - _MIN_ELIGIBLE + 1
    starts = []
    r = rng.random()
    if r < config.keep_prob + config.drop_prob:
        p1 = pg[1]
    else:
        p1 = _draw_order(n, config.max_order, rng)
    starts.append((1, p1))
    t = 1 + min_segment_length(p1)
    while t <= last_eligible:
        r = rng.random()
        if r < config.keep_prob:
            g = pg.get(t, -1)
        elif r < config.keep_prob + config.drop_prob:
            g = -1
        else:
            g = _draw_order(n - t + 1, config.max_order, rng)
        if g != -1:
            starts.append((t, g))
            t += min_segment_length(g)
        else:
            t += 1
    return Chromosome(n=n, starts=tuple(starts))


class _Evaluator:
    """Criterion evaluation with segment-level and candidate-level caching."""

    def __init__(self, series: TimeSeries, spec: QuantileSpec, cache: FitCache):
        self.series = series
        self.spec = spec
        self.cache = cache
        self._scores: dict[tuple[tuple[int, int], ...], float] = {}
        self.evaluations = 0

    def fitness(self, chrom: Chromosome) -> float:
        key = chrom.starts
        cached = self._scores.get(key)
        if cached is not None:
            return cached
        self.evaluations += 1
        seg = decode(chrom)
        structure = structure_codelength(seg)
        total = structure  # weights sum to one
        for tau, weight in zip(self.spec.taus, self.spec.weights):
            residual = 0.0
            for j in range(seg.segment_count):
                a, b = seg.segment_range(j)
                residual += self.cache.loss(a, b, seg.orders[j], tau)
            total += weight * residual
        self._scores[key] = total
        return total


@dataclass(frozen=True)
class GaResult:
    segmentation: Segmentation
    score: "object"  # MdlScore
    fits_per_quantile: tuple
    history: tuple[float, ...]  # global best after each generation
    generations: int
    evaluations: int
    fit_calls: int
    fit_misses: int


def _select_parent(pop, rng: np.random.Generator):
    """Rank-based selection: probability proportional to rank from worst."""
    n = len(pop)
    ranks = np.arange(n, 0, -1, dtype=float)  # pop sorted best first
    idx = rng.choice(n, p=ranks / ranks.sum())
    return pop[idx][0]


def run(series: TimeSeries, spec: QuantileSpec, config: GaConfig) -> GaResult:
    """Minimize the description-length criterion over segmentations."""
    n = series.n
    if n < 2 * _MIN_ELIGIBLE:
        raise ValueError(f"series too short for a search (need n >= {2 * _MIN_ELIGIBLE})")
    cache = FitCache(series)
    evaluator = _Evaluator(series, spec, cache)
    pi_c = config.crossover_prob_for(n)

    streams = np.random.SeedSequence(config.seed).spawn(config.islands)
    rngs = [np.random.default_rng(s) for s in streams]

    # populations are kept sorted by fitness, best first
    islands = []
    for rng in rngs:
        pop = [random_chromosome(n, config, rng) for _ in range(config.subpopulation)]
        scored = sorted(((c, evaluator.fitness(c)) for c in pop), key=lambda cf: cf[1])
        islands.append(scored)

    def global_best():
        return min((isl[0] for isl in islands), key=lambda cf: cf[1])

    history = []
    best_at_last_migration = None
    stall = 0
    generation = 0
    while True:
        for isl, rng in zip(islands, rngs):
            new = [isl[0]]  # elitism
            while len(new) < config.subpopulation:
                if rng.random() < pi_c:
                    child = crossover(_select_parent(isl, rng), _select_parent(isl, rng), rng)
                else:
                    child = mutate(_select_parent(isl, rng), config, rng)
                new.append((child, evaluator.fitness(child)))
            isl[:] = sorted(new, key=lambda cf: cf[1])
        generation += 1
        history.append(global_best()[1])

        if generation % config.migration_interval == 0:
            donors = [isl[: config.migrants] for isl in islands]
            for i in range(config.islands):
                dest = islands[(i + 1) % config.islands]
                dest[-config.migrants :] = [(c, f) for c, f in donors[i]]
                dest.sort(key=lambda cf: cf[1])
            best = global_best()[1]
            if best_at_last_migration is not None and best == best_at_last_migration:
                stall += 1
            else:
                stall = 0
            best_at_last_migration = best
            if stall >= config.stall_limit:
                break
        if generation >= config.max_generations:
            break

    best_chrom, best_fitness = global_best()
    seg = decode(best_chrom)
    fits = tuple(
        tuple(
            cache.fit(*seg.segment_range(j), seg.orders[j], tau)
            for j in range(seg.segment_count)
        )
        for tau in spec.taus
    )
    if len(spec.taus) == 1:
        score = mdl_single(series, seg, spec.taus[0], fits[0])
    else:
        score = mdl_multi(series, seg, spec, fits)
    return GaResult(
        segmentation=seg,
        score=score,
        fits_per_quantile=fits,
        history=tuple(history),
        generations=generation,
        evaluations=evaluator.evaluations,
        fit_calls=cache.calls,
        fit_misses=cache.misses,
    )
