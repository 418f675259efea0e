"""Random cash-management sets: bagged bound fits, generalization power and experiment drivers."""
from __future__ import annotations

import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

from .cost import CostStructure, policy_cost
from .policy import BoundTriple, miller_orr_bounds, simulate
from .series import CashFlowSeries, gen_random_walk, sample_subsequence, split, stats
from .solver import FitResult, Limits, LpNumericalError, fit_bounds

MILLER_ORR = "miller-orr"
STABLE = "stable"
DELTA_SIGMA = "delta-sigma"
REPLICATION_STRIDE = 100003

FitFn = Callable[..., FitResult]


class EnsembleError(RuntimeError):
    """No member of an ensemble could be fitted."""


class UndefinedRatioError(ArithmeticError):
    """The benchmark cost is zero (or both costs are infinite), so G has no value."""


@dataclass(frozen=True)
class MemberFit:
    index: int
    seed: int
    result: FitResult | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.result is not None and self.result.bounds is not None

    @property
    def bounds(self) -> BoundTriple | None:
        return self.result.bounds if self.result is not None else None


@dataclass(frozen=True)
class EnsembleModel:
    """K member fits on random subsequences of size n and the average of their bounds."""

    members: tuple[MemberFit, ...]
    averaged: BoundTriple
    K: int
    n: int
    seed: int

    @property
    def successful(self) -> tuple[BoundTriple, ...]:
        return tuple(m.bounds for m in self.members if m.ok)

    @property
    def failed(self) -> tuple[int, ...]:
        return tuple(m.index for m in self.members if not m.ok)

    def mean_fit_seconds(self) -> float:
        times = [m.result.wall_time for m in self.members if m.result is not None]
        return sum(times) / len(times) if times else math.nan


@dataclass(frozen=True)
class EvaluationReport:
    """Model cost C, benchmark cost C0 and their ratio G on one data set."""

    C: float
    C0: float
    G: float
    data_tag: str
    averaged_costs: bool


def average_bounds(members: Sequence[BoundTriple]) -> BoundTriple:
    """Component-wise arithmetic mean.

    Summation runs left to right, and rounding is monotone, so ordered
    members always give an ordered mean; a single member comes back unchanged.
    """
    members = list(members)
    if not members:
        raise ValueError("cannot average an empty list of bounds")
    k = len(members)
    L = Z = H = 0.0
    for b in members:
        L += b.L
        Z += b.Z
        H += b.H
    return BoundTriple(L / k, Z / k, H / k)


def fit_rcms(train: CashFlowSeries, b0: float, alpha: CostStructure, K: int, n: int,
             b_min: float, seed: int, limits: Limits | None = None, workers: int = 1,
             fit: FitFn | None = None) -> EnsembleModel:
    """Fit K members, member k on ``n`` flows of ``train`` drawn with seed ``seed + k``.

    Members whose fit is infeasible or numerically fails are kept in the
    record as failed and left out of the average. ``workers > 1`` fits
    members on a thread pool; results are merged by member index, so the
    model does not depend on the worker count.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if n < 1 or n > len(train):
        raise ValueError(f"n must lie in [1, {len(train)}], got {n}")
    fit = fit or fit_bounds

    def one(k: int) -> MemberFit:
        sample = sample_subsequence(train, n, seed + k)
        try:
            result = fit(sample, b0, alpha, b_min, limits)
        except LpNumericalError as exc:
            return MemberFit(k, seed + k, None, f"numerical failure: {exc}")
        if result.bounds is None:
            return MemberFit(k, seed + k, result, f"no bounds ({result.status})")
        return MemberFit(k, seed + k, result)

    if workers > 1 and K > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            members = list(pool.map(one, range(K)))
    else:
        members = [one(k) for k in range(K)]
    members.sort(key=lambda m: m.index)
    good = [m.bounds for m in members if m.ok]
    if not good:
        raise EnsembleError(f"all {K} member fits failed; first: {members[0].error}")
    return EnsembleModel(members=tuple(members), averaged=average_bounds(good),
                         K=K, n=n, seed=seed)


def generalization_power(model_bounds: BoundTriple, benchmark_bounds: BoundTriple,
                         data: CashFlowSeries, b0: float, alpha: CostStructure,
                         data_tag: str = "test", averaged: bool = False) -> EvaluationReport:
    """G = C / C0, each cost from replaying a policy on ``data``.

    An infinite benchmark cost with a finite model cost gives G = 0.
    """
    if len(data) == 0:
        raise ValueError("empty evaluation data")
    C = policy_cost(simulate(data, b0, model_bounds), alpha, averaged)
    C0 = policy_cost(simulate(data, b0, benchmark_bounds), alpha, averaged)
    if C0 == 0.0:
        raise UndefinedRatioError("benchmark cost is zero; generalization power undefined")
    if math.isinf(C0):
        if math.isinf(C):
            raise UndefinedRatioError("model and benchmark costs are both infinite")
        G = 0.0
    else:
        G = C / C0
    return EvaluationReport(C=C, C0=C0, G=G, data_tag=data_tag, averaged_costs=averaged)


@dataclass(frozen=True)
class Algorithm1Result:
    report: EvaluationReport
    model: EnsembleModel
    benchmark: BoundTriple
    b0: float
    b_min: float
    sigma_train: float
    n_train: int
    n_test: int


def run_algorithm1(f: CashFlowSeries, b0: float | str, n: int, K: int,
                   alpha: CostStructure, benchmark: BoundTriple | str = MILLER_ORR,
                   r: float = 0.8, delta: float = 5.0, seed: int = 0,
                   b_min: float | str = DELTA_SIGMA, limits: Limits | None = None,
                   workers: int = 1, fit: FitFn | None = None,
                   member_b0: float | None = None) -> Algorithm1Result:
    """Split, fit an ensemble on the training part and score it on the test part.

    ``benchmark="miller-orr"`` builds the closed-form policy from the
    training standard deviation with L = delta * sigma. ``b0="stable"``
    starts both policies at the benchmark target, and ``b_min="delta-sigma"``
    floors member fits at delta * sigma. Only the training part reaches the
    fitting code.
    """
    train, test = split(f, r)
    sigma = stats(train).std
    if isinstance(benchmark, str):
        if benchmark != MILLER_ORR:
            raise ValueError(f"unknown benchmark {benchmark!r}")
        bench = miller_orr_bounds(delta * sigma, sigma, alpha.gamma0_plus, alpha.v)
    else:
        bench = benchmark
    if isinstance(b_min, str):
        if b_min != DELTA_SIGMA:
            raise ValueError(f"unknown b_min sentinel {b_min!r}")
        b_min_v = delta * sigma
    else:
        b_min_v = float(b_min)
    if isinstance(b0, str):
        if b0 != STABLE:
            raise ValueError(f"unknown b0 sentinel {b0!r}")
        b0_v = bench.Z
    else:
        b0_v = float(b0)
    start = b0_v if member_b0 is None else float(member_b0)
    model = fit_rcms(train, start, alpha, K, n, b_min_v, seed, limits, workers, fit)
    report = generalization_power(model.averaged, bench, test, b0_v, alpha, "test")
    return Algorithm1Result(report=report, model=model, benchmark=bench, b0=b0_v,
                            b_min=b_min_v, sigma_train=sigma, n_train=len(train),
                            n_test=len(test))


@dataclass(frozen=True)
class SynthSpec:
    """Gaussian random-walk data generated from the run seed."""

    sigma: float
    mu: float
    N: int

    def generate(self, seed: int) -> CashFlowSeries:
        return gen_random_walk(self.sigma, self.mu, self.N, seed)


@dataclass(frozen=True)
class Algorithm1Config:
    """Inputs of one ``run_algorithm1`` call; ``data`` may be fixed or synthesised per seed."""

    data: CashFlowSeries | SynthSpec
    alpha: CostStructure
    b0: float | str = STABLE
    n: int = 25
    K: int = 20
    r: float = 0.8
    delta: float = 5.0
    b_min: float | str = DELTA_SIGMA
    benchmark: BoundTriple | str = MILLER_ORR
    seed: int = 0
    limits: Limits | None = None
    workers: int = 1

    def series(self, seed: int | None = None, offset: int = 0) -> CashFlowSeries:
        s = self.data.generate(self.seed if seed is None else seed) \
            if isinstance(self.data, SynthSpec) else self.data
        if offset:
            s = CashFlowSeries(s.flows[offset:], s.labels[offset:] if s.labels else None)
        return s

    def run(self, seed: int | None = None, offset: int = 0,
            fit: FitFn | None = None) -> Algorithm1Result:
        seed = self.seed if seed is None else seed
        return run_algorithm1(self.series(seed, offset), self.b0, self.n, self.K, self.alpha,
                              self.benchmark, self.r, self.delta, seed, self.b_min,
                              self.limits, self.workers, fit)


@dataclass(frozen=True)
class ReplicateResult:
    mean: float
    std: float
    runs: tuple[Algorithm1Result, ...]
    seeds: tuple[int, ...]

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(run.report.G for run in self.runs)


def replicate(config: Algorithm1Config, R: int, seed: int | None = None,
              seeds: Sequence[int] | None = None, offset_step: int = 0,
              fit: FitFn | None = None) -> ReplicateResult:
    """Repeat ``config`` R times and aggregate G (mean, sample std; std 0 when R = 1).

    Run i uses ``seeds[i]`` when given, else ``seed + i * 100003``. With
    ``offset_step`` > 0, run i also drops its oldest ``i * offset_step``
    flows, moving the train/test boundary.
    """
    if R < 1:
        raise ValueError(f"R must be >= 1, got {R}")
    base = config.seed if seed is None else seed
    if seeds is None:
        seeds = [base + i * REPLICATION_STRIDE for i in range(R)]
    elif len(seeds) != R:
        raise ValueError(f"{len(seeds)} seeds given for R={R}")
    runs = tuple(config.run(s, i * offset_step, fit) for i, s in enumerate(seeds))
    gs = [run.report.G for run in runs]
    std = statistics.stdev(gs) if R > 1 else 0.0
    return ReplicateResult(mean=statistics.fmean(gs), std=std, runs=runs, seeds=tuple(seeds))


@dataclass(frozen=True)
class SweepRow:
    context: str
    alpha: CostStructure
    G: float
    result: Algorithm1Result | None = None
    error: str | None = None


def _named(contexts) -> list[tuple[str, CostStructure]]:
    if isinstance(contexts, Mapping):
        items = list(contexts.items())
    else:
        items = [(f"alpha{i + 1}", a) for i, a in enumerate(contexts)]
    if not items:
        raise ValueError("no cost contexts given")
    return items


def context_sweep(f: CashFlowSeries, b0: float | str, n: int, K: int,
                  contexts: Sequence[CostStructure] | Mapping[str, CostStructure],
                  r: float = 0.8, delta: float = 5.0, seed: int = 0,
                  b_min: float | str = DELTA_SIGMA, limits: Limits | None = None,
                  workers: int = 1, fit: FitFn | None = None) -> list[SweepRow]:
    """G for each cost context on one split.

    Every context reuses ``seed``, so all contexts see the same member
    subsequences and differ only in costs. A failing context is recorded
    with its error and the sweep moves on.
    """
    rows = []
    for name, alpha in _named(contexts):
        try:
            res = run_algorithm1(f, b0, n, K, alpha, MILLER_ORR, r, delta, seed, b_min,
                                 limits, workers, fit)
        except (EnsembleError, UndefinedRatioError, LpNumericalError) as exc:
            rows.append(SweepRow(name, alpha, math.nan, None, f"{type(exc).__name__}: {exc}"))
            continue
        rows.append(SweepRow(name, alpha, res.report.G, res))
    return rows


@dataclass(frozen=True)
class LearningRow:
    n: int
    G: float
    mean_fit_seconds: float = field(compare=False)
    G_values: tuple[float, ...] = ()
    error: str | None = None


def learning_curve(f: CashFlowSeries, b0: float | str, alpha: CostStructure, K: int,
                   sizes: Sequence[int], r: float = 0.8, delta: float = 5.0, seed: int = 0,
                   b_min: float | str = DELTA_SIGMA, replications: int = 1,
                   limits: Limits | None = None, workers: int = 1,
                   fit: FitFn | None = None) -> list[LearningRow]:
    """G and mean member fit time per sample size n, averaged over ``replications``.

    Replication i of every size uses seed ``seed + i * 100003``, so rows for
    equal sizes are identical apart from timings.
    """
    if not sizes:
        raise ValueError("no sample sizes given")
    cfg = Algorithm1Config(data=f, alpha=alpha, b0=b0, K=K, r=r, delta=delta, b_min=b_min,
                           seed=seed, limits=limits, workers=workers)
    rows = []
    for n in sizes:
        try:
            rep = replicate(replace(cfg, n=int(n)), replications, fit=fit)
        except (EnsembleError, UndefinedRatioError, LpNumericalError, ValueError) as exc:
            rows.append(LearningRow(int(n), math.nan, math.nan, (), f"{type(exc).__name__}: {exc}"))
            continue
        secs = statistics.fmean(run.model.mean_fit_seconds() for run in rep.runs)
        rows.append(LearningRow(int(n), rep.mean, secs, rep.values))
    return rows
