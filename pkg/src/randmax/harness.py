"""Monte Carlo experiment driver.

Sweeps the parameter grids of the two sampling pipelines, runs R independent
replications per parameter combination, fits every requested composite
estimator to each replication, and reduces the fitted inverse-transform
curves against the analytic truth into MISE and its integrated squared bias
and integrated variance parts (curve integrals use the trapezoid rule on the
edge coordinate, so MISE = ISB + IV holds exactly at grid level).

Reproducibility: each replication draws from a Philox stream whose id is a
64-bit hash of the combination's parameter values and the replication index,
keyed by the master seed. Streams therefore do not depend on the position of
a combination within the sweep (extending a grid never perturbs existing
results) nor on how replications are scheduled, and reductions accumulate in
replication order, so outputs are byte-identical at any parallelism width.
Per-replication estimation failures are excluded and counted, never imputed;
a combination with more than 20% failures is flagged in the run report.
"""

import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from time import perf_counter

import numpy as np

from .depcore import ExtremalT, Logistic, astar_transform, edge_grid
from .errors import DomainError, EstimationError
from .estimators import (
    ALPHA_ESTIMATORS,
    PICK_ESTIMATORS,
    clamp_alpha,
    endpoint_correct,
    estimate_alpha,
    invert_curve,
    pickands_curve_raw,
    pseudo_uniforms,
)
from .samplers import RngStream, sample_experiment1, sample_experiment2

__all__ = [
    "EstimatorPair",
    "ExperimentConfig",
    "Combo",
    "ComboResult",
    "enumerate_combos",
    "replication_stream",
    "truth_model",
    "truth_curve",
    "mise_decompose",
    "run_experiment",
    "results_csv_text",
    "figure_tables",
    "run_report_text",
]

_FAILURE_FLAG_FRACTION = 0.20


@dataclass(frozen=True)
class EstimatorPair:
    pick: str
    alpha_method: str

    def __post_init__(self):
        if self.pick not in PICK_ESTIMATORS:
            raise DomainError(f"unknown dependence estimator {self.pick!r}")
        if self.alpha_method not in ALPHA_ESTIMATORS:
            raise DomainError(f"unknown tail estimator {self.alpha_method!r}")

    @property
    def label(self):
        return f"{self.pick}-{self.alpha_method}"


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one sweep; see the module docstring for semantics.

    For experiment 1 the dependence grid is `psis`; for experiment 2 it is
    `rhos` x `upsilons` with `inner_size` blocks per observation and block
    sizes capped at `block_cap`.
    """

    experiment: int
    alphas: tuple
    sizes: tuple
    replications: int
    pairs: tuple
    psis: tuple = ()
    rhos: tuple = ()
    upsilons: tuple = ()
    inner_size: int = 500
    k: int = 5
    grid_size: int = 201
    corrected: bool = True
    seed: int = 0
    jobs: int = 1
    block_cap: int = 10_000_000

    def __post_init__(self):
        if self.experiment not in (1, 2):
            raise DomainError(f"experiment must be 1 or 2, got {self.experiment!r}")
        if not self.alphas or any(not (0.0 < a < 1.0) for a in self.alphas):
            raise DomainError("alpha grid must be nonempty with values in (0,1)")
        if self.experiment == 1:
            if not self.psis or any(not (0.0 < p <= 1.0) for p in self.psis):
                raise DomainError("psi grid must be nonempty with values in (0,1]")
        else:
            if not self.rhos or any(not (-1.0 < r < 1.0) for r in self.rhos):
                raise DomainError("rho grid must be nonempty with values in (-1,1)")
            if not self.upsilons or any(u <= 0.0 for u in self.upsilons):
                raise DomainError("upsilon set must be nonempty with positive values")
            if int(self.inner_size) < 1:
                raise DomainError("inner replication count must be >= 1")
        if not self.sizes or any(int(n) < 2 for n in self.sizes):
            raise DomainError("sample-size list must be nonempty with n >= 2")
        if int(self.replications) < 2:
            raise DomainError("need at least 2 replications")
        if not self.pairs:
            raise DomainError("need at least one estimator pair")
        if int(self.grid_size) < 3 or int(self.grid_size) % 2 == 0:
            raise DomainError("grid size must be an odd integer >= 3 so w = 1/2 is a node")
        if int(self.k) < 2:
            raise DomainError("GPWM moment order must be >= 2")
        if int(self.jobs) < 1:
            raise DomainError("parallelism width must be >= 1")
        if int(self.block_cap) < 1:
            raise DomainError("block cap must be >= 1")


@dataclass(frozen=True)
class Combo:
    experiment: int
    alpha: float
    psi_or_rho: float
    upsilon: float  # NaN for experiment 1
    n: int


def enumerate_combos(config):
    combos = []
    for alpha in config.alphas:
        if config.experiment == 1:
            for psi in config.psis:
                for n in config.sizes:
                    combos.append(Combo(1, float(alpha), float(psi), float("nan"), int(n)))
        else:
            for ups in config.upsilons:
                for rho in config.rhos:
                    for n in config.sizes:
                        combos.append(Combo(2, float(alpha), float(rho), float(ups), int(n)))
    return combos


# -- stream derivation -------------------------------------------------------

_U64 = (1 << 64) - 1


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _U64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _U64
    return x ^ (x >> 31)


def _float_bits(x):
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def replication_stream(seed, combo, rep):
    """Philox stream for one replication, keyed by the combination's values
    (not its sweep position) and the replication index."""
    h = _splitmix64(0xA076_1D64_78BD_642F ^ combo.experiment)
    for bits in (
        _float_bits(combo.alpha),
        _float_bits(combo.psi_or_rho),
        _float_bits(combo.upsilon),
        combo.n & _U64,
        rep & _U64,
    ):
        h = _splitmix64(h ^ bits)
    return RngStream(seed=seed, stream_id=h)


# -- truth -------------------------------------------------------------------


def truth_model(combo):
    """Base dependence model of the underlying observations for a combination."""
    if combo.experiment == 1:
        return Logistic(combo.psi_or_rho)
    return ExtremalT(combo.psi_or_rho, combo.upsilon)


def truth_curve(combo, w):
    """Analytic inverse-transform curve Astar on the grid for a combination."""
    base = truth_model(combo)
    alpha = combo.alpha
    pw = np.column_stack([(1.0 - w) ** (1.0 / alpha), w ** (1.0 / alpha)])
    inner = pw / pw.sum(axis=1, keepdims=True)
    return base.values(inner)


# -- per-replication work ----------------------------------------------------


def _sample_for(config, combo, rng):
    if combo.experiment == 1:
        return sample_experiment1(combo.psi_or_rho, combo.alpha, combo.n, rng)
    return sample_experiment2(
        combo.psi_or_rho,
        combo.upsilon,
        combo.alpha,
        combo.n,
        rng,
        n_prime=config.inner_size,
        block_cap=config.block_cap,
    )


def _replicate(rep, config, combo, inject_truth=False):
    """Run one replication: sample once, fit every pair on the shared sample.

    Returns {pair label: (astar values | None, clamp count, alpha clamped,
    cap hits)}; None marks an estimation failure of that pair's tail stage.
    With inject_truth the fitted curve is replaced by the analytic truth
    (pipeline-testing hook).
    """
    stream = replication_stream(config.seed, combo, rep)
    sample = _sample_for(config, combo, stream)
    cap_hits = int(sample.meta.get("cap_hits", 0))
    w = edge_grid(config.grid_size)
    if inject_truth:
        truth = truth_curve(combo, w)
        return {pair.label: (truth, 0, False, cap_hits) for pair in config.pairs}
    u = pseudo_uniforms(sample.eta)
    curves = {}
    for pick in {p.pick for p in config.pairs}:
        values, md_flags = pickands_curve_raw(u, w, pick)
        if config.corrected:
            values = endpoint_correct(values, w, pick)
        curves[pick] = (values, md_flags)
    alphas = {}
    for method in {p.alpha_method for p in config.pairs}:
        try:
            alphas[method] = clamp_alpha(estimate_alpha(sample.xi, method, k=config.k))
        except EstimationError:
            alphas[method] = None
    out = {}
    for pair in config.pairs:
        fitted = alphas[pair.alpha_method]
        if fitted is None:
            out[pair.label] = (None, 0, False, cap_hits)
            continue
        alpha_hat, alpha_clamped = fitted
        values, md_flags = curves[pair.pick]
        astar, mask = invert_curve(values, w, alpha_hat)
        out[pair.label] = (
            astar,
            int(np.count_nonzero(mask | md_flags)),
            alpha_clamped,
            cap_hits,
        )
    return out


# -- reduction ---------------------------------------------------------------


def mise_decompose(curves, truth, w):
    """(MISE, ISB, IV) of a stack of curves against the truth on the grid.

    MISE is the mean over replications of the integrated squared error; ISB
    integrates the squared pointwise bias of the mean curve, IV the pointwise
    variance, so MISE = ISB + IV up to float rounding.
    """
    curves = np.asarray(curves, dtype=float)
    truth = np.asarray(truth, dtype=float)
    w = np.asarray(w, dtype=float)
    if curves.ndim != 2 or curves.shape[1] != truth.size or truth.size != w.size:
        raise DomainError("curve stack, truth, and grid shapes do not match")
    if curves.shape[0] < 2:
        raise DomainError("need at least 2 replications to decompose")
    ise = np.trapezoid((curves - truth) ** 2, w, axis=1)
    mean_curve = curves.mean(axis=0)
    isb = float(np.trapezoid((mean_curve - truth) ** 2, w))
    iv = float(np.trapezoid(((curves - mean_curve) ** 2).mean(axis=0), w))
    return float(ise.mean()), isb, iv


@dataclass
class ComboResult:
    combo: Combo
    pair: EstimatorPair
    corrected: bool
    replications: int
    failures: int
    clamps: int
    alpha_clamps: int
    cap_hits: int
    mise: float
    isb: float
    iv: float
    mise_se: float
    ise: np.ndarray = field(repr=False)
    mean_curve: np.ndarray = field(repr=False)
    wall_ms: float = 0.0

    @property
    def flagged(self):
        return self.failures > _FAILURE_FLAG_FRACTION * self.replications


def run_experiment(config, inject_truth=False):
    """Run the full sweep and reduce each (combination, pair) to a ComboResult.

    Replications are independent tasks distributed over `config.jobs` worker
    processes; results are reduced in replication order, so the output is
    identical at every parallelism width.
    """
    combos = enumerate_combos(config)
    w = edge_grid(config.grid_size)
    results = []
    executor = ProcessPoolExecutor(max_workers=config.jobs) if config.jobs > 1 else None
    try:
        for combo in combos:
            start = perf_counter()
            reps = range(config.replications)
            if executor is None:
                rep_results = [_replicate(r, config, combo, inject_truth) for r in reps]
            else:
                chunk = max(1, config.replications // (8 * config.jobs))
                rep_results = list(
                    executor.map(
                        _ReplicateTask(config, combo, inject_truth), reps, chunksize=chunk
                    )
                )
            wall_ms = (perf_counter() - start) * 1000.0
            truth = truth_curve(combo, w)
            cap_hits = sum(next(iter(r.values()))[3] for r in rep_results)
            for pair in config.pairs:
                stack, clamps, alpha_clamps = [], 0, 0
                for r in rep_results:
                    curve, n_clamped, a_clamped, _ = r[pair.label]
                    if curve is None:
                        continue
                    stack.append(curve)
                    clamps += n_clamped
                    alpha_clamps += int(a_clamped)
                failures = config.replications - len(stack)
                if len(stack) >= 2:
                    curves = np.array(stack)
                    mise, isb, iv = mise_decompose(curves, truth, w)
                    ise = np.trapezoid((curves - truth) ** 2, w, axis=1)
                    mise_se = float(ise.std(ddof=1) / np.sqrt(len(stack)))
                    mean_curve = curves.mean(axis=0)
                else:
                    mise = isb = iv = mise_se = float("nan")
                    ise = np.array([])
                    mean_curve = np.full(w.size, np.nan)
                results.append(
                    ComboResult(
                        combo=combo,
                        pair=pair,
                        corrected=config.corrected,
                        replications=config.replications,
                        failures=failures,
                        clamps=clamps,
                        alpha_clamps=alpha_clamps,
                        cap_hits=cap_hits,
                        mise=mise,
                        isb=isb,
                        iv=iv,
                        mise_se=mise_se,
                        ise=ise,
                        mean_curve=mean_curve,
                        wall_ms=wall_ms,
                    )
                )
    finally:
        if executor is not None:
            executor.shutdown()
    return results


class _ReplicateTask:
    """Picklable replication callable for the process pool."""

    def __init__(self, config, combo, inject_truth):
        self.config = config
        self.combo = combo
        self.inject_truth = inject_truth

    def __call__(self, rep):
        return _replicate(rep, self.config, self.combo, self.inject_truth)


# -- serialization -----------------------------------------------------------


def _fmt(x):
    return repr(float(x))


def results_csv_text(results):
    """Deterministic results table.

    The wall_ms column is written as 0 so reruns are byte-identical;
    measured wall times are reported in the run report instead.
    """
    lines = [
        "experiment,alpha,psi_or_rho,upsilon,n,estimator_pair,corrected,R,"
        "failures,clamps,MISE,ISB,IV,wall_ms"
    ]
    for r in results:
        c = r.combo
        ups = "" if np.isnan(c.upsilon) else _fmt(c.upsilon)
        lines.append(
            ",".join(
                [
                    str(c.experiment),
                    _fmt(c.alpha),
                    _fmt(c.psi_or_rho),
                    ups,
                    str(c.n),
                    r.pair.label,
                    str(int(r.corrected)),
                    str(r.replications),
                    str(r.failures),
                    str(r.clamps),
                    _fmt(r.mise),
                    _fmt(r.isb),
                    _fmt(r.iv),
                    "0",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def figure_tables(results):
    """Plot-ready tables mirroring the study's figure layouts.

    One MISE/ISB/IV table per tail estimator (rows indexed by the dependence
    grid and the dependence-curve estimator), plus a GPWM/ML ratio table when
    both tail estimators are present.
    """
    methods = sorted({r.pair.alpha_method for r in results})
    tables = {}
    header = "experiment,alpha,psi_or_rho,upsilon,n,pick,MISE,ISB,IV"
    for method in methods:
        lines = [header]
        for r in results:
            if r.pair.alpha_method != method:
                continue
            c = r.combo
            ups = "" if np.isnan(c.upsilon) else _fmt(c.upsilon)
            lines.append(
                ",".join(
                    [
                        str(c.experiment),
                        _fmt(c.alpha),
                        _fmt(c.psi_or_rho),
                        ups,
                        str(c.n),
                        r.pair.pick,
                        _fmt(r.mise),
                        _fmt(r.isb),
                        _fmt(r.iv),
                    ]
                )
            )
        tables[f"figure_mise_{method.lower()}"] = "\n".join(lines) + "\n"
    if "GPWM" in methods and "ML" in methods:
        by_key = {(r.combo, r.pair.pick, r.pair.alpha_method): r for r in results}
        lines = [
            "experiment,alpha,psi_or_rho,upsilon,n,pick,ratio_MISE,ratio_ISB,ratio_IV"
        ]
        seen = []
        for r in results:
            key = (r.combo, r.pair.pick)
            if key in seen or (key + ("GPWM",)) not in by_key or (key + ("ML",)) not in by_key:
                continue
            seen.append(key)
            g = by_key[key + ("GPWM",)]
            m = by_key[key + ("ML",)]
            c = r.combo
            ups = "" if np.isnan(c.upsilon) else _fmt(c.upsilon)
            lines.append(
                ",".join(
                    [
                        str(c.experiment),
                        _fmt(c.alpha),
                        _fmt(c.psi_or_rho),
                        ups,
                        str(c.n),
                        r.pair.pick,
                        _fmt(g.mise / m.mise),
                        _fmt(g.isb / m.isb),
                        _fmt(g.iv / m.iv),
                    ]
                )
            )
        tables["figure_ratio_gpwm_ml"] = "\n".join(lines) + "\n"
    return tables


def run_report_text(results):
    """Human-readable run report: timings, failure/clamp counters, warnings."""
    lines = ["run report", "=========="]
    warnings = []
    for r in results:
        c = r.combo
        ups = "" if np.isnan(c.upsilon) else f" upsilon={c.upsilon:g}"
        lines.append(
            f"experiment={c.experiment} alpha={c.alpha:g} grid={c.psi_or_rho:g}{ups} "
            f"n={c.n} pair={r.pair.label}: R={r.replications} failures={r.failures} "
            f"clamps={r.clamps} alpha_clamps={r.alpha_clamps} cap_hits={r.cap_hits} "
            f"wall_ms={r.wall_ms:.1f}"
        )
        if r.flagged:
            warnings.append(
                f"WARNING: combo alpha={c.alpha:g} grid={c.psi_or_rho:g} n={c.n} "
                f"pair={r.pair.label} had {r.failures}/{r.replications} failures"
            )
    lines.extend(warnings if warnings else ["no warnings"])
    return "\n".join(lines) + "\n"


def desk_scale_preset(experiment=1, seed=20260811):
    """Small sweep suitable for interactive runs and CI."""
    if experiment == 1:
        return ExperimentConfig(
            experiment=1,
            alphas=(0.5,),
            psis=(0.1, 0.55, 1.0),
            sizes=(50,),
            replications=200,
            pairs=tuple(
                EstimatorPair(p, a) for a in ("GPWM", "ML") for p in ("P", "CFG", "MD")
            ),
            seed=seed,
        )
    return ExperimentConfig(
        experiment=2,
        alphas=(0.5,),
        rhos=(-0.5, 0.5, 0.99),
        upsilons=(1.0,),
        sizes=(50,),
        replications=100,
        pairs=tuple(EstimatorPair(p, "GPWM") for p in ("P", "CFG", "MD")),
        seed=seed,
    )


def astar_point(combo, t):
    """Analytic Astar at one simplex point (convenience for tests)."""
    base = truth_model(combo)
    return astar_transform(lambda s: base.pickands(s), combo.alpha, t)


def with_overrides(config, seed=None, jobs=None):
    """Copy of the config with CLI-level seed/jobs overrides applied."""
    kwargs = {}
    if seed is not None:
        kwargs["seed"] = int(seed)
    if jobs is not None:
        kwargs["jobs"] = int(jobs)
    return replace(config, **kwargs) if kwargs else config
