"""End-to-end experiment pipelines with CSV outputs and run manifests.

Pipelines never bypass the library layers: sources feed block_means, the
empirical SCGF and its conjugate come from blockstats/convex, and regime
predictions from regimes.  Every run writes a manifest sufficient to re-run
it bit-exactly; CSV bytes are identical across re-runs with equal manifests.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.special import ndtr

from . import __version__
from ._errors import DataError, UsageError
from ._serialize import file_checksum, grid_spec, make_grid, write_csv
from .blockstats import SampledFunction, ball_mass, block_means, \
    empirical_scgf, local_rate
from .convex import ConjugateResult, grad_estimate, legendre
from .models import ScgfModel, digit_indicator_model
from .regimes import RegimeReport, Schedule, classify
from .sources import SeriesSource, digit_source, file_source, gaussian_source


@dataclass
class ExperimentConfig:
    """Declarative description of an experiment run.

    Grids are (lo, hi, step) triples realized as lo + step*arange(count);
    manifests echo them as (lo, step, count) so they regenerate exactly.
    The observation budget enforces n * k(n) <= budget for every n before
    any computation starts.
    """

    kind: str = "iid-digit"
    m: int = 10
    a: int = 0
    p: float | None = None
    d: int = 1
    path: str | None = None
    lambda0: float | None = None
    c: float | None = None
    gamma: float | None = None
    gamma_prime: float | None = None
    n_list: tuple = (150,)
    seeds: tuple = (1, 2, 3)
    lambda_grid: tuple = (-6.0, 6.0, 0.01)
    x_grid: tuple = (0.001, 0.999, 0.001)
    budget: float = 1e6
    out_dir: str = "."
    R: float | None = None
    x_list: tuple = ()
    eps: float | None = None

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, "r") as fh:
            doc = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise UsageError("unknown config keys: %s" % ", ".join(unknown))
        cfg = cls(**doc)
        cfg.n_list = tuple(int(n) for n in cfg.n_list)
        cfg.seeds = tuple(int(s) for s in cfg.seeds)
        cfg.lambda_grid = tuple(float(v) for v in cfg.lambda_grid)
        cfg.x_grid = tuple(float(v) for v in cfg.x_grid)
        cfg.x_list = tuple(
            tuple(float(u) for u in v) if isinstance(v, (list, tuple)) else float(v)
            for v in cfg.x_list)
        return cfg

    def to_dict(self) -> dict:
        doc = asdict(self)
        for key in ("n_list", "seeds", "lambda_grid", "x_grid", "x_list"):
            doc[key] = list(doc[key])
        return doc


@dataclass
class RunManifest:
    """Everything needed to re-run an experiment bit-exactly."""

    command: str
    config: dict
    seeds: list
    files: list
    library_version: str = __version__
    wallclock_s: float = 0.0
    input_checksums: dict = field(default_factory=dict)

    def write(self, path) -> str:
        doc = asdict(self)
        doc["files"] = sorted(os.path.basename(f) for f in self.files)
        with open(path, "w", newline="") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return str(path)


@dataclass
class Fig1Run:
    """In-memory results of one (n, seed) digit-experiment run."""

    n: int
    k: int
    seed: int
    scgf: SampledFunction
    abs_err: np.ndarray
    conj: ConjugateResult
    grad: SampledFunction
    mean_min: float
    mean_max: float


@dataclass
class Fig1Result:
    model: ScgfModel
    c: float
    runs: list
    files: list
    manifest_path: str


def _schedule_k(c: float, n: int) -> int:
    return Schedule(c).k(n)


def fig1_pipeline(config: ExperimentConfig) -> Fig1Result:
    """Digit-experiment pipeline: empirical SCGF, error, conjugate, slope range.

    The source yields base-m symbols (counter-based generator or digit file);
    the observable is the 0/1 indicator of symbol a.  The schedule is
    critical at lambda0: c = Lambda*(Lambda'(lambda0)).  For each n and seed
    it emits CSVs of the empirical SCGF on the lambda grid, its absolute
    error against the model, the numerical conjugate on the x grid and the
    derivative estimate, plus a summary of the attained-mean intervals
    [min_j mean_j, max_j mean_j] and a manifest.
    """
    started = time.time()
    if config.kind not in ("iid-digit", "digit-file"):
        raise UsageError("fig1 pipeline needs an iid-digit or digit-file source")
    model = digit_indicator_model(config.m, config.a)
    lambda0 = 0.8 if config.lambda0 is None else float(config.lambda0)
    x0 = model.grad(lambda0)
    c = lambda0 * x0 - model.lam(lambda0)
    ks = {}
    for n in config.n_list:
        ks[n] = _schedule_k(c, n)
        if n * ks[n] > config.budget:
            raise UsageError(
                "budget violation: n=%d needs n*k=%d > %g observations"
                % (n, n * ks[n], config.budget))
    lam_grid = make_grid(*config.lambda_grid)
    x_grid = make_grid(*config.x_grid)
    checksums = {}
    if config.kind == "digit-file":
        if not config.path:
            raise UsageError("digit-file source needs a path")
        base = file_source(config.path, config.m, indicator_a=config.a)
        seeds_eff = [0]
        checksums[os.path.basename(config.path)] = file_checksum(config.path)
    else:
        base = digit_source(0, config.m, indicator_a=config.a)
        seeds_eff = [int(s) for s in config.seeds]
    os.makedirs(config.out_dir, exist_ok=True)
    runs = []
    files = []
    summary_rows = []
    for seed in seeds_eff:
        src = base if config.kind == "digit-file" else base.with_seed(seed)
        for n in config.n_list:
            k = ks[n]
            stats = block_means(src, n, k)
            meta = {"seed": seed, "model": model.name, "c": c}
            scgf = empirical_scgf(stats, lam_grid, meta=meta)
            abs_err = np.abs(scgf.values - model.lam(lam_grid))
            conj = legendre(scgf, x_grid)
            grad = grad_estimate(scgf)
            mean_min = float(stats.means.min())
            mean_max = float(stats.means.max())
            tag = "n%d_s%d" % (n, seed)
            files.append(write_csv(
                os.path.join(config.out_dir, "scgf_%s.csv" % tag),
                ["lambda", "value"], zip(lam_grid, scgf.values)))
            files.append(write_csv(
                os.path.join(config.out_dir, "abserr_%s.csv" % tag),
                ["lambda", "abs_error"], zip(lam_grid, abs_err)))
            files.append(write_csv(
                os.path.join(config.out_dir, "conj_%s.csv" % tag),
                ["x", "value", "argmax_lambda", "boundary"],
                zip(x_grid, conj.values, conj.argmax, conj.boundary)))
            files.append(write_csv(
                os.path.join(config.out_dir, "grad_%s.csv" % tag),
                ["lambda", "derivative"], zip(lam_grid, grad.values)))
            summary_rows.append((n, seed, k, mean_min, mean_max))
            runs.append(Fig1Run(n=n, k=k, seed=seed, scgf=scgf, abs_err=abs_err,
                                conj=conj, grad=grad, mean_min=mean_min,
                                mean_max=mean_max))
    files.append(write_csv(os.path.join(config.out_dir, "summary.csv"),
                           ["n", "seed", "k", "mean_min", "mean_max"],
                           summary_rows))
    echo = config.to_dict()
    echo["lambda_grid"] = grid_spec(lam_grid[0], config.lambda_grid[2], len(lam_grid))
    echo["x_grid"] = grid_spec(x_grid[0], config.x_grid[2], len(x_grid))
    echo["c"] = c
    echo["k_by_n"] = {str(n): ks[n] for n in config.n_list}
    echo["grid_note"] = "lambda/x grids and n spacing are reconstructions"
    manifest = RunManifest(command="fig1", config=echo, seeds=seeds_eff,
                           files=list(files), wallclock_s=round(time.time() - started, 3),
                           input_checksums=checksums)
    manifest_path = manifest.write(os.path.join(config.out_dir, "manifest.json"))
    return Fig1Result(model=model, c=float(c), runs=runs, files=files,
                      manifest_path=manifest_path)


@dataclass
class RegimeEvidence:
    """Per-regime evidence table produced by regime_experiment."""

    report: RegimeReport
    columns: list
    rows: list


def regime_experiment(model: ScgfModel, source: SeriesSource, lambda0: float,
                      c: float, n_list, seeds, eps: float | None = None) -> RegimeEvidence:
    """Collect the evidence matching the regime of (lambda0, c).

    supercritical: rows (n, seed, k, sup_error) with the sup of
        |empirical - model| over the window [lambda0 - 0.2, lambda0 + 0.2]
        sampled at step 0.01;
    subcritical: rows (n, seed, k, count, mass) for the ball
        B(x0, eps) at x0 = Lambda'(lambda0) (eps is required);
    critical: rows (n, seed, k, t, empirical, predicted, abs_error) for the
        tilts t*lambda0, t in {1, 1.5, 2}, against the affine continuation.

    The source is re-derived with each seed; k(n) = ceil(e^{c n}).
    """
    report = classify(model, lambda0, c)
    schedule = Schedule(c)
    ks = {n: schedule.k(n) for n in n_list}
    rows = []
    if report.regime == "supercritical":
        window = make_grid(lambda0 - 0.2, lambda0 + 0.2, 0.01)
        truth = model.lam(window)
        columns = ["n", "seed", "k", "sup_error"]
        for seed in seeds:
            src = source.with_seed(seed)
            for n in n_list:
                stats = block_means(src, n, ks[n])
                emp = empirical_scgf(stats, window)
                rows.append((n, seed, ks[n],
                             float(np.max(np.abs(emp.values - truth)))))
    elif report.regime == "subcritical":
        if eps is None:
            raise UsageError("subcritical evidence needs the ball radius eps")
        columns = ["n", "seed", "k", "count", "mass"]
        for seed in seeds:
            src = source.with_seed(seed)
            for n in n_list:
                stats = block_means(src, n, ks[n])
                count, mass = ball_mass(stats, report.x0, eps)
                rows.append((n, seed, ks[n], count, mass))
    else:
        if lambda0 == 0.0:
            raise UsageError("tilted evidence needs lambda0 != 0")
        ts = (1.0, 1.5, 2.0)
        tilts = np.array([t * lambda0 for t in ts])
        order = np.argsort(tilts)
        columns = ["n", "seed", "k", "t", "empirical", "predicted", "abs_error"]
        for seed in seeds:
            src = source.with_seed(seed)
            for n in n_list:
                stats = block_means(src, n, ks[n])
                emp = empirical_scgf(stats, tilts[order])
                by_t = {ts[i]: emp.values[pos] for pos, i in enumerate(order)}
                for t in ts:
                    pred = report.tilted(t)
                    rows.append((n, seed, ks[n], t, float(by_t[t]), pred,
                                 abs(float(by_t[t]) - pred)))
    return RegimeEvidence(report=report, columns=columns, rows=rows)


@dataclass
class BrownianResult:
    """Ball-mass and local-rate table for Gaussian block increments."""

    columns: list
    rows: list


def brownian_experiment(d: int, R: float, schedule: Schedule, n_list, x_list,
                        eps: float, seeds) -> BrownianResult:
    """Empirical ball masses of Gaussian block means against the exact law.

    Block means of iid standard normals are N(0, 1/n) per coordinate, so in
    d=1 the mass of B(x, eps) has the exact oracle
    Phi((x+eps) sqrt(n)) - Phi((x-eps) sqrt(n)); rows carry the empirical
    mass, the local rate, the oracle and the relative error (oracle columns
    are NaN for d > 1).  margin_ok reports the schedule margin condition
    c > (1 + sqrt(eps_n)) R^2 / 2, with eps_n = 0 when the schedule carries
    no gamma.  Every center must satisfy |x| + eps <= R.
    """
    if d < 1:
        raise UsageError("dimension must be >= 1")
    if not eps > 0:
        raise UsageError("ball radius must be > 0")
    xs = [np.atleast_1d(np.asarray(x, dtype=np.float64)) for x in x_list]
    for x in xs:
        if x.shape != (d,):
            raise UsageError("ball centers must have dimension %d" % d)
        if float(np.linalg.norm(x)) + eps > R:
            raise UsageError("center %r violates |x| + eps <= R" % (x,))
    columns = ["n", "seed", "x", "k", "count", "mass", "local_rate",
               "oracle_mass", "oracle_rate", "rel_err", "margin_ok"]
    rows = []
    for seed in seeds:
        for n in n_list:
            k = schedule.k(n)
            stats = block_means(gaussian_source(seed, d), n, k)
            eps_n = schedule.eps_n(n) if schedule.gamma is not None else 0.0
            margin_ok = schedule.c > (1.0 + math.sqrt(eps_n)) * R * R / 2.0
            for x in xs:
                count, mass = ball_mass(stats, x, eps)
                rate = local_rate(stats, x, eps)
                if d == 1:
                    x0 = float(x[0])
                    oracle = float(ndtr((x0 + eps) * math.sqrt(n))
                                   - ndtr((x0 - eps) * math.sqrt(n)))
                    oracle_rate = -math.log(oracle) / n
                    rel = abs(mass - oracle) / oracle
                    xcell = x0
                else:
                    oracle = oracle_rate = rel = float("nan")
                    xcell = ";".join("%.16e" % v for v in x)
                rows.append((n, seed, xcell, k, count, mass, rate, oracle,
                             oracle_rate, rel, margin_ok))
    return BrownianResult(columns=columns, rows=rows)


@dataclass
class FrequencyResult:
    """Sliding-window word frequencies of a base-m symbol stream."""

    m: int
    n0: int
    windows: int
    counts: np.ndarray
    freqs: np.ndarray
    max_dev: float

    def word(self, code: int) -> str:
        digits = []
        for _ in range(self.n0):
            digits.append(str(code % self.m))
            code //= self.m
        return "".join(reversed(digits))


def frequency_test(source: SeriesSource, m: int, n0: int, N: int) -> FrequencyResult:
    """Frequencies of all length-n0 words over sliding windows vs m^-n0.

    Counts every window i = 0..N-n0 of the first N symbols and reports the
    per-word frequency table and the maximum deviation from the uniform
    m^-n0, the normality diagnostic.
    """
    if not 1 <= n0 <= 4:
        raise UsageError("word length n0 must lie in [1, 4]")
    if m ** n0 > 10000:
        raise UsageError("word alphabet m^n0 must not exceed 1e4")
    if source.kind not in ("iid-digit", "digit-file"):
        raise UsageError("frequency test needs a base-m symbol source")
    if source.m != m:
        raise UsageError("source base %r does not match m=%d" % (source.m, m))
    if N < n0:
        raise DataError("need at least n0=%d symbols, got N=%d" % (n0, N))
    syms = source.symbols(0, N)
    windows = N - n0 + 1
    codes = np.zeros(windows, dtype=np.int64)
    for t in range(n0):
        codes = codes * m + syms[t : windows + t]
    counts = np.bincount(codes, minlength=m ** n0)
    freqs = counts / windows
    max_dev = float(np.max(np.abs(freqs - m ** (-float(n0)))))
    return FrequencyResult(m=m, n0=n0, windows=windows, counts=counts,
                           freqs=freqs, max_dev=max_dev)
