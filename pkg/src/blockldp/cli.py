"""Command-line surface over sources, analysis, conjugation and experiments.

Exit codes: 0 success, 2 usage errors, 3 domain/data/numerical errors,
4 I/O errors.  Every file-writing run places a JSON manifest next to its
outputs recording all flag values and seeds; outputs are byte-identical
across runs with equal manifests.  Relative --out paths resolve against the
BLOCKLDP_OUT environment variable when it is set.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from ._errors import DataError, NumericalError, UsageError
from ._serialize import (file_checksum, fmt_cell, make_grid, read_csv_columns,
                         write_csv)
from .blockstats import (BlockStats, SampledFunction, ball_mass, block_means,
                         local_rate, scgf_values)
from .convex import find_level_points, grad_estimate, legendre, solve_slope
from .experiments import (ExperimentConfig, RunManifest, brownian_experiment,
                          fig1_pipeline, frequency_test)
from .models import (bernoulli_model, digit_indicator_model, exact_prefix_scgf,
                     gaussian_model, markov_model)
from .regimes import Schedule, classify, envelope, predict_empty
from .sources import (MarkovSpec, bernoulli_source, digit_source, file_source,
                      gaussian_increment, gaussian_source, markov_path,
                      markov_source, next_digit, read_digit_file)


def _resolve_out(path):
    """Resolve a relative output path against BLOCKLDP_OUT when set."""
    if path is None:
        return None
    path = str(path)
    if not os.path.isabs(path):
        base = os.environ.get("BLOCKLDP_OUT")
        if base:
            return os.path.join(base, path)
    return path


def _load_markov_file(path) -> MarkovSpec:
    """Parse and validate a Markov spec file {"P": ..., "phi": ..., "pi"?}."""
    if path is None:
        raise UsageError("a Markov model needs --markov-file")
    with open(path, "r") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError("Markov spec %s is not valid JSON: %s" % (path, exc))
    if not isinstance(doc, dict):
        raise UsageError("Markov spec %s must be a JSON object" % path)
    unknown = sorted(set(doc) - {"P", "phi", "pi"})
    if unknown:
        raise UsageError("unknown Markov spec keys: %s" % ", ".join(unknown))
    if "P" not in doc or "phi" not in doc:
        raise UsageError("Markov spec %s needs both P and phi" % path)
    try:
        P = np.asarray(doc["P"], dtype=np.float64)
        phi = np.asarray(doc["phi"], dtype=np.float64)
        pi = None if doc.get("pi") is None else np.asarray(doc["pi"], dtype=np.float64)
    except (TypeError, ValueError):
        raise UsageError("Markov spec %s entries must be rectangular and numeric" % path)
    return MarkovSpec(P=P, phi=phi, pi=pi).validate()


def _parse_model(text):
    """Model specifier: digit:m:a, bernoulli:p, gaussian:d or markov:path."""
    parts = str(text).split(":")
    try:
        if parts[0] == "digit" and len(parts) == 3:
            return digit_indicator_model(int(parts[1]), int(parts[2]))
        if parts[0] == "bernoulli" and len(parts) == 2:
            return bernoulli_model(float(parts[1]))
        if parts[0] == "gaussian" and len(parts) == 2:
            return gaussian_model(int(parts[1]))
        if parts[0] == "markov" and len(parts) >= 2:
            # Paths may contain ':'; only the first separator is structural.
            return markov_model(_load_markov_file(":".join(parts[1:])))
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError("bad model specifier %r: %s" % (text, exc))
    raise UsageError(
        "bad model specifier %r (expected digit:m:a, bernoulli:p, "
        "gaussian:d or markov:path)" % (text,))


def _parse_grid(text) -> np.ndarray:
    """Grid flag: either lo:hi:step or a comma-separated value list."""
    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError("grid %r must be lo:hi:step or v1,v2,..." % text)
        try:
            lo, hi, step = (float(p) for p in parts)
        except ValueError:
            raise UsageError("grid %r has non-numeric bounds" % text)
        return make_grid(lo, hi, step)
    try:
        vals = [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise UsageError("grid %r has non-numeric values" % text)
    if not vals:
        raise UsageError("grid %r is empty" % text)
    return np.asarray(vals, dtype=np.float64)


def _parse_ball(text, d: int):
    """--ball flag: d center coordinates then the radius, comma-separated."""
    try:
        vals = [float(p) for p in str(text).split(",")]
    except ValueError:
        raise UsageError("--ball %r must be numeric x1,...,xd,eps" % text)
    if len(vals) != d + 1:
        raise UsageError("--ball needs %d center coordinates plus a radius" % d)
    eps = vals[-1]
    if not eps > 0:
        raise UsageError("ball radius must be > 0")
    return np.asarray(vals[:-1], dtype=np.float64), eps


def _build_source(args):
    """Source from --in or --kind flags; returns (source, checksums, seeds)."""
    infile = getattr(args, "infile", None)
    if infile:
        src = file_source(infile, args.m, indicator_a=getattr(args, "a", None))
        return src, {os.path.basename(infile): file_checksum(infile)}, []
    kind = getattr(args, "kind", None)
    if kind is None:
        raise UsageError("provide --in FILE or --kind")
    seed = int(args.seed)
    if kind == "iid-digit":
        return digit_source(seed, args.m, indicator_a=getattr(args, "a", None)), {}, [seed]
    if kind == "iid-bernoulli":
        return bernoulli_source(seed, args.p), {}, [seed]
    if kind == "gaussian":
        return gaussian_source(seed, args.d), {}, [seed]
    return markov_source(_load_markov_file(args.markov_file), seed), {}, [seed]


def _flags_dict(args) -> dict:
    doc = {}
    for key, val in vars(args).items():
        if key in ("func", "command"):
            continue
        doc[key] = val
    return doc


def _finish_manifest(command, args, anchor, files, started, checksums=None,
                     seeds=None) -> str:
    """Write <anchor>.manifest.json recording all flags, seeds and outputs."""
    manifest = RunManifest(command=command, config=_flags_dict(args),
                           seeds=list(seeds or []), files=list(files),
                           wallclock_s=round(time.time() - started, 3),
                           input_checksums=dict(checksums or {}))
    return manifest.write(anchor + ".manifest.json")


def _json_safe(obj):
    """Recursively convert to JSON-clean types; non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def cmd_gen(args) -> int:
    started = time.time()
    out = _resolve_out(args.out)
    count = int(args.count)
    if count < 1:
        raise UsageError("count must be >= 1")
    seed = int(args.seed)
    if args.kind == "iid-digit":
        sym = digit_source(seed, args.m).symbols(0, count)
        lines = [str(int(v)) for v in sym]
    elif args.kind == "iid-bernoulli":
        obs = bernoulli_source(seed, args.p).batch(0, count)
        lines = [str(int(v)) for v in obs[:, 0]]
    elif args.kind == "gaussian":
        obs = gaussian_source(seed, args.d).batch(0, count)
        lines = [" ".join(fmt_cell(v) for v in row) for row in obs]
    else:
        spec = _load_markov_file(args.markov_file)
        obs = markov_path(spec, seed, count).reshape(count, -1)
        lines = [" ".join(fmt_cell(v) for v in row) for row in obs]
    with open(out, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    _finish_manifest("gen", args, out, [out], started, seeds=[seed])
    print("wrote %d lines to %s" % (count, out))
    return 0


def cmd_analyze(args) -> int:
    started = time.time()
    out = _resolve_out(args.out)
    if (args.k is None) == (args.c is None):
        raise UsageError("exactly one of --k and --c is required")
    n = int(args.n)
    if n < 1:
        raise UsageError("n must be >= 1")
    k = int(args.k) if args.k is not None else Schedule(float(args.c)).k(n)
    src, checksums, seeds = _build_source(args)
    lam = _parse_grid(args.lambda_grid)
    stats = block_means(src, n, k)
    values = scgf_values(stats, lam)
    files = [write_csv(out, ["lambda", "value"], zip(lam, values))]
    if args.ball is not None:
        center, eps = _parse_ball(args.ball, stats.d)
        _, mass = ball_mass(stats, center, eps)
        root, ext = os.path.splitext(out)
        xcell = center[0] if stats.d == 1 else ";".join(fmt_cell(v) for v in center)
        files.append(write_csv(root + "_ball" + (ext or ".csv"),
                               ["x", "mass"], [(xcell, mass)]))
    _finish_manifest("analyze", args, out, files, started, checksums, seeds)
    print("wrote %s (n=%d, k=%d, %d tilt points)" % (out, n, k, lam.size))
    return 0


def cmd_legendre(args) -> int:
    started = time.time()
    out = _resolve_out(args.out)
    cols = read_csv_columns(args.infile, ["lambda", "value"])
    grid = cols["lambda"]
    if grid.size >= 2 and not np.all(np.diff(grid) > 0):
        raise DataError("input lambda column must be strictly increasing")
    f = SampledFunction(grid=grid, values=cols["value"],
                        meta={"origin": os.path.basename(args.infile)})
    res = legendre(f, _parse_grid(args.x_grid))
    files = [write_csv(out, ["x", "value", "argmax_lambda", "boundary"],
                       zip(res.xs, res.values, res.argmax, res.boundary))]
    checksums = {os.path.basename(args.infile): file_checksum(args.infile)}
    _finish_manifest("legendre", args, out, files, started, checksums)
    print("wrote %s (%d conjugate points)" % (out, res.xs.size))
    return 0


def cmd_regime(args) -> int:
    model = _parse_model(args.model)
    if model.d != 1:
        raise UsageError("regime reports need a scalar (d=1) model")
    lambda0 = float(args.lambda0)
    x0 = float(model.grad(lambda0))
    threshold = lambda0 * x0 - float(model.lam(lambda0))
    c = threshold if args.c is None else float(args.c)
    report = classify(model, lambda0, c)
    # The level points lambda1 < lambda2 solve lambda L'(lambda) - L(lambda)
    # = threshold; they bracket the tilts, their slopes x1 < x2 the means.
    if threshold > 1e-12:
        lam1, lam2 = find_level_points(model, threshold)
        x1, x2 = float(model.grad(lam1)), float(model.grad(lam2))
    else:
        lam1 = lam2 = 0.0
        x1 = x2 = x0
    doc = {"model": model.name, "regime": report.regime,
           "lambda0": report.lambda0, "x0": report.x0,
           "threshold": report.threshold, "c": report.c,
           "lambda1": lam1, "lambda2": lam2, "x1": x1, "x2": x2,
           "prediction": report.prediction}
    print(json.dumps(_json_safe(doc), indent=2, sort_keys=True))
    return 0


def cmd_fig1(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    cfg.out_dir = _resolve_out(cfg.out_dir)
    res = fig1_pipeline(cfg)
    print("fig1: c=%.9f, %d runs, %d files, manifest %s"
          % (res.c, len(res.runs), len(res.files), res.manifest_path))
    return 0


def cmd_brownian(args) -> int:
    started = time.time()
    cfg = ExperimentConfig.from_json(args.config)
    cfg.out_dir = _resolve_out(cfg.out_dir)
    for name in ("c", "eps", "R"):
        if getattr(cfg, name) is None:
            raise UsageError("brownian config needs %r" % name)
    if not cfg.x_list:
        raise UsageError("brownian config needs a nonempty x_list")
    schedule = Schedule(cfg.c, cfg.gamma, cfg.gamma_prime)
    for n in cfg.n_list:
        need = n * schedule.k(n)
        if need > cfg.budget:
            raise UsageError("budget violation: n=%d needs n*k=%d > %g observations"
                             % (n, need, cfg.budget))
    res = brownian_experiment(cfg.d, cfg.R, schedule, cfg.n_list, cfg.x_list,
                              cfg.eps, cfg.seeds)
    os.makedirs(cfg.out_dir, exist_ok=True)
    out = os.path.join(cfg.out_dir, "brownian.csv")
    files = [write_csv(out, res.columns, res.rows)]
    manifest = RunManifest(command="brownian", config=cfg.to_dict(),
                           seeds=list(cfg.seeds), files=files,
                           wallclock_s=round(time.time() - started, 3))
    manifest.write(os.path.join(cfg.out_dir, "manifest.json"))
    print("wrote %s (%d rows)" % (out, len(res.rows)))
    return 0


def _count_symbols(path, m: int) -> int:
    # A request larger than the byte count must hit EOF, whose error reports
    # the total number of symbols in the file.
    try:
        read_digit_file(path, m, 0, os.path.getsize(path) + 1)
    except DataError as exc:
        avail = getattr(exc, "symbols_available", None)
        if avail is None:
            raise
        return int(avail)
    raise DataError("could not determine the symbol count of %s" % path)


def cmd_freq(args) -> int:
    started = time.time()
    src = file_source(args.infile, args.m)
    checksums = {os.path.basename(args.infile): file_checksum(args.infile)}
    N = int(args.count) if args.count is not None else _count_symbols(args.infile, args.m)
    res = frequency_test(src, args.m, args.n0, N)
    if args.out is not None:
        out = _resolve_out(args.out)
        rows = [(res.word(i), int(res.counts[i]), float(res.freqs[i]))
                for i in range(res.counts.size)]
        files = [write_csv(out, ["word", "count", "freq"], rows)]
        _finish_manifest("freq", args, out, files, started, checksums)
    doc = {"m": res.m, "n0": res.n0, "N": N, "windows": res.windows,
           "uniform": args.m ** (-float(args.n0)), "max_dev": res.max_dev}
    print(json.dumps(_json_safe(doc), indent=2, sort_keys=True))
    return 0


def _expect(cond, msg="condition failed"):
    if not cond:
        raise AssertionError(msg)


def _sym_chain() -> MarkovSpec:
    return MarkovSpec(P=np.array([[0.9, 0.1], [0.1, 0.9]]),
                      phi=np.array([0.0, 1.0]))


def _const_chain(value: float) -> MarkovSpec:
    return MarkovSpec(P=np.array([[1.0]]), phi=np.array([value]))


def cmd_selftest(args) -> int:
    """Run the basic-example suite; exit 3 on any failure."""
    failures = 0

    def run(desc, fn):
        nonlocal failures
        try:
            fn()
        except Exception as exc:
            failures += 1
            print("FAIL - %s: %s" % (desc, exc))
        else:
            print("ok - %s" % desc)

    def t_digit():
        d = next_digit(1, 0, 10)
        _expect(d == next_digit(1, 0, 10) and 0 <= d < 10)
        for i in range(16):
            _expect(next_digit(7, i, 2) in (0, 1))

    def t_gaussian_repeat():
        _expect(np.array_equal(gaussian_increment(3, 5, 2),
                               gaussian_increment(3, 5, 2)))

    def t_markov_reject():
        try:
            MarkovSpec(P=np.eye(2), phi=np.array([0.0, 1.0])).validate()
        except UsageError:
            return
        raise AssertionError("absorbing chain accepted")

    def t_markov_mean():
        obs = markov_path(_sym_chain(), 11, 100000)
        _expect(abs(float(np.mean(obs)) - 0.5) <= 0.01,
                "long-run mean %.4f off 0.5" % float(np.mean(obs)))

    def t_markov_const():
        _expect(np.all(markov_path(_const_chain(2.5), 1, 10) == 2.5))

    def t_file_decode():
        with tempfile.TemporaryDirectory() as tmp:
            p = os.path.join(tmp, "d.txt")
            with open(p, "w", newline="") as fh:
                fh.write("3.14159")
            _expect(np.array_equal(read_digit_file(p, 10, 0, 3), [3, 1, 4]))
            with open(p, "w", newline="") as fh:
                fh.write("1 0\n1")
            _expect(np.array_equal(read_digit_file(p, 2, 1, 2), [0, 1]))
            with open(p, "w", newline="") as fh:
                fh.write("12a4")
            try:
                read_digit_file(p, 10, 0, 3)
            except DataError as exc:
                _expect("offset 2" in str(exc), str(exc))
                return
            raise AssertionError("bad byte accepted")

    def t_block_means():
        with tempfile.TemporaryDirectory() as tmp:
            p = os.path.join(tmp, "d.txt")
            with open(p, "w", newline="") as fh:
                fh.write("1234")
            stats = block_means(file_source(p, 10), 2, 2)
            _expect(np.array_equal(stats.means[:, 0], [1.5, 3.5]))
        stats = block_means(markov_source(_const_chain(2.5), 1), 4, 3)
        _expect(np.all(stats.means == 2.5))

    def t_scgf_basics():
        stats = block_means(markov_source(_const_chain(2.5), 1), 4, 3)
        vals = scgf_values(stats, np.array([0.0, 0.3]))
        _expect(vals[0] == 0.0, "value at 0 is %r" % vals[0])
        _expect(abs(vals[1] - 0.75) <= 1e-12)

    def t_ball():
        stats = BlockStats(n=1, k=3, d=1,
                           means=np.array([[0.1], [0.2], [0.3]]))
        count, mass = ball_mass(stats, 0.2, 0.05)
        _expect(count == 1 and abs(mass - 1.0 / 3.0) <= 1e-15)
        count, mass = ball_mass(stats, 0.2, 10.0)
        _expect(count == 3 and mass == 1.0)
        _expect(local_rate(stats, 0.2, 10.0) == 0.0)
        _expect(local_rate(stats, 9.0, 0.1) == np.inf)

    def t_bernoulli_model():
        mdl = bernoulli_model(0.5)
        _expect(abs(mdl.conj(1.0) - math.log(2.0)) <= 1e-12)
        _expect(abs(mdl.grad(0.0) - 0.5) <= 1e-12)

    def t_gaussian_model():
        mdl = gaussian_model(1)
        _expect(mdl.conj(0.0) == 0.0)
        for v in (-1.3, 0.4, 2.0):
            _expect(abs(mdl.lam(v) - mdl.conj(v)) <= 1e-15)
        _expect(gaussian_model(2).lam(np.array([3.0, 4.0])) == 12.5)

    def t_markov_model():
        mdl = markov_model(_sym_chain())
        _expect(mdl.lam(0.0) == 0.0, "Markov SCGF at 0 not exactly 0")
        _expect(abs(mdl.grad(0.0) - 0.5) <= 1e-6)

    def t_prefix_scgf():
        _expect(exact_prefix_scgf(_sym_chain(), 0.0, 6) == 0.0)
        _expect(abs(exact_prefix_scgf(_const_chain(2.5), 0.4, 5) - 1.0) <= 1e-12)

    def t_legendre_quadratic():
        grid = make_grid(-3.0, 3.0, 0.005)
        f = SampledFunction(grid=grid, values=0.5 * grid * grid)
        res = legendre(f, np.array([1.0, 5.0]))
        _expect(abs(res.values[0] - 0.5) <= 1.5e-5)
        _expect(not res.boundary[0] and res.boundary[1])

    def t_grad_estimate():
        grid = make_grid(-2.0, 2.0, 0.01)
        g = grad_estimate(SampledFunction(grid=grid, values=2.0 * grid))
        _expect(float(np.max(np.abs(g.values - 2.0))) <= 1e-12)
        g = grad_estimate(SampledFunction(grid=grid, values=0.5 * grid * grid))
        _expect(float(np.max(np.abs(g.values[1:-1] - grid[1:-1]))) <= 1e-12)

    def t_solve_slope():
        _expect(abs(solve_slope(bernoulli_model(0.3), 0.3)) <= 1e-9)
        _expect(abs(solve_slope(gaussian_model(1), 0.37) - 0.37) <= 1e-9)

    def t_level_points():
        lam1, lam2 = find_level_points(gaussian_model(1), 0.125)
        _expect(abs(lam1 + 0.5) <= 1e-7 and abs(lam2 - 0.5) <= 1e-7)

    def t_envelope():
        res = envelope(gaussian_model(1), (-1.0, 1.0), 0.5, 9.0, 9.0, 100)
        _expect(abs(res.xi1 - 1.0) <= 1e-12)
        _expect(abs(res.xi2 - 1.125) <= 1e-12)
        _expect(res.valid is False)

    def t_predict_guard():
        try:
            predict_empty(gaussian_model(1), 0.5, 1.0, 0.1)
        except UsageError:
            return
        raise AssertionError("supercritical schedule accepted by predict_empty")

    def t_freq_edges():
        with tempfile.TemporaryDirectory() as tmp:
            p = os.path.join(tmp, "c.txt")
            with open(p, "w", newline="") as fh:
                fh.write("7" * 50)
            res = frequency_test(file_source(p, 10), 10, 1, 50)
            _expect(res.freqs[7] == 1.0 and int(res.counts.sum()) == res.windows)
            res = frequency_test(file_source(p, 10), 10, 2, 2)
            _expect(res.windows == 1 and res.freqs[77] == 1.0)

    def t_brownian_center():
        res = brownian_experiment(1, 1.0, Schedule(1.0), [5], [0.0, 0.5],
                                  0.2, [1])
        by_x = {row[2]: row[5] for row in res.rows}
        _expect(by_x[0.0] >= by_x[0.5],
                "mass at 0 (%.3f) below mass at 0.5 (%.3f)"
                % (by_x[0.0], by_x[0.5]))

    def t_cli_gen():
        with tempfile.TemporaryDirectory() as tmp:
            p1 = os.path.join(tmp, "a.txt")
            p2 = os.path.join(tmp, "b.txt")
            base = ["gen", "--kind", "iid-digit", "--m", "10", "--seed", "1",
                    "--count", "5"]
            _expect(main(base + ["--out", p1]) == 0)
            _expect(main(base + ["--out", p2]) == 0)
            with open(p1, "rb") as fh:
                b1 = fh.read()
            with open(p2, "rb") as fh:
                b2 = fh.read()
            _expect(b1 == b2 and b1.count(b"\n") == 5)
            bad = os.path.join(tmp, "bad.json")
            with open(bad, "w") as fh:
                json.dump({"P": [[0.5, 0.4], [0.1, 0.9]], "phi": [0.0, 1.0]}, fh)
            code = main(["gen", "--kind", "markov", "--markov-file", bad,
                         "--count", "3", "--out", os.path.join(tmp, "m.txt")])
            _expect(code == 2, "bad Markov rows gave exit %d" % code)

    def t_cli_analyze():
        with tempfile.TemporaryDirectory() as tmp:
            data = os.path.join(tmp, "d.txt")
            with open(data, "w", newline="") as fh:
                fh.write("100000000020000000003000000000")
            out = os.path.join(tmp, "scgf.csv")
            code = main(["analyze", "--in", data, "--m", "10", "--n", "10",
                         "--k", "3", "--lambda-grid", "0,0.5",
                         "--ball", "0.2,0.05", "--out", out])
            _expect(code == 0, "analyze exit %d" % code)
            cols = read_csv_columns(out, ["lambda", "value"])
            _expect(cols["value"][0] == 0.0)
            ball = read_csv_columns(os.path.join(tmp, "scgf_ball.csv"),
                                    ["x", "mass"])
            _expect(abs(ball["mass"][0] - 1.0 / 3.0) <= 1e-15)

    run("digit generator deterministic and in range", t_digit)
    run("gaussian increment identical on repeat", t_gaussian_repeat)
    run("absorbing Markov chain rejected", t_markov_reject)
    run("symmetric chain long-run mean near 1/2", t_markov_mean)
    run("one-state chain yields a constant sequence", t_markov_const)
    run("digit file decoding, skipping and rejection", t_file_decode)
    run("block means by direct arithmetic", t_block_means)
    run("empirical SCGF zero at 0 and linear on constants", t_scgf_basics)
    run("ball mass and local rate enumeration", t_ball)
    run("Bernoulli(1/2) conjugate endpoint and mean", t_bernoulli_model)
    run("gaussian self-duality and arithmetic", t_gaussian_model)
    run("Markov SCGF zero at 0 and symmetric slope", t_markov_model)
    run("finite-n Markov SCGF degenerate cases", t_prefix_scgf)
    run("sampled conjugate of the quadratic", t_legendre_quadratic)
    run("derivative estimates exact on low-degree data", t_grad_estimate)
    run("slope inversion at the mean and the identity", t_solve_slope)
    run("level points of the quadratic rate", t_level_points)
    run("envelope suprema and validity flag", t_envelope)
    run("predict_empty rejects supercritical schedules", t_predict_guard)
    run("frequency edge cases", t_freq_edges)
    run("gaussian ball mass largest at the origin", t_brownian_center)
    run("cli gen determinism and Markov validation", t_cli_gen)
    run("cli analyze zero point and ball companion", t_cli_analyze)

    if failures:
        print("%d selftest failure(s)" % failures)
        return 3
    print("all selftests passed")
    return 0


def _add_source_flags(p, with_indicator: bool) -> None:
    p.add_argument("--in", dest="infile", metavar="FILE",
                   help="digit file input (alternative to --kind)")
    p.add_argument("--kind", choices=("iid-digit", "iid-bernoulli",
                                      "gaussian", "markov"),
                   help="generated source kind")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--m", type=int, default=10, help="digit base (2..10)")
    if with_indicator:
        p.add_argument("--a", type=int, default=None,
                       help="track the 0/1 indicator of this symbol "
                            "instead of raw symbol values")
    p.add_argument("--p", type=float, default=0.5, help="Bernoulli parameter")
    p.add_argument("--d", type=int, default=1, help="gaussian dimension")
    p.add_argument("--markov-file", dest="markov_file", metavar="FILE",
                   help="JSON Markov spec {\"P\": ..., \"phi\": ..., \"pi\"?}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockldp",
        description="Block empirical measures, empirical SCGFs and "
                    "schedule-regime diagnostics.")
    parser.add_argument("--version", action="version",
                        version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen", help="write a generated observation file")
    p.add_argument("--kind", required=True,
                   choices=("iid-digit", "iid-bernoulli", "gaussian", "markov"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--markov-file", dest="markov_file", metavar="FILE")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("analyze",
                       help="empirical SCGF (and ball mass) of a block sample")
    _add_source_flags(p, with_indicator=True)
    p.add_argument("--n", type=int, required=True, help="block length")
    p.add_argument("--k", type=int, default=None, help="block count")
    p.add_argument("--c", type=float, default=None,
                   help="schedule exponent; k = ceil(e^(c n))")
    p.add_argument("--lambda-grid", dest="lambda_grid", default="-6:6:0.01",
                   help="lo:hi:step or comma-separated tilt values")
    p.add_argument("--ball", default=None, metavar="X,EPS",
                   help="also report the mass of the closed ball B(x, eps)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("legendre",
                       help="convex conjugate of a sampled lambda,value CSV")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    p.add_argument("--x-grid", dest="x_grid", default="0.001:0.999:0.001",
                   help="lo:hi:step or comma-separated slope values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_legendre)

    p = sub.add_parser("regime",
                       help="JSON regime report with level points")
    p.add_argument("--model", required=True,
                   help="digit:m:a, bernoulli:p, gaussian:d or markov:path")
    p.add_argument("--lambda0", type=float, required=True)
    p.add_argument("--c", type=float, default=None,
                   help="schedule exponent; defaults to the critical threshold")
    p.set_defaults(func=cmd_regime)

    p = sub.add_parser("fig1", help="digit-experiment pipeline from a config")
    p.add_argument("--config", required=True, metavar="FILE")
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("brownian",
                       help="gaussian ball-mass experiment from a config")
    p.add_argument("--config", required=True, metavar="FILE")
    p.set_defaults(func=cmd_brownian)

    p = sub.add_parser("freq", help="word-frequency table of a digit file")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--n0", type=int, default=1, help="word length (1..4)")
    p.add_argument("--count", type=int, default=None,
                   help="number of symbols to use (default: whole file)")
    p.add_argument("--out", default=None,
                   help="optional word,count,freq CSV")
    p.set_defaults(func=cmd_freq)

    p = sub.add_parser("selftest", help="run the built-in example suite")
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        return args.func(args)
    except UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print("error: invalid JSON input: %s" % exc, file=sys.stderr)
        return 2
    except (DataError, NumericalError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
