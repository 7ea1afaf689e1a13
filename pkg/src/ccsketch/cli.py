"""``ccsketch`` command-line tool.

Every command writes CSV to stdout or ``--out``.  Exit codes: 0 success,
2 bad arguments, 3 input error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import corpus, entropy, estimators, experiment, stable_dist, tail_bounds
from .errors import (
    ConfigurationError,
    CorpusFormatError,
    IncompatibleSketchError,
    ModelViolationError,
    RegimeError,
    StreamCorruptionError,
)
from .oracle import WORD_PROFILES, profile_vector
from .sketch import CCSketch, project_dense
from .stable_sampler import Skew, StableParams

SEED_ENV = "CCSKETCH_SEED"
EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3, 4


class InputError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return "" if v is None else str(v)


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _write_rows(args, header, rows):
    fh, close = _open_out(getattr(args, "out", None))
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
    finally:
        if close:
            fh.close()


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw, 0)
    except ValueError:
        raise ConfigurationError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _params(args, skew=Skew.MAXIMALLY_SKEWED) -> StableParams:
    if args.delta is not None:
        return StableParams.from_delta(args.delta, skew)
    if args.alpha is None:
        raise ConfigurationError("give --alpha or --delta")
    return StableParams(args.alpha, skew)


def _load_sketch(path) -> CCSketch:
    try:
        return CCSketch.load(path)
    except (OSError, ConfigurationError) as exc:
        raise InputError(f"cannot read sketch {path}: {exc}") from exc


def _read_vectors(path):
    try:
        return corpus.ingest_corpus(path)
    except OSError as exc:
        raise InputError(str(exc)) from exc


# -- commands -----------------------------------------------------------------


def cmd_sketch(args):
    skew = Skew(args.skew)
    params = _params(args, skew)
    if args.k < 1:
        raise ConfigurationError("--k must be positive")
    vectors = _read_vectors(args.input)
    if not 0 <= args.index < len(vectors):
        raise ConfigurationError(f"--index {args.index} out of range ({len(vectors)} vectors)")
    seed = args.seed if args.seed is not None else _default_seed()
    s = project_dense(vectors[args.index], args.k, params, seed)
    s.save(args.out)
    print(f"wrote {s!r} to {args.out}", file=sys.stderr)


def cmd_estimate(args):
    s = _load_sketch(args.sketch)
    rows = []
    for m in args.method:
        est = estimators.estimate(s, m)
        rows.append((m, est.value, est.log_value, est.theo_rel_var, ";".join(est.flags)))
    _write_rows(args, ("method", "estimate", "log_estimate", "theo_rel_var", "flags"), rows)


def cmd_entropy(args):
    s = _load_sketch(args.sketch)
    e = entropy.shannon_from_sketch(s, args.method, args.via, args.base)
    _write_rows(
        args,
        ("method", "via", "delta", "base", "entropy", "diagnostics"),
        [(e.estimator.value, e.via.value, e.delta, e.base, e.value, ";".join(e.diagnostics))],
    )


def cmd_tailbound(args):
    if args.grid:
        nus = args.nus or [1e-3, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.999]
        deltas = args.deltas or [1e-2, 1e-4, 1e-6]
        for v in nus:
            if not 0 < v < 1:
                raise ConfigurationError("--nus must lie in (0, 1)")
        rows = tail_bounds.g_curve(nus, deltas)
        _write_rows(args, ("nu", "delta", "g_right_over_delta_sq", "g_left_over_delta_sq"), rows)
        return
    if args.delta is None:
        raise ConfigurationError("--delta is required without --grid")
    if (args.eps is None) == (args.nu is None):
        raise ConfigurationError("give exactly one of --eps and --nu")
    eps = args.eps if args.eps is not None else args.nu * args.delta
    r = tail_bounds.solve_tail(args.tail, eps, args.delta)
    _write_rows(
        args,
        ("tail", "epsilon", "delta", "t_star", "exponent", "g_over_delta_sq", "method", "optimal"),
        [(r.tail.value, r.epsilon, r.delta, r.t_star, r.exponent, r.g_over_delta_sq, r.method, r.optimal)],
    )


def cmd_cdf(args):
    if not 0 < args.delta < 0.5:
        raise ConfigurationError("--delta must lie in (0, 0.5)")
    if not 0 < args.tmin < args.tmax or args.points < 2:
        raise ConfigurationError("need 0 < --tmin < --tmax and --points >= 2")
    ts = np.geomspace(args.tmin, args.tmax, args.points) if args.log else np.linspace(args.tmin, args.tmax, args.points)
    rows = [(float(t), stable_dist.cdf_exact(t, args.delta), float(stable_dist.cdf_approx(t, args.delta))) for t in ts]
    _write_rows(args, ("t", "cdf_exact", "cdf_approx"), rows)


def cmd_experiment(args):
    try:
        cfg = experiment.load_config(args.config)
    except OSError as exc:
        raise InputError(str(exc)) from exc
    if args.trials is not None:
        cfg["trials"] = args.trials
    rows = experiment.run_experiment(cfg)
    fh, close = _open_out(args.out)
    try:
        experiment.rows_to_csv(rows, fh)
    finally:
        if close:
            fh.close()


def cmd_choose_delta(args):
    d = entropy.choose_delta(args.D, args.m, args.nu, args.variant)
    _write_rows(args, ("D", "m", "nu", "variant", "delta"), [(args.D, args.m, args.nu, args.variant, d)])


def cmd_corpus(args):
    if args.generate:
        v = profile_vector(args.generate, d=args.d, seed=args.seed if args.seed is not None else _default_seed())
        fh, close = _open_out(args.out)
        try:
            fh.write(corpus.format_vector(v))
        finally:
            if close:
                fh.close()
        return
    if args.input is None:
        raise ConfigurationError("give --input or --generate")
    rows = []
    for v in _read_vectors(args.input):
        s = corpus.summarize(v)
        rows.append((s.name, s.d, s.nnz, s.sparsity, s.entropy_bits))
    _write_rows(args, ("name", "d", "nnz", "sparsity", "entropy_bits"), rows)


# -- parser -------------------------------------------------------------------


def _alpha_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--alpha", type=float, help="stability index in (0, 1)")
    g.add_argument("--delta", type=float, help="1 - alpha (preferred for tiny values)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ccsketch", description="Skewed stable-projection sketches.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sketch", help="sketch a vector file")
    p.add_argument("--k", type=int, required=True)
    _alpha_args(p)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                   help=f"64-bit seed (default ${SEED_ENV} or 0)")
    p.add_argument("--skew", choices=[s.value for s in Skew], default=Skew.MAXIMALLY_SKEWED.value)
    p.add_argument("--input", required=True)
    p.add_argument("--index", type=int, default=0, help="which vector in a multi-vector file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sketch)

    methods = [e.value for e in estimators.Estimator]
    p = sub.add_parser("estimate", help="estimate the frequency moment from a sketch")
    p.add_argument("--sketch", required=True)
    p.add_argument("--method", choices=methods, nargs="+", default=["new"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("entropy", help="Shannon entropy estimate from a sketch")
    p.add_argument("--sketch", required=True)
    p.add_argument("--via", choices=[v.value for v in entropy.Via], default="tsallis")
    p.add_argument("--method", choices=methods, default="new")
    p.add_argument("--base", type=float, default=2.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("tailbound", help="tail-bound constants")
    p.add_argument("--tail", choices=[t.value for t in tail_bounds.Tail], default="right")
    p.add_argument("--eps", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--grid", action="store_true", help="G/delta^2 table over --nus x --deltas")
    p.add_argument("--nus", type=float, nargs="+")
    p.add_argument("--deltas", type=float, nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tailbound)

    p = sub.add_parser("cdf", help="exact and approximate CDF table")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--tmin", type=float, default=0.1)
    p.add_argument("--tmax", type=float, default=10.0)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--log", action="store_true", help="geometric grid")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("experiment", help="Monte-Carlo sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=int, help="override the config's trial count")
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("choose-delta", help="delta required by earlier entropy algorithms")
    p.add_argument("--D", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--variant", choices=[v.value for v in entropy.DeltaRule], default="itw08")
    p.add_argument("--out")
    p.set_defaults(func=cmd_choose_delta)

    p = sub.add_parser("corpus", help="summarise or generate vector files")
    p.add_argument("--input")
    p.add_argument("--generate", choices=sorted(WORD_PROFILES), help="write a synthetic look-alike")
    p.add_argument("--d", type=int, default=16384)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_corpus)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (InputError, CorpusFormatError, ModelViolationError, StreamCorruptionError,
            IncompatibleSketchError) as exc:
        print(f"ccsketch: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConfigurationError, RegimeError) as exc:
        print(f"ccsketch: bad arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"ccsketch: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
