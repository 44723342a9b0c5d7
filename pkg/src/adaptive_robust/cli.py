"""Command-line entry point: ``adaptive-robust {attack,regression,distance,kde,selftest}``."""

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .rng import DEFAULT_SEED

SEED_ENV = "ADAPTIVE_ROBUST_SEED"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_SELFTEST = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunConfig:
    command: str
    seed: int
    output: Path = None
    options: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["options"][name]
        except KeyError:
            raise AttributeError(name) from None


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {s}")
    return v


def _fraction(s):
    v = float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {s}")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def build_parser():
    p = _Parser(
        prog="adaptive-robust",
        description="Sketches hardened against adaptive queries, and the attacks that break unprotected ones.",
        epilog=f"The environment variable {SEED_ENV}, when set, replaces the default seed {DEFAULT_SEED}; "
        "--seed and --config take precedence over it.",
    )
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, help="RNG seed")
    common.add_argument("--output", "-o", type=Path, help="CSV output path (default: <command>.csv)")
    common.add_argument("--config", type=Path, help="JSON file of option defaults; flags override it")
    common.add_argument("--threads", type=_positive_int, default=1, help="worker cap (computation is single-threaded)")

    a = sub.add_parser("attack", parents=[common], help="adaptive attack experiment")
    a.add_argument("--scenario", choices=("norm", "regression", "distance", "kde"), default="norm")
    a.add_argument("--queries", type=_nonneg_int, help="number of adaptive queries (scenario default if omitted)")
    a.add_argument("--full", action="store_true", help="reference configuration d=4096, m=250, r=200, k=5, Q=5000")
    a.add_argument("--d", type=_positive_int)
    a.add_argument("--m", type=_positive_int)
    a.add_argument("--r", type=_positive_int, help="replica count of the norm scenario")
    a.add_argument("--k", type=_positive_int, help="replicas per query in the norm scenario")
    a.add_argument("--eps-med", type=_positive_float, default=1.0, help="private-median epsilon")
    a.add_argument("--no-baselines", action="store_true")
    a.add_argument("--plot", type=Path, metavar="DIR", help="also write trajectory/histogram/runtime PNGs to DIR")

    r = sub.add_parser("regression", parents=[common], help="maintain the least-squares cost over an update stream")
    r.add_argument("--data", type=Path, help="design matrix A (.csv or binary)")
    r.add_argument("--labels", type=Path, help="initial label b1 (.csv column or binary n x 1)")
    r.add_argument("--updates", type=Path, help="JSON-lines update stream")
    r.add_argument("--eps", type=_fraction, default=0.25)
    r.add_argument("--mode", choices=("robust", "sketch", "exact"), default="robust")
    r.add_argument("--oracle", action="store_true", help="add the exact cost column")

    dd = sub.add_parser("distance", parents=[common], help="distance estimates from a stored point set")
    dd.add_argument("--data", type=Path, help="points X (.csv or binary)")
    dd.add_argument("--query-data", type=Path, help="query points; random queries if omitted")
    dd.add_argument("--queries", type=_positive_int, default=10, help="number of random queries")
    dd.add_argument("--eps", type=_fraction, default=0.3)
    dd.add_argument("--method", choices=("srht", "fastjl"), default="srht")
    dd.add_argument("--oracle", action="store_true", help="add the exact distance column")

    k = sub.add_parser("kde", parents=[common], help="kernel density estimates")
    k.add_argument("--data", type=Path, help="points X (.csv or binary)")
    k.add_argument("--query-data", type=Path, help="query points; random queries if omitted")
    k.add_argument("--queries", type=_positive_int, default=50)
    k.add_argument("--kernel", choices=("exp", "rational"), default="exp", help="kernel: exp|rational")
    k.add_argument("--kernel-scale", type=_positive_float, default=1.0, help="kernel scale C")
    k.add_argument("--eps", type=_fraction, default=0.3)
    k.add_argument("--tau", type=_positive_float, default=0.05)
    k.add_argument("--delta", type=_fraction, default=0.01)
    k.add_argument("--mode", choices=("sample", "robust", "net"), default="sample")
    k.add_argument("--oracle", action="store_true", help="add the exact density column")

    sub.add_parser("selftest", parents=[common], help="run the built-in property suite")
    return p


REQUIRED = {
    "regression": ("data", "labels", "updates"),
    "distance": ("data",),
    "kde": ("data",),
}


def _env_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def parse_config(argv):
    """Validate ``argv`` into a :class:`RunConfig`; raises :class:`UsageError`."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        raise UsageError(parser.format_usage().strip() + "\nadaptive-robust: error: a command is required")
    if ns.config is not None:
        try:
            cfg = json.loads(Path(ns.config).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError(f"config {ns.config} must hold a JSON object")
        subparser = parser._subparsers._group_actions[0].choices[ns.command]
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(k.replace("-", "_") for k in cfg) - known)
        if unknown:
            raise UsageError(f"config {ns.config}: unknown option(s) {', '.join(unknown)}")
        subparser.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        ns = parser.parse_args(argv)
    opts = vars(ns).copy()
    missing = [f"--{name.replace('_', '-')}" for name in REQUIRED.get(ns.command, ()) if opts.get(name) is None]
    if missing:
        raise UsageError(f"{ns.command}: missing required option(s): {' '.join(missing)}")
    seed = opts.pop("seed")
    seed = _env_seed() if seed is None else int(seed)
    output = opts.pop("output")
    command = opts.pop("command")
    if output is None and command != "selftest":
        output = Path(f"{command}.csv")
    for key in ("data", "labels", "updates", "query_data", "plot", "config"):
        if opts.get(key) is not None:
            opts[key] = Path(opts[key])
    return RunConfig(command, seed, Path(output) if output is not None else None, opts)


# -- commands --------------------------------------------------------------------


def _cmd_attack(cfg):
    from .attack import CSV_COLUMNS, AttackConfig, band_fraction, max_deviation, run_attack

    defaults = {"norm": 2000, "regression": 100, "distance": 200, "kde": 50}
    base = AttackConfig.full() if cfg.full else AttackConfig()
    over = {k: v for k, v in dict(d=cfg.d, m=cfg.m, r=cfg.r, k=cfg.k).items() if v is not None}
    q = cfg.queries if cfg.queries is not None else (base.num_queries if cfg.full else defaults[cfg.scenario])
    ac = replace(base, **over, num_queries=q, seed=cfg.seed, scenario=cfg.scenario, eps_med=cfg.eps_med, baselines=not cfg.no_baselines)
    records = run_attack(ac)
    _write(cfg, CSV_COLUMNS, (r.row() for r in records))
    if cfg.plot is not None:
        from .plotting import plot_attack

        plot_attack(records, cfg.plot, prefix=f"attack_{cfg.scenario}")
    lo, hi = (0.85, 1.15) if cfg.scenario == "norm" else (1 - ac.eps, 1 + ac.eps)
    return (
        f"naive max error {max_deviation(records, 'naive'):.4g}, "
        f"robust in-band fraction {band_fraction(records, 'robust', lo, hi):.4f}"
    )


def _read_labels(path, n):
    from .io import read_dataset

    b = read_dataset(path).ravel()
    if b.size != n:
        raise ValueError(f"{path}: expected {n} labels, found {b.size}")
    return b


def _cmd_regression(cfg):
    from .io import read_dataset, read_updates
    from .regression import ExactMaintainer, RobustRegression, reg_init

    A = read_dataset(cfg.data)
    b = _read_labels(cfg.labels, A.shape[0])
    updates = read_updates(cfg.updates, n=A.shape[0])
    K = max((len(u) for u in updates), default=1) or 1
    oracle = ExactMaintainer(A, b) if cfg.oracle else None
    if cfg.mode == "robust":
        tracker = RobustRegression(A, b, cfg.eps, K, seed=cfg.seed)
        step = tracker.step
    elif cfg.mode == "sketch":
        step = reg_init(A, b, cfg.eps, None, cfg.seed).update
    else:
        step = ExactMaintainer(A, b).update
    rows, errs = [], []
    for i, upd in enumerate(updates, 1):
        est = float(step(upd))
        exact = oracle.update(upd) if oracle else None
        if exact is not None and exact > 0:
            errs.append(abs(est / exact - 1))
        rows.append([i, est, exact])
    _write(cfg, ("round", "estimate", "exact"), rows)
    return _err_summary(errs, cfg.eps, len(rows))


def _err_summary(errs, eps, count):
    if not errs:
        return f"{count} rows"
    errs = np.asarray(errs)
    return f"{count} rows, max relative error {errs.max():.4g}, within (1±{eps:g}) {np.mean(errs <= eps):.4f}"


def _queries(cfg, X, default_scale):
    from .io import read_dataset
    from .rng import substream

    if cfg.query_data is not None:
        Y = read_dataset(cfg.query_data)
        if Y.shape[1] != X.shape[1]:
            raise ValueError(f"{cfg.query_data}: query dimension {Y.shape[1]} != data dimension {X.shape[1]}")
        return Y
    rng = substream(cfg.seed, 99)
    return X.mean(axis=0) + default_scale * rng.standard_normal((cfg.queries, X.shape[1]))


def _cmd_distance(cfg):
    from .distance import ade_build, ade_srht_build
    from .io import read_dataset

    X = read_dataset(cfg.data)
    Y = _queries(cfg, X, float(X.std()) or 1.0)
    rows, errs = [], []
    if cfg.method == "srht":
        ds = ade_srht_build(X, len(Y), cfg.eps, cfg.seed)
        answers = [ds.query(y) for y in Y]
    else:
        ds = ade_build(X, len(Y) * X.shape[0], cfg.eps, cfg.seed)
        answers = [np.array([ds.query(y, i) for i in range(X.shape[0])]) for y in Y]
    for qi, (y, est) in enumerate(zip(Y, answers)):
        exact = np.linalg.norm(X - y, axis=1) if cfg.oracle else None
        for i in range(X.shape[0]):
            ex = float(exact[i]) if exact is not None else None
            if ex:
                errs.append(abs(est[i] / ex - 1))
            rows.append([qi, i, float(est[i]), ex])
    _write(cfg, ("query_index", "point_index", "estimate", "exact"), rows)
    return _err_summary(errs, cfg.eps, len(rows))


def _cmd_kde(cfg):
    from .io import read_dataset
    from .kde import Kernel, KdeQueryResult, kde_build, kde_exact, kde_net_build, robust_kde_build

    X = read_dataset(cfg.data)
    kern = Kernel(cfg.kernel, cfg.kernel_scale)
    Y = _queries(cfg, X, 1.0)
    if cfg.mode == "sample":
        answer = kde_build(X, cfg.eps, cfg.tau, cfg.delta, kern, cfg.seed).query
    elif cfg.mode == "net":
        answer = kde_net_build(X, cfg.eps, cfg.tau, kern, seed=cfg.seed).query
    else:
        w = robust_kde_build(X, len(Y), cfg.eps, cfg.tau, cfg.seed, kern)

        def answer(q):
            v = w.query(q)
            return KdeQueryResult(v, v >= cfg.tau * (1 - cfg.eps))

    rows, errs = [], []
    for qi, y in enumerate(Y):
        res = answer(y)
        exact = kde_exact(X, y, kern) if cfg.oracle else None
        if exact is not None and exact >= cfg.tau:
            errs.append(abs(res.value / exact - 1))
        rows.append([qi, float(res.value), int(bool(res.promise_met)), exact])
    _write(cfg, ("query_index", "estimate", "promise_met", "exact"), rows)
    return _err_summary(errs, cfg.eps, len(rows))


def _write(cfg, header, rows):
    from .io import write_csv_atomic

    write_csv_atomic(cfg.output, header, rows)


def run(cfg, stream=None):
    """Dispatch ``cfg``; print a one-line summary; return the exit status."""
    stream = sys.stdout if stream is None else stream
    t0 = time.perf_counter()
    if cfg.command == "selftest":
        from .selftest import run_selftest

        ok = run_selftest(stream, seed=cfg.seed)
        return EXIT_OK if ok else EXIT_SELFTEST
    handler = {"attack": _cmd_attack, "regression": _cmd_regression, "distance": _cmd_distance, "kde": _cmd_kde}
    try:
        summary = handler[cfg.command](cfg)
    except OSError as exc:
        name = exc.filename if exc.filename is not None else cfg.output
        print(f"error: {name}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{cfg.command}: {summary}, wall {time.perf_counter() - t0:.2f}s -> {cfg.output}", file=stream)
    return EXIT_OK


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
