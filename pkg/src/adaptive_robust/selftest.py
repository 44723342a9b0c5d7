"""Quick built-in property suite behind ``adaptive-robust selftest``.

Each suite is small enough to finish in a few seconds; the full test suite
lives in ``tests/``.
"""

import math
import sys
import tempfile
from pathlib import Path

import numpy as np

from .rng import DEFAULT_SEED, substream


def _transforms(rng):
    from .transforms import GaussianJlMap, SrhtStack, FastJlMap, fwht, quantile

    for p in (1, 4, 10, 14):
        v = rng.choice(np.array([-1, 1]), size=2**p)
        if not np.array_equal(fwht(fwht(v)), 2**p * v):
            return False, f"fwht involution failed at d=2^{p}"
    x, y = rng.standard_normal((2, 100))
    for mp in (GaussianJlMap.create(16, 100, 1), FastJlMap.create(16, 100, 1), SrhtStack.create(3, 100, 1)):
        if not np.allclose(mp.apply(2 * x - 3 * y), 2 * mp.apply(x) - 3 * mp.apply(y), atol=1e-9):
            return False, f"{type(mp).__name__} is not linear"
    if quantile([1, 2, 3, 4], 0.5) != 2:
        return False, "quantile convention"
    return True, "fwht exact to 2^14, maps linear"


def _leverage(rng):
    from .leverage import build_sampler, compute_leverage_scores

    A = rng.standard_normal((50, 5))
    tau = compute_leverage_scores(A).tau
    if abs(tau.sum() - 5) > 1e-9:
        return False, f"leverage scores sum to {tau.sum()}"
    draws = build_sampler([1.0, 2.0, 3.0]).sample(rng, 30000)
    freq = np.bincount(draws, minlength=3) / draws.size
    if np.max(np.abs(freq - np.array([1, 2, 3]) / 6)) > 0.02:
        return False, f"sampler frequencies {freq}"
    return True, "sum of scores = rank, sampler frequencies"


def _dp(rng):
    from .dp import OutputGrid, advanced_composition, median_distribution, subsampling_amplification

    if advanced_composition(100, 0.1, 0.0, math.exp(-2)).epsilon != 4.0:
        return False, "advanced composition"
    if subsampling_amplification(1.0, 0.0, 100, 1200).epsilon != 0.5:
        return False, "amplification"
    p = median_distribution(rng.uniform(1, 2, 200), OutputGrid.geometric(0.1, 10, 1.01), 1.0)
    if abs(p.sum() - 1) > 1e-12:
        return False, "median distribution does not sum to 1"
    return True, "composition formulas, mechanism normalization"


def _regression(rng):
    from .regression import SparseUpdate, exact_cost_oracle, exact_init, reg_init

    A = rng.standard_normal((200, 20))
    b = rng.standard_normal(200)
    sk = reg_init(A, b, 0.25, None, 3)
    ex = exact_init(A, b)
    for _ in range(30):
        idx = rng.choice(200, 5, replace=False)
        upd = SparseUpdate.from_pairs(zip(idx.tolist(), rng.standard_normal(5).tolist()))
        out = sk.update(upd)
        if abs(out - sk.recompute()) > 1e-9 * max(1.0, out):
            return False, "incremental and batch sketch outputs differ"
        c = ex.update(upd)
        if abs(c - exact_cost_oracle(A, ex.b)) > 1e-8 * exact_cost_oracle(A, ex.b):
            return False, "exact maintainer differs from the oracle"
    return True, "incremental == batch, exact maintainer == oracle"


def _kde(rng):
    from .kde import Kernel

    for kern in (Kernel("exp", 2.0), Kernel("rational", 0.5)):
        x, y, z = rng.standard_normal((3, 20000, 2))
        gap = np.abs(kern(x, y) - kern(x, z)) - kern.lipschitz * np.linalg.norm(y - z, axis=1)
        if np.any(gap > 1e-12):
            return False, f"{kern.kind} kernel violates its Lipschitz bound"
    return True, "kernel Lipschitz bounds"


def _io(rng):
    from .io import read_dataset, write_csv_atomic, write_dataset_binary

    with tempfile.TemporaryDirectory() as tmp:
        X = rng.standard_normal((7, 3))
        write_dataset_binary(Path(tmp) / "x.bin", X)
        if not np.array_equal(read_dataset(Path(tmp) / "x.bin"), X):
            return False, "binary dataset round trip"
        target = Path(tmp) / "out.csv"

        def boom(i):
            if i == 2:
                raise RuntimeError("injected")

        try:
            write_csv_atomic(target, ["a"], [[1], [2], [3]], fault_hook=boom)
        except RuntimeError:
            pass
        if target.exists() or len(list(Path(tmp).iterdir())) != 1:
            return False, "partial CSV survived an injected fault"
    return True, "dataset round trip, atomic CSV"


SUITES = [
    ("transforms", _transforms),
    ("leverage", _leverage),
    ("dp", _dp),
    ("regression", _regression),
    ("kde", _kde),
    ("io", _io),
]


def run_selftest(stream=None, seed=DEFAULT_SEED):
    stream = sys.stdout if stream is None else stream
    all_ok = True
    for i, (name, fn) in enumerate(SUITES):
        try:
            ok, detail = fn(substream(seed, 500, i))
        except Exception as exc:  # a crash counts as a failure
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'} {name:<11} {detail}", file=stream)
    return all_ok
