"""Time each hot kernel under the numba and the pure-numpy backend.

    python benchmarks/bench_backends.py [--repeat 5]

Both implementations are called in the same process through
``irsnet.kernels.IMPLEMENTATIONS`` and their outputs are compared before
timing. The first numba call compiles (or loads the on-disk cache) and is
excluded from the timings.
"""

import argparse
import time

import numpy as np

from irsnet import kernels
from irsnet.analytics import BEAM_CONST, interference_matrix
from irsnet.geometry import build_link_gains
from irsnet.layouts import make_scenario


def _cases(seed):
    rng = np.random.default_rng(seed)
    sc = make_scenario("random", 3, 7, seed=seed, M=100)
    g = build_link_gains(sc)
    M = 100
    base = g.alpha_sq.diagonal() + M * np.einsum("kjk->k", g.q**2)
    lin = np.ascontiguousarray(M * g.a_coeff)
    q_own = np.ascontiguousarray(g.q_own)
    quad = M * M * BEAM_CONST
    gamma = (sc.noise_power + sc.p_max * interference_matrix(g, M).sum(axis=0)) / sc.p_max
    nu = np.ascontiguousarray(interference_matrix(g, M))

    T, J, K, Mmc = 200, 5, 3, 128
    cg = rng.standard_normal((T, J, K, Mmc)) + 1j * rng.standard_normal((T, J, K, Mmc))
    ph = np.exp(1j * rng.uniform(0, 2 * np.pi, (T, J, K, Mmc)))
    ch = rng.standard_normal((T, K, J, Mmc)) + 1j * rng.standard_normal((T, K, J, Mmc))

    mats = rng.uniform(0, 1, (4000, 4, 4))
    T_lp = rng.standard_normal((250, 600))
    return {
        "cascade_sums": (cg, ph, ch),
        "enumerate_p1_states": (base, lin, q_own, quad, 1.0 / gamma),
        "power_iteration": (mats, 1e-12, 100000, False),
        "enumerate_p2_states": (base, lin[:5], q_own[:5], quad, nu, sc.noise_power, sc.p_max, 1e-12, 100000),
        "pivot": (T_lp, 17, 42),
    }


def _first(out):
    return out[0] if isinstance(out, tuple) else out


def _run(fn, args, name):
    if name == "pivot":
        T = args[0].copy()
        fn(T, *args[1:])
        return T
    return fn(*args)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)
    backends = kernels.available_backends()
    if len(backends) < 2:
        print("numba is not installed; only the numpy backend can be timed")
    cases = _cases(a.seed)
    print(f"{'kernel':<22}" + "".join(f"{b:>14}" for b in backends) + ("   speedup" if len(backends) == 2 else ""))
    for name, args in cases.items():
        impls = kernels.IMPLEMENTATIONS[name]
        outs = {b: _run(impls[b], args, name) for b in backends}  # warm-up and compile
        if len(backends) == 2:
            x, y = _first(outs["numpy"]), _first(outs["numba"])
            if not np.allclose(x, y, rtol=1e-9, atol=1e-12):
                raise SystemExit(f"{name}: backends disagree")
        times = {}
        for b in backends:
            best = np.inf
            for _ in range(a.repeat):
                t0 = time.perf_counter()
                _run(impls[b], args, name)
                best = min(best, time.perf_counter() - t0)
            times[b] = best
        line = f"{name:<22}" + "".join(f"{times[b] * 1e3:>12.2f}ms" for b in backends)
        if len(backends) == 2:
            line += f"   {times['numpy'] / times['numba']:>6.1f}x"
        print(line)


if __name__ == "__main__":
    main()
