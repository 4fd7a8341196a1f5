"""Compiled vs pure-Python path kernels.

Times the block-tridiagonal assembly and solve directly for several path
lengths and dimensions, then one end-to-end principal action per backend
(the backend is fixed at import, so that part runs in subprocesses).

    python benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from commuting_actions._kernels import _fallback

try:
    from commuting_actions._kernels import _core
except ImportError:
    _core = None

END_TO_END = """
import time
from commuting_actions import _kernels
from commuting_actions.systems import builtin
from commuting_actions.trajectories import minimize_action
L = builtin("harmonic", dimension={n})
start = time.perf_counter()
for _ in range({repeat}):
    minimize_action(L, [0.0] * {n}, [1.0] * {n}, 1.0, {N})
print(_kernels.BACKEND, (time.perf_counter() - start) / {repeat})
"""


def _system(rng, N, n):
    terms = [rng.normal(size=(N, n)), rng.normal(size=(N, n))] + [rng.normal(size=(N, n, n)) for _ in range(3)]
    terms[2] = np.einsum("kij,klj->kil", terms[2], terms[2]) + 4 * (n + 1) * np.eye(n)
    terms[4] = terms[2].copy()
    return terms


def bench_kernels(repeat: int) -> None:
    print(f"{'N':>7} {'n':>2} {'python [ms]':>12} {'compiled [ms]':>14} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for n in (1, 2, 3):
        for N in (100, 1000, 10000):
            terms = _system(rng, N, n)

            def one(mod):
                grad, diag, off = mod.assemble_path_system(*terms)
                mod.solve_block_tridiagonal(diag, off, -grad)

            t_py = min(timeit.repeat(lambda: one(_fallback), number=1, repeat=repeat)) * 1e3
            if _core is None:
                print(f"{N:>7} {n:>2} {t_py:>12.3f} {'n/a':>14} {'':>8}")
                continue
            t_c = min(timeit.repeat(lambda: one(_core), number=1, repeat=repeat)) * 1e3
            print(f"{N:>7} {n:>2} {t_py:>12.3f} {t_c:>14.3f} {t_py / t_c:>7.1f}x")


def bench_end_to_end(repeat: int) -> None:
    print(f"\nminimize_action, harmonic, end to end (mean of {repeat})")
    print(f"{'N':>7} {'n':>2} {'backend':>9} {'seconds':>9}")
    for n, N in ((1, 1600), (3, 1600), (1, 12800)):
        for backend in ("compiled", "python"):
            env = dict(os.environ)
            if backend == "python":
                env["COMMUTING_ACTIONS_KERNELS"] = "python"
            else:
                env.pop("COMMUTING_ACTIONS_KERNELS", None)
            out = subprocess.run(
                [sys.executable, "-c", END_TO_END.format(n=n, N=N, repeat=repeat)],
                capture_output=True,
                text=True,
                env=env,
                check=True,
            ).stdout.split()
            print(f"{N:>7} {n:>2} {out[0]:>9} {float(out[1]):>9.4f}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    bench_kernels(args.repeat)
    bench_end_to_end(args.repeat)


if __name__ == "__main__":
    main()
