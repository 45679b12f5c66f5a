"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 2000] [--json out.json]

Each kernel is timed on the shapes it sees inside one environment step or one
DDPG train step at the default problem size (N = 4, D = I = 3, 400/300 hidden).
The last two rows time a full environment step and a full train step with each
backend swapped in.
"""
from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from fasisac import _pykernels, kernels

try:
    from fasisac import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def kernel_cases(rng):
    n, paths = 4, 3
    pos = rng.uniform(-2, 2, (n, 2))
    el, az = rng.uniform(0, np.pi, paths), rng.uniform(0, np.pi, paths)
    ut = rng.uniform(-2, 2, 2)
    sigma = np.diag(rng.standard_normal(paths) + 1j * rng.standard_normal(paths)).astype(complex)
    f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    U = A @ A.conj().T
    E = rng.standard_normal((paths, n)) + 1j * rng.standard_normal((paths, n))
    tent = pos + rng.uniform(-0.5, 0.5, pos.shape)
    big = 400 * 300
    p, g = rng.standard_normal(big), rng.standard_normal(big)
    m, v = np.zeros(big), np.zeros(big)
    t = rng.standard_normal(big)
    return {
        "response_matrix": lambda k: k.response_matrix(pos, el, az, 1.0),
        "channel_row": lambda k: k.channel_row(pos, ut, el, az, el, az, sigma, 1.0),
        "quad_form": lambda k: k.quad_form(f, U),
        "trace_sandwich": lambda k: k.trace_sandwich(E, U),
        "min_pairwise_distance": lambda k: k.min_pairwise_distance(pos),
        "settle_positions": lambda k: k.settle_positions(pos, tent, 0.5),
        "adam_update (120k)": lambda k: k.adam_update(p, g, m, v, 1e-4, 0.9, 0.999, 1e-8, 0.1, 0.001),
        "soft_update (120k)": lambda k: k.soft_update(t, p, 1e-3),
    }


def _swap(impl):
    """Point the dispatch module (and the modules that bound it) at ``impl``."""
    for name in kernels.__all__[1:]:
        setattr(kernels, name, getattr(impl, name))


def pipeline_cases(rng):
    from fasisac.beamforming import design_beamformer
    from fasisac.channel import ScenarioConfig, channel_vector, scenario_sample, target_matrices
    from fasisac.ddpg import AgentConfig, DdpgAgent, ReplayBuffer
    from fasisac.environment import FasIsacEnv, action_dim, initial_layout, state_dim

    sc = scenario_sample(rng, ScenarioConfig())
    layout = initial_layout(4, sc, "fpa_grid")
    f, E = channel_vector(layout, sc), target_matrices(layout, sc)
    _, cov, _ = design_beamformer(f, E, sc.p_max, sc.gamma, sc.noise_power, rng)
    env = FasIsacEnv(sc, cov, layout)
    env.reset()
    actions = rng.uniform(-0.05, 0.05, (64, action_dim(4)))
    agent = DdpgAgent(state_dim(4), action_dim(4), sc.action_bound, AgentConfig(), rng)
    buf = ReplayBuffer(agent.state_dim, agent.action_dim, 1000)
    for _ in range(200):
        s = rng.standard_normal(agent.state_dim)
        buf.push(s, rng.standard_normal(agent.action_dim), rng.standard_normal(), s)
    i = [0]

    def env_step(_):
        env.step(actions[i[0] % 64])
        i[0] += 1
        if env.t >= 100:
            env.reset()

    return {"env.step (full)": env_step,
            "agent.train_step (full)": lambda _: agent.train_step(buf, rng)}


def bench(repeat: int):
    rng = np.random.default_rng(0)
    impls = {"python": _pykernels}
    if _ckernels is not None:
        impls["cython"] = _ckernels
    results = {}
    for name, fn in kernel_cases(rng).items():
        results[name] = {b: min(timeit.repeat(lambda: fn(k), number=repeat, repeat=3)) / repeat
                         for b, k in impls.items()}
    original = {n: getattr(kernels, n) for n in kernels.__all__[1:]}
    pipe = pipeline_cases(np.random.default_rng(1))
    try:
        for name, fn in pipe.items():
            n = max(repeat // 20, 10)
            results[name] = {}
            for b, k in impls.items():
                _swap(k)
                results[name][b] = min(timeit.repeat(lambda: fn(None), number=n, repeat=3)) / n
    finally:
        for k, v in original.items():
            setattr(kernels, k, v)
    return results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)
    res = bench(args.repeat)
    if _ckernels is None:
        print("compiled extension not built; timing the numpy fallback only")
    print(f"{'kernel':28s} {'python (us)':>12s} {'cython (us)':>12s} {'speedup':>8s}")
    for name, t in res.items():
        py = t["python"] * 1e6
        cy = t.get("cython")
        if cy is None:
            print(f"{name:28s} {py:12.2f} {'-':>12s} {'-':>8s}")
        else:
            print(f"{name:28s} {py:12.2f} {cy * 1e6:12.2f} {t['python'] / cy:7.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(res, fh, indent=2)


if __name__ == "__main__":
    main()
