"""Command-line front door.

Subcommands: solve (dimension-drop curve tables), simulate (path experiments
with a bound check), oracle (brute force vs solver comparison), translate
(random-translation porosity transfer), hmin (converse-bound tables).  All
output is metadata-headed CSV; identical configs produce byte-identical
files.  Exit codes: 0 success, 1 parameter error, 2 failed pass-criterion
under --strict.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__, bounds, oracle
from .dimension import _trajectory_from_steps, sampled_trajectory
from .measure import (
    _PATH_STREAM,
    Bernoulli,
    CantorMiddleHalf,
    GeneratorSpec,
    Uniform,
    build_tree_measure,
    derived_rng,
    spec_from_json,
    spec_to_json,
)
from .porosity import (
    hole_depth_for,
    por2_profile,
    porous_retree,
    run_translation_trials,
)


class ParameterError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return f"{x:.12g}"
    return str(x)


def write_csv(path, command: str, params: dict, header: list[str], rows) -> None:
    """Metadata header first, so any row is reproducible from the file alone."""
    lines = [f"# command={command}"]
    for key in sorted(params):
        lines.append(f"# {key}={_fmt(params[key])}")
    lines.append(f"# version={__version__}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _load_spec(args) -> GeneratorSpec:
    if args.config:
        with open(args.config) as fh:
            spec, cfg_depth = spec_from_json(fh.read())
        if args.depth is None and cfg_depth is not None:
            args.depth = cfg_depth
        if args.seed is not None:
            spec = GeneratorSpec(spec.d, spec.model, args.seed)
        return spec
    if args.gen is None:
        raise ParameterError("need --config or --gen to define a measure")
    d = args.d if args.d is not None else 1
    seed = args.seed if args.seed is not None else 0
    if args.gen == "uniform":
        return GeneratorSpec(d, Uniform(), seed)
    if args.gen == "bernoulli":
        if not args.weights:
            raise ParameterError("--gen bernoulli needs --weights w0,w1,...")
        w = tuple(float(x) for x in args.weights.split(","))
        return GeneratorSpec(d, Bernoulli(w), seed)
    if args.gen == "cantor_middle_half":
        return GeneratorSpec(1, CantorMiddleHalf(), seed)
    raise ParameterError(f"unknown generator {args.gen!r}; use --config for cascades")


# ---------------------------------------------------------------------------
# solve


def _cmd_solve(args) -> int:
    pairs = (
        [(args.d, args.k)]
        if args.d is not None and args.k is not None
        else [(2, 1), (2, 2)]
    )
    rows = []
    for d, k in pairs:
        for row in bounds.solve_table(d, k, args.points):
            rows.append(
                (row["d"], row["k"], row["eps"], row["eps_scaled"], row["s"], row["t"])
            )
    write_csv(
        args.out,
        "solve",
        {"pairs": ";".join(f"{d}:{k}" for d, k in pairs), "points": args.points},
        ["d", "k", "eps", "eps_scaled", "s", "t"],
        rows,
    )
    return 0


# ---------------------------------------------------------------------------
# simulate


def _simulate_one_path(spec: GeneratorSpec, k: int, eps: float, depth: int,
                       seed: int, index: int) -> tuple:
    """Terminal statistics of one re-treed path (worker-safe)."""
    base = build_tree_measure(spec, "uniform", depth * k + k,
                              max_level=depth * k + k)
    view = porous_retree(base, k, eps)
    rng = derived_rng(seed, _PATH_STREAM, index)
    steps = list(view.walk(rng, steps=depth))
    traj = _trajectory_from_steps(steps)
    terminal = steps[-1][1].children[steps[-1][3]]
    lineage = [terminal.ancestor(i) for i in range(terminal.level + 1)]
    flags = [
        p <= k for p in por2_profile(base, lineage, terminal.level, eps, cap=k)
    ]
    eta_hat = sum(flags) / len(flags)
    porous_steps = int(traj.porous.sum())
    return (
        index,
        traj.terminal_D,
        float(traj.res_H[-1]),
        float(traj.res_L[-1]),
        eta_hat,
        porous_steps,
        int(traj.levels[-1]),
    )


def _cmd_simulate(args) -> int:
    spec = _load_spec(args)
    depth = args.depth if args.depth is not None else 1000
    paths = args.paths if args.paths is not None else 20
    k = args.k if args.k is not None else 1
    eps = args.eps if args.eps is not None else 0.0
    seed = args.seed if args.seed is not None else spec.seed
    d = spec.d
    t = bounds.t_dk(d, k, eps)

    tasks = [(spec, k, eps, depth, seed, i) for i in range(paths)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_simulate_one_path_star, tasks))
    else:
        results = [_simulate_one_path(*t_) for t_ in tasks]

    dim_estimate = max(r[1] for r in results)
    eta_hat = sum(r[4] for r in results) / len(results)
    bound = d - eta_hat * t
    passed = dim_estimate <= bound + args.slack

    rows = [
        (r[0], depth, r[1], r[2], r[3], r[4], r[5], r[6], "", "", "")
        for r in results
    ]
    rows.append(
        ("summary", depth, dim_estimate, "", "", eta_hat, "", "", t, bound, int(passed))
    )
    write_csv(
        args.out,
        "simulate",
        {
            "spec": spec_to_json(spec).replace("\n", " "),
            "d": d,
            "k": k,
            "eps": eps,
            "depth": depth,
            "paths": paths,
            "seed": seed,
            "slack": args.slack,
        },
        [
            "path",
            "depth",
            "Dn",
            "resH",
            "resL",
            "eta_hat",
            "porous_steps",
            "M_n",
            "t",
            "bound",
            "pass",
        ],
        rows,
    )
    if args.trajectories:
        base = build_tree_measure(spec, "uniform", depth * k + k,
                                  max_level=depth * k + k)
        view = porous_retree(base, k, eps)
        traj_rows = []
        for i in range(paths):
            rng = derived_rng(seed, _PATH_STREAM, i)
            traj = sampled_trajectory(view, depth, rng)
            for row in traj.csv_rows():
                traj_rows.append((i, *row))
        write_csv(
            args.trajectories,
            "simulate-trajectories",
            {"d": d, "k": k, "eps": eps, "depth": depth, "paths": paths, "seed": seed},
            ["path", "n", "I", "L", "H", "lambda", "Mbar", "Dn", "resH", "resL", "porous"],
            traj_rows,
        )
    if not passed and args.strict:
        return 2
    return 0


def _simulate_one_path_star(t_):
    return _simulate_one_path(*t_)


# ---------------------------------------------------------------------------
# oracle


def _cmd_oracle(args) -> int:
    if args.d is not None and args.k is not None:
        cases = [(args.d, args.k)]
    else:
        cases = [(1, 1), (1, 2), (2, 1), (2, 2)]
    rows = []
    for d, k in cases:
        hi = 2.0 ** (-k * d)
        eps_list = [args.eps] if args.eps is not None else [0.0, hi / 2.0, hi]
        for eps in eps_list:
            row = oracle.compare(d, k, eps, args.grid)
            am = row["argmax"]
            rows.append(
                (
                    row["d"],
                    row["k"],
                    row["eps"],
                    row["value_bruteforce"],
                    row["value_candidate"],
                    row["value_solver"],
                    row["gap"],
                    "q="
                    + "|".join(_fmt(x) for x in am.q)
                    + ";p="
                    + _fmt(am.p),
                )
            )
    write_csv(
        args.out,
        "oracle",
        {"cases": ";".join(f"{d}:{k}" for d, k in cases), "grid": args.grid},
        [
            "d",
            "k",
            "eps",
            "value_bruteforce",
            "value_candidate",
            "value_solver",
            "gap",
            "argmax",
        ],
        rows,
    )
    return 0


# ---------------------------------------------------------------------------
# translate


def _translate_chunk(spec: GeneratorSpec, r: float, alpha: float, eps: float,
                     depth: int, seed: int, indices: tuple) -> list:
    need = depth + hole_depth_for(alpha, r, spec.d)
    mu = build_tree_measure(spec, "uniform", need, max_level=need)
    return run_translation_trials(mu, r, alpha, eps, depth, seed, indices)


def _translate_chunk_star(t_):
    return _translate_chunk(*t_)


def _cmd_translate(args) -> int:
    spec = _load_spec(args)
    depth = args.depth if args.depth is not None else 12
    trials = args.trials if args.trials is not None else 100
    alpha = args.alpha if args.alpha is not None else 0.25
    eps = args.eps if args.eps is not None else 0.0
    seed = args.seed if args.seed is not None else spec.seed
    r = args.ratio
    k = hole_depth_for(alpha, r, spec.d)

    if args.jobs > 1:
        chunks = [
            tuple(range(j, trials, args.jobs)) for j in range(args.jobs)
        ]
        tasks = [(spec, r, alpha, eps, depth, seed, c) for c in chunks if c]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            parts = list(pool.map(_translate_chunk_star, tasks))
        results = sorted(
            (tr for chunk in parts for tr in chunk), key=lambda tr: tr.trial
        )
    else:
        results = _translate_chunk(spec, r, alpha, eps, depth, seed, range(trials))

    fractions = [tr.fraction for tr in results]
    mean_fraction = math.fsum(fractions) / len(fractions)
    min_fraction = min(fractions)
    threshold = None if args.eta is None else (1.0 - 2.0 * r) ** spec.d * args.eta
    passed = None if threshold is None else mean_fraction >= threshold

    rows = [
        (
            tr.trial,
            "|".join(_fmt(t) for t in tr.translation),
            tr.fraction,
            k,
            eps,
            depth,
        )
        for tr in results
    ]
    write_csv(
        args.out,
        "translate",
        {
            "spec": spec_to_json(spec).replace("\n", " "),
            "ratio": r,
            "alpha": alpha,
            "eps": eps,
            "trials": trials,
            "depth": depth,
            "seed": seed,
            "eta_target": "" if args.eta is None else args.eta,
            "mean_fraction": mean_fraction,
            "min_fraction": min_fraction,
            "threshold": "" if threshold is None else threshold,
        },
        ["trial", "t", "fraction", "k", "eps", "depth"],
        rows,
    )
    if passed is False and args.strict:
        return 2
    return 0


# ---------------------------------------------------------------------------
# hmin


def _cmd_hmin(args) -> int:
    from .dimension import hmin_and_converse

    d = args.d if args.d is not None else 1
    eta = args.eta if args.eta is not None else 0.5
    hi = 2.0 ** -d
    points = args.points
    rows = []
    eps_list = (
        [args.eps] if args.eps is not None else [j / (points - 1) * hi for j in range(points)]
    )
    for eps in eps_list:
        cb = hmin_and_converse(d, eps, eta)
        rows.append((eps, cb.hmin, cb.lower_bound))
    write_csv(
        args.out,
        "hmin",
        {"d": d, "eta": eta, "points": points},
        ["eps", "hmin", "lower_bound"],
        rows,
    )
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="porodim",
        description="Porosity and packing-dimension experiments on dyadic tree measures",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--d", type=int, default=None, help="ambient dimension")
        p.add_argument("--k", type=int, default=None, help="dyadic hole depth")
        p.add_argument("--alpha", type=float, default=None, help="Euclidean hole size")
        p.add_argument("--eps", type=float, default=None, help="hole mass threshold")
        p.add_argument("--eta", type=float, default=None, help="porous-scale fraction")
        p.add_argument("--depth", type=int, default=None, help="path depth / grid depth")
        p.add_argument("--paths", type=int, default=None, help="number of sampled paths")
        p.add_argument("--trials", type=int, default=None, help="number of trials")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--config", default=None, help="generator config JSON file")
        p.add_argument("--gen", default=None,
                       help="inline generator: uniform | bernoulli | cantor_middle_half")
        p.add_argument("--weights", default=None, help="comma-separated weights for --gen bernoulli")
        p.add_argument("--out", default=None, help="output CSV path (default stdout)")
        p.add_argument("--jobs", type=int, default=1, help="worker parallelism bound")
        p.add_argument("--slack", type=float, default=0.05,
                       help="bound-check slack for finite-depth estimates")
        p.add_argument("--strict", action="store_true",
                       help="exit 2 when a pass-criterion fails")

    p_solve = sub.add_parser("solve", help="dimension-drop curve table")
    common(p_solve)
    p_solve.add_argument("--points", type=int, default=101, help="grid points per curve")
    p_solve.set_defaults(func=_cmd_solve)

    p_sim = sub.add_parser("simulate", help="path simulation with bound check")
    common(p_sim)
    p_sim.add_argument("--trajectories", default=None,
                       help="also write full per-step trajectories to this CSV")
    p_sim.set_defaults(func=_cmd_simulate)

    p_or = sub.add_parser("oracle", help="brute force vs solver comparison")
    common(p_or)
    p_or.add_argument("--grid", type=int, default=500, help="grid points per free dimension")
    p_or.set_defaults(func=_cmd_oracle)

    p_tr = sub.add_parser("translate", help="random-translation porosity transfer")
    common(p_tr)
    p_tr.add_argument("--ratio", type=float, default=0.25,
                      help="homothety ratio r (power of two)")
    p_tr.set_defaults(func=_cmd_translate)

    p_hm = sub.add_parser("hmin", help="minimal-entropy converse table")
    common(p_hm)
    p_hm.add_argument("--points", type=int, default=33, help="eps grid points")
    p_hm.set_defaults(func=_cmd_hmin)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; the contract is 1 for parameter errors
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ParameterError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
