"""Command-line front end.

Subcommands: analyze, simulate {chain, ejp, cankick, diverge}, replay,
verify, bench.  Every output file embeds its full configuration, so
re-running the same command line reproduces the same bytes.

Exit codes: 0 success, 2 divergence or parameter-domain violation, 64 usage
error, 1 verification or conservation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from typing import Iterable, NoReturn, Sequence

from . import __version__, analytics, chain, ejp, mqcore, verify
from .choice import ChoiceDistribution, best_of_c, from_weights, uniform_choice
from .errors import (
    DivergenceError,
    ParameterError,
    QueueDrainedError,
    StateSpaceError,
)
from .sampling import RandomSource

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_DIVERGENCE = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; we reserve 2 for divergence."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _count(text: str) -> int:
    """Non-negative integer, scientific notation welcome ("1e6")."""
    try:
        value = int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a count: {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError("count must be non-negative")
    return value


def _seed_value(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a seed: {text!r} (decimal or 0x hex)")


def _count_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(float(part)) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated count list: {text!r}")


def _mix(text: str) -> float:
    named = {"insert-only": 1.0, "delete-only": 0.0, "mixed": 0.5}
    if text in named:
        return named[text]
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a mix: {text!r}")
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("mix must lie in [0, 1]")
    return value


def _resolve_seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MQ_SEED")
    if env:
        try:
            return int(env, 0)
        except ValueError:
            raise ParameterError(f"MQ_SEED is not a seed: {env!r}")
    return 0


def _distribution(args: argparse.Namespace, n: int) -> ChoiceDistribution:
    sigma = getattr(args, "sigma", None)
    if sigma is not None:
        if sigma == "uniform":
            return uniform_choice(n)
        weights = [float(part) for part in sigma.split(",")]
        if len(weights) != n:
            raise ParameterError(f"--sigma needs {n} weights, got {len(weights)}")
        return from_weights(weights)
    return best_of_c(args.c, n)


def _config(args: argparse.Namespace, command: str, **extra: object) -> dict:
    cfg: dict[str, object] = {"command": command, "version": __version__}
    for key in ("n", "c", "sigma", "steps", "burnin", "trials", "seed"):
        if hasattr(args, key) and getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    if "sigma" in cfg:
        cfg.pop("c", None)  # explicit weights override the choice parameter
    cfg.update(extra)
    return cfg


def _write_csv(
    path: str | None, config: dict, header: Sequence[str], rows: Iterable[Sequence[object]]
) -> None:
    def emit(f) -> None:
        f.write("# config " + json.dumps(config, sort_keys=True) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

    if path is None or path == "-":
        emit(sys.stdout)
    else:
        with open(path, "w", newline="", encoding="utf-8") as f:
            emit(f)


def _write_json(path: str | None, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def _hist_path(path: str | None) -> str | None:
    if path is None or path == "-":
        return None
    stem, ext = os.path.splitext(path)
    return stem + ".hist.csv"


_HIST_HEADER = ("coordinate", "value", "count", "expected_count")
_CHECKPOINT_HEADER = ("step", "i", "observed_rank", "expected_rank", "expected_initial_rank")


def _hist_rows(
    dist: ChoiceDistribution,
    samples: int,
    rank_errors: dict[int, int],
    gap_hists: dict[int, dict[int, int]] | None,
) -> list[tuple[object, ...]]:
    rows: list[tuple[object, ...]] = []
    if rank_errors:
        kmax = max(rank_errors)
        pmf = chain.rank_error_pmf(dist, kmax)
        for value in sorted(rank_errors):
            rows.append(
                ("rank_error", value, rank_errors[value], samples * float(pmf[value]))
            )
    if gap_hists:
        params = analytics.stationary_params(dist)
        for j in sorted(gap_hists):
            p = params.p[j]
            for value in sorted(gap_hists[j]):
                expected = samples * p * (1.0 - p) ** value
                rows.append((f"gap{j + 1}", value, gap_hists[j][value], expected))
    return rows


def _default_checkpoints(last: int) -> tuple[int, ...]:
    if last <= 0:
        return (0,)
    marks = {0, last}
    for j in range(1, 9):
        marks.add(int(round(last ** (j / 9.0))))
    return tuple(sorted(m for m in marks if m <= last))


def cmd_analyze(args: argparse.Namespace) -> int:
    if args.sweep_c:
        if args.c_min <= 1.0:
            raise ParameterError("--c-min must exceed 1")
        if args.c_max < args.c_min or args.c_step <= 0:
            raise ParameterError("need --c-min <= --c-max and positive --c-step")
        grid = []
        value = args.c_min
        while value <= args.c_max + 1e-12:
            grid.append(round(value, 10))
            value += args.c_step
        config = _config(
            args, "analyze-sweep", c_min=args.c_min, c_max=args.c_max, c_step=args.c_step
        )
        config.pop("c", None)  # the sweep grid replaces the scalar parameter
        rows = [
            (cv, analytics.integral_f_c(cv), 1.0 / (cv - 1.0)) for cv in grid
        ]
        _write_csv(args.out, config, ("c", "integral_f_c", "inv_c_minus_1"), rows)
        return EXIT_OK

    if args.n is None:
        raise ParameterError("analyze needs --n")
    dist = _distribution(args, args.n)
    params = analytics.stationary_params(dist)  # raises DivergenceError if no drift
    payload: dict[str, object] = {
        "config": _config(args, "analyze"),
        "label": dist.label,
        "sigma_upto": list(dist.sigma_upto),
        "stationary_p": list(params.p),
        "stationary_lambda": list(params.lam),
        "expected_ranks": list(analytics.expected_ranks(params)),
        "expected_initial_ranks": list(analytics.initial_expected_ranks(args.n)),
        "expected_rank_error": analytics.expected_rank_error(dist),
    }
    if getattr(args, "sigma", None) is None:
        summary = analytics.rank_error_summary(args.c, args.n)
        payload["rank_error"] = asdict(summary)
        if args.c == 2.0:
            conc = analytics.concentration_quantities(args.n)
            payload["concentration"] = {"mu": conc.mu, "p_star": conc.p_star}
    _write_json(args.out, payload)
    return EXIT_OK


def cmd_simulate_chain(args: argparse.Namespace) -> int:
    dist = _distribution(args, args.n)
    seed = _resolve_seed(args)
    config = _config(args, "simulate-chain", seed=seed, init=args.init)
    if args.steps == 0:
        _write_csv(args.out, config, _CHECKPOINT_HEADER, [])
        hist_out = _hist_path(args.out)
        if hist_out:
            _write_csv(hist_out, config, _HIST_HEADER, [])
        return EXIT_OK
    marks = args.checkpoints
    if marks is None:
        marks = _default_checkpoints(args.burnin + args.steps)
    report = chain.run(
        dist,
        steps=args.steps,
        rng=RandomSource(seed),
        burnin=args.burnin,
        init=args.init,
        checkpoints=marks,
        collect_gap_hists=True,
    )
    params = analytics.stationary_params(dist)
    expected = analytics.expected_ranks(params)
    if args.init == "zeros":
        initial: Sequence[float] = tuple(float(i) for i in range(1, args.n + 1))
    else:
        initial = expected
    rows = [
        (snap.step, i + 1, snap.ranks[i], expected[i], initial[i])
        for snap in report.checkpoints
        for i in range(args.n)
    ]
    _write_csv(args.out, config, _CHECKPOINT_HEADER, rows)
    hist_rows = _hist_rows(dist, args.steps, report.rank_error_hist, report.gap_hists)
    _write_csv(_hist_path(args.out) or args.out, config, _HIST_HEADER, hist_rows)
    return EXIT_OK


def cmd_simulate_ejp(args: argparse.Namespace) -> int:
    dist = _distribution(args, args.n)
    seed = _resolve_seed(args)
    root = RandomSource(seed)
    if args.profile:
        config = _config(args, "simulate-ejp-profile", seed=seed)
        if args.steps == 0:
            _write_csv(args.out, config, ("x", "empirical", "finite_n", "limit"), [])
            return EXIT_OK
        rows = ejp.logistic_positions(
            args.n,
            steps=args.steps,
            rng=root.split("profile"),
            burnin=args.burnin,
            trials=args.trials,
        )
        _write_csv(
            args.out,
            config,
            ("x", "empirical", "finite_n", "limit"),
            [(r.x, r.empirical, r.finite_n, r.limit) for r in rows],
        )
        return EXIT_OK
    config = _config(args, "simulate-ejp", seed=seed)
    if args.steps == 0:
        _write_csv(args.out, config, ("trial", "i", "gap"), [])
        return EXIT_OK
    rows = []
    for trial in range(args.trials):
        report = ejp.run_gap_means(
            dist, args.steps, root.split(f"trial-{trial}"), burnin=args.burnin
        )
        for j, mean in enumerate(report.mean_gaps):
            rows.append((trial + 1, j + 1, mean))
    _write_csv(args.out, config, ("trial", "i", "gap"), rows)
    return EXIT_OK


def cmd_simulate_cankick(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    config = _config(args, "simulate-cankick", seed=seed, horizon=args.horizon)
    if args.trials == 0:
        _write_csv(args.out, config, ("trial", "i", "gap"), [])
        return EXIT_OK
    gaps = ejp.can_kick_gaps_many(
        args.n, args.horizon, args.trials, RandomSource(seed).split("cankick")
    )
    rows = [
        (t + 1, j + 1, float(gaps[t, j]))
        for t in range(args.trials)
        for j in range(args.n)
    ]
    _write_csv(args.out, config, ("trial", "i", "gap"), rows)
    return EXIT_OK


def cmd_simulate_diverge(args: argparse.Namespace) -> int:
    if getattr(args, "sigma", None) is None:
        args.sigma = "uniform"
    dist = _distribution(args, args.n)
    seed = _resolve_seed(args)
    config = _config(args, "simulate-diverge", seed=seed)
    marks = args.checkpoints
    if marks is None:
        marks = _default_checkpoints(args.steps)
    series = ejp.divergence_experiment(
        dist, args.steps, marks, args.trials, RandomSource(seed).split("diverge")
    )
    _write_csv(args.out, config, ("step", "mean_spread"), series)
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    config = _config(
        args, "replay", seed=seed, initial=args.initial, deletions=args.deletions
    )
    marks = args.checkpoints
    if marks is None:
        marks = _default_checkpoints(args.deletions)
    report = mqcore.sequential_replay(
        args.n,
        args.c,
        initial=args.initial,
        deletions=args.deletions,
        rng=RandomSource(seed),
        burnin=args.burnin,
        checkpoints=marks,
    )
    rows = []
    for snap in report.checkpoints:
        for i, observed in enumerate(snap.observed_ranks):
            rows.append(
                (
                    snap.step,
                    i + 1,
                    observed,
                    report.expected_ranks[i],
                    report.expected_initial_ranks[i],
                )
            )
    _write_csv(args.out, config, _CHECKPOINT_HEADER, rows)
    dist = best_of_c(args.c, args.n)
    measured = args.deletions - args.burnin
    hist_rows = _hist_rows(dist, measured, report.rank_error_hist, None)
    _write_csv(_hist_path(args.out) or args.out, config, _HIST_HEADER, hist_rows)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    if args.suite not in verify.SUITES:
        names = ", ".join(sorted(verify.SUITES))
        sys.stderr.write(f"mq verify: unknown suite {args.suite!r} (choose from {names})\n")
        return EXIT_USAGE
    seed = _resolve_seed(args)
    if args.seed is None and os.environ.get("MQ_SEED") is None:
        seed = verify.DEFAULT_SEED
    verdict = verify.SUITES[args.suite](seed, n=args.n, c=args.c)
    for line in verdict.lines():
        print(line)
    if args.out:
        payload = {
            "config": _config(args, "verify", seed=seed, suite=args.suite),
            "suite": verdict.suite,
            "passed": verdict.passed,
            "seconds": round(verdict.seconds, 3),
            "checks": [asdict(c) for c in verdict.checks],
        }
        _write_json(args.out, payload)
    return EXIT_OK if verdict.passed else EXIT_VERIFY_FAIL


def cmd_bench(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    if args.threads < 1:
        raise ParameterError("--threads must be positive")
    ops_per_thread = max(1, args.ops // args.threads)
    report = mqcore.stress_test(
        args.n,
        args.c,
        threads=args.threads,
        ops_per_thread=ops_per_thread,
        insert_ratio=args.mix,
        prefill=args.prefill,
        seed=seed,
    )
    payload = {
        "config": _config(
            args, "bench", seed=seed, ops=args.ops, threads=args.threads, mix=args.mix
        ),
        "ops_executed": args.threads * ops_per_thread,
        "inserted": report.inserted,
        "deleted": report.deleted,
        "live": report.drained,
        "duplicate_deletes": report.duplicate_deletes,
        "lost": report.lost,
        "conserved": report.conserved,
        "wall_seconds": round(report.wall_seconds, 4),
        "ops_per_second": round(report.ops_per_second, 1),
    }
    _write_json(args.out, payload)
    return EXIT_OK if report.conserved else EXIT_VERIFY_FAIL


def _add_common(p: argparse.ArgumentParser, *, n_default: int | None = None) -> None:
    p.add_argument("--n", type=_count, default=n_default, help="number of queues")
    p.add_argument("--c", type=float, default=2.0, help="choice parameter c > 1")
    p.add_argument("--seed", type=_seed_value, default=None, help="decimal or 0x hex; MQ_SEED fallback")
    p.add_argument("--out", default=None, help="output path (default stdout)")


def build_parser() -> _Parser:
    parser = _Parser(prog="mq", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form quantities as JSON, or a c-sweep CSV")
    _add_common(p)
    p.add_argument("--sigma", default=None, help='"uniform" or comma-separated weights')
    p.add_argument("--sweep-c", action="store_true", help="emit c, integral_f_c, 1/(c-1) CSV")
    p.add_argument("--c-min", type=float, default=1.1)
    p.add_argument("--c-max", type=float, default=8.0)
    p.add_argument("--c-step", type=float, default=0.1)
    p.set_defaults(func=cmd_analyze)

    sim = sub.add_parser("simulate", help="run a simulator and write CSV artifacts")
    simsub = sim.add_subparsers(dest="kind", required=True)

    p = simsub.add_parser("chain", help="gap-vector deletion chain")
    _add_common(p, n_default=16)
    p.add_argument("--sigma", default=None, help='"uniform" or comma-separated weights')
    p.add_argument("--steps", type=_count, default=100_000)
    p.add_argument("--burnin", type=_count, default=10_000)
    p.add_argument("--init", choices=("zeros", "stationary"), default="zeros")
    p.add_argument("--checkpoints", type=_count_list, default=None, help="comma list of absolute steps")
    p.set_defaults(func=cmd_simulate_chain)

    p = simsub.add_parser("ejp", help="exponential-jump token process")
    _add_common(p, n_default=4)
    p.add_argument("--sigma", default=None, help='"uniform" or comma-separated weights')
    p.add_argument("--steps", type=_count, default=300_000)
    p.add_argument("--burnin", type=_count, default=10_000)
    p.add_argument("--trials", type=_count, default=3)
    p.add_argument("--profile", action="store_true", help="logistic position profile CSV")
    p.set_defaults(func=cmd_simulate_ejp)

    p = simsub.add_parser("cankick", help="leftmost-token walk past a horizon")
    _add_common(p, n_default=10)
    p.add_argument("--horizon", type=float, default=30.0)
    p.add_argument("--trials", type=_count, default=1_000)
    p.set_defaults(func=cmd_simulate_cankick)

    p = simsub.add_parser("diverge", help="spread growth without strict drift")
    _add_common(p, n_default=8)
    p.add_argument("--sigma", default=None, help='defaults to "uniform"')
    p.add_argument("--steps", type=_count, default=100_000)
    p.add_argument("--trials", type=_count, default=100)
    p.add_argument("--checkpoints", type=_count_list, default=None)
    p.set_defaults(func=cmd_simulate_diverge)

    p = sub.add_parser("replay", help="deterministic deletion-only data-structure replay")
    _add_common(p, n_default=16)
    p.add_argument("--initial", type=_count, default=400_000, help="initial elements M")
    p.add_argument("--deletions", type=_count, default=100_000, help="deletions D (M >= 4D)")
    p.add_argument("--burnin", type=_count, default=10_000)
    p.add_argument("--checkpoints", type=_count_list, default=None)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("verify", help="run a named verification suite")
    p.add_argument("suite", help="|".join(sorted(verify.SUITES)))
    _add_common(p)
    p.set_defaults(func=cmd_verify, c=None)

    p = sub.add_parser("bench", help="threaded stress test with conservation accounting")
    _add_common(p, n_default=16)
    p.add_argument("--threads", type=_count, default=8)
    p.add_argument("--ops", type=_count, default=100_000, help="total operations across threads")
    p.add_argument("--mix", type=_mix, default=0.5, help="insert fraction, or insert-only/delete-only/mixed")
    p.add_argument("--prefill", type=_count, default=1_000)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        message = {"error": "divergence", "message": str(exc)}
        if getattr(exc, "gap_index", None) is not None:
            message["gap_index"] = exc.gap_index
        sys.stderr.write(json.dumps(message, sort_keys=True) + "\n")
        return EXIT_DIVERGENCE
    except (ParameterError, StateSpaceError, QueueDrainedError) as exc:
        message = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(message, sort_keys=True) + "\n")
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
