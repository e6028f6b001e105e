"""Command-line entry point: ``pal run``, ``pal replay``, ``pal world gen``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from planactlearn.errors import PALError
from planactlearn.harness import reports, suites
from planactlearn.world import generate_building

log = logging.getLogger("planactlearn")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVARIANT = 3

FULL_SCALE_STATES = 3_000_000


def float_list(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pal", description="Plan-act-learn experiment runner")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment suite")
    r.add_argument("--suite", choices=suites.SUITES, default=suites.EXAMPLE1)
    r.add_argument("--alpha", type=float_list, default=suites.GRID, help="comma-separated alpha values")
    r.add_argument("--beta", type=float_list, default=suites.GRID)
    r.add_argument("--epsilon", type=float_list, default=None, help="defaults to 0,0.5,1 (0.05 for scalability-packs)")
    r.add_argument("--reps", type=int, default=10)
    r.add_argument("--seed", type=int, default=0, help="master seed")
    r.add_argument("--out", type=Path, required=True)
    r.add_argument("--max-steps", type=int, default=None)
    r.add_argument("--argmax", choices=("auto", "exact", "greedy"), default=None, help="suite default if omitted")
    r.add_argument("--exact-limit", type=int, default=None)
    r.add_argument("--checkpoint-interval", type=int, default=None)
    r.add_argument("--walks", type=int, default=100, help="random walks per divergence estimate")
    r.add_argument("--walk-length", type=int, default=30)
    r.add_argument("--goals", type=int, default=None)
    r.add_argument("--size", type=int, default=None, help="building side length")
    r.add_argument("--wall-density", type=float, default=0.3)
    r.add_argument("--packs", type=int, default=None)
    r.add_argument("--noise-var", type=float, default=None)
    r.add_argument("--max-states", type=int, default=None)
    r.add_argument("--full-scale", action="store_true", help=f"allow up to {FULL_SCALE_STATES} states")
    r.add_argument("--building", type=Path, default=None, help="building fixture file (custom suite)")

    rp = sub.add_parser("replay", help="re-emit reports from raw run logs")
    rp.add_argument("src", type=Path)
    rp.add_argument("--out", type=Path, default=None)

    w = sub.add_parser("world", help="building fixtures")
    wsub = w.add_subparsers(dest="world_command", required=True)
    g = wsub.add_parser("gen", help="generate a random connected building")
    g.add_argument("--width", type=int, default=5)
    g.add_argument("--height", type=int, default=5)
    g.add_argument("--wall-density", type=float, default=0.3)
    g.add_argument("--packs", type=int, default=0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, default=None, help="output file (stdout if omitted)")
    return p


def spec_from_args(args) -> suites.ExperimentSpec:
    eps = args.epsilon
    if eps is None:
        eps = (0.05,) if args.suite == suites.SCALABILITY else suites.GRID
    max_states = args.max_states
    if args.full_scale and max_states is None:
        max_states = FULL_SCALE_STATES
    return suites.ExperimentSpec(
        suite=args.suite,
        alphas=args.alpha,
        betas=args.beta,
        epsilons=eps,
        reps=args.reps,
        seed=args.seed,
        max_steps=args.max_steps,
        argmax=args.argmax,
        exact_limit=args.exact_limit,
        checkpoint_interval=args.checkpoint_interval,
        divergence_walks=args.walks,
        divergence_walk_length=args.walk_length,
        goals=args.goals,
        size=args.size,
        wall_density=args.wall_density,
        packs=args.packs,
        noise_var=args.noise_var,
        max_states=max_states,
        building=None if args.building is None else str(args.building),
        out=str(args.out),
    )


def cmd_run(args) -> int:
    spec = spec_from_args(args)
    rows, records = suites.run_suite(spec)
    paths = reports.emit_reports(rows, records, args.out)
    for row in rows:
        print(
            f"alpha={row.alpha:g} beta={row.beta:g} epsilon={row.epsilon:g} "
            f"|S|={row.states:.6g} %lrn={reports.fmt(row.lrn)} %G={row.goal_pct:g}"
        )
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    failed = [r for r in records if r.get("error")]
    for r in failed:
        log.error("run rep=%d seed=%d aborted: %s", r["rep"], r["seed"], r["error"])
    return EXIT_INVARIANT if failed else EXIT_OK


def cmd_replay(args) -> int:
    paths = reports.replay(args.src, args.out)
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return EXIT_OK


def cmd_world(args) -> int:
    b = generate_building(args.width, args.height, args.wall_density, args.packs, args.seed)
    if args.out is None:
        sys.stdout.write(b.dumps())
    else:
        b.save(args.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"run": cmd_run, "replay": cmd_replay, "world": cmd_world}
    try:
        return handlers[args.command](args)
    except (PALError, ValueError) as exc:
        print(f"pal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"pal: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
