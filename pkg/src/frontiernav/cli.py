"""Command-line entry point: ``frontiernav {gen-worlds,make-suite,run,plot,replay}``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path as FsPath

from .config import NavConfig, config_from_dict, load_config
from .errors import FrontierNavError
from .evaluation import (
    Episode,
    aggregate,
    is_feasible,
    load_manifest,
    make_suite,
    run_episode,
    run_suite,
    save_manifest,
    write_results,
)
from .geometry import Pose
from .gridworld import generate_world, load_world, save_world, world_digest
from .plotting import read_event_log, write_svg
from .scoring.client import ADAPTERS, DEFAULT_TOKEN_ENV

SCORERS = ("oracle", "constant", "vlm")
EXIT_CONFIG = 2


def parse_seeds(text: str) -> list[int]:
    """``"0-9"``, ``"3"`` or ``"1,4,7-9"``."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError(f"no seeds in {text!r}")
    return seeds


def parse_start(text: str) -> Pose:
    """``"x,z"`` or ``"x,z,heading_degrees"``."""
    parts = [float(v) for v in text.split(",")]
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("start must be x,z or x,z,heading_degrees")
    heading = math.radians(parts[2]) if len(parts) == 3 else 0.0
    return Pose.planar(parts[0], parts[1], heading)


def _world_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("procedural world")
    g.add_argument("--width", type=int, default=64)
    g.add_argument("--height", type=int, default=64)
    g.add_argument("--n-rooms", type=int, default=3)
    g.add_argument("--n-objects", type=int, default=4)


def _world_params(args) -> dict:
    params = {"width": args.width, "height": args.height, "n_rooms": args.n_rooms, "n_objects": args.n_objects}
    defaults = {"width": 64, "height": 64, "n_rooms": 3, "n_objects": 4}
    return {k: v for k, v in params.items() if v != defaults[k]}


def _config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file; individual flags below override it")
    g = p.add_argument_group("configuration overrides")
    for name, default in NavConfig().to_dict().items():
        kind = int if isinstance(default, int) else float
        g.add_argument(f"--{name.replace('_', '-')}", dest=f"cfg_{name}", type=kind, default=None, metavar=kind.__name__.upper())


def resolve_config(args) -> NavConfig:
    """Flag over file over built-in default, per key."""
    base = load_config(args.config) if getattr(args, "config", None) else NavConfig()
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    return config_from_dict({**base.to_dict(), **overrides}) if overrides else base


def _scorer_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scorer", choices=SCORERS, default=None, help="overrides the scorer named in the suite")
    p.add_argument("--vlm-endpoint", help="URL of the model endpoint (vlm scorer)")
    p.add_argument("--vlm-model", default="", help="model name sent with each request")
    p.add_argument("--vlm-adapter", choices=sorted(ADAPTERS), default="simple")
    p.add_argument("--vlm-token-env", default=DEFAULT_TOKEN_ENV, help="environment variable holding the bearer token")


def _scorer_options(args) -> dict | None:
    if args.scorer != "vlm":
        return None
    return {
        "endpoint": args.vlm_endpoint,
        "model": args.vlm_model,
        "adapter": args.vlm_adapter,
        "token_env": args.vlm_token_env,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frontiernav", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-worlds", help="write procedural worlds, one file per seed")
    p.add_argument("--seed", type=parse_seeds, required=True, help="seed or range, e.g. 0-9")
    p.add_argument("--out", required=True, help="output directory")
    _world_args(p)

    p = sub.add_parser("make-suite", help="write an episode manifest for a seed range")
    p.add_argument("--seed", type=parse_seeds, required=True)
    p.add_argument("--scorer", choices=SCORERS, default="oracle")
    p.add_argument("--max-steps", type=int, default=500)
    p.add_argument("--min-start-distance", type=float, default=0.0, help="meters of geodesic travel from start to goal")
    p.add_argument("--feasible-only", action="store_true")
    p.add_argument("--out", required=True, help="manifest path")
    _world_args(p)

    p = sub.add_parser("run", help="run one episode or a suite")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--suite", help="episode manifest (one JSON object per line)")
    src.add_argument("--world", help="world file for a single episode")
    src.add_argument("--seed", type=int, help="procedural world seed for a single episode")
    p.add_argument("--start", type=parse_start, help="x,z[,heading_degrees]; sampled from the spawn region if omitted")
    p.add_argument("--goal", help="goal object for a single episode")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory for results.jsonl and logs/")
    p.add_argument("--dry-run", action="store_true", help="validate inputs and report feasibility without running")
    _world_args(p)
    _scorer_args(p)
    _config_args(p)

    p = sub.add_parser("plot", help="SVG trajectory figure from an event log")
    p.add_argument("--log", required=True)
    wsrc = p.add_mutually_exclusive_group(required=True)
    wsrc.add_argument("--world", help="world file the episode ran in")
    wsrc.add_argument("--seed", type=int, help="procedural world seed the episode ran in")
    p.add_argument("--out", required=True)
    _world_args(p)

    p = sub.add_parser("replay", help="summarise an event log, or re-run it and compare")
    p.add_argument("--log", required=True)
    wsrc = p.add_mutually_exclusive_group()
    wsrc.add_argument("--world")
    wsrc.add_argument("--seed", type=int)
    p.add_argument("--verify", action="store_true", help="re-run the episode and require a byte-identical log")
    _world_args(p)
    return parser


def _single_episode(args) -> Episode:
    if not args.goal:
        raise FrontierNavError("--goal is required for a single episode")
    scorer = args.scorer or "oracle"
    if args.world:
        return Episode(start_pose=args.start, goal=args.goal, scorer=scorer, world_file=args.world, episode_id="episode")
    return Episode(
        start_pose=args.start, goal=args.goal, scorer=scorer, world_seed=args.seed,
        world_params=_world_params(args), episode_id=f"seed{args.seed:04d}",
    )


def _print_summary(results, out=None) -> None:
    out = out or sys.stdout
    print(f"{'episode':<12} {'goal':<12} {'scorer':<9} {'ok':>3} {'steps':>5} {'spl':>6}  mode", file=out)
    for r in results:
        tag = r.exclusion_reason if r.excluded else r.failure_mode
        print(f"{r.episode_id:<12} {r.goal:<12} {r.scorer:<9} {int(r.success):>3} {r.steps:>5} {r.spl:>6.3f}  {tag}", file=out)
    feasible = [r for r in results if not r.excluded]
    if feasible:
        agg = aggregate(results)
        modes = ", ".join(f"{k}={v}" for k, v in agg["failure_modes"].items() if v)
        print(f"SR {agg['SR']:.1f}%  SPL {agg['SPL']:.1f}%  over {agg['episodes']} feasible ({agg['excluded']} excluded)  {modes}", file=out)
    else:
        print("no feasible episodes", file=out)


def cmd_gen_worlds(args) -> int:
    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = _world_params(args)
    for seed in args.seed:
        world = generate_world(seed, **params)
        save_world(world, out / f"world_{seed:04d}.txt")
    print(f"wrote {len(args.seed)} worlds to {out}")
    return 0


def cmd_make_suite(args) -> int:
    episodes = make_suite(
        args.seed, scorer=args.scorer, world_params=_world_params(args),
        max_steps=args.max_steps, min_start_distance=args.min_start_distance,
    )
    if args.feasible_only:
        episodes = [e for e in episodes if is_feasible(e)]
    # the manifest must stand alone, so store the start pose each episode will use
    episodes = [replace(e, start_pose=e.resolve_start(e.resolve_world(), NavConfig()), world=None) for e in episodes]
    save_manifest(episodes, args.out)
    print(f"wrote {len(episodes)} episodes to {args.out}")
    return 0


def cmd_run(args) -> int:
    config = resolve_config(args)
    episodes = load_manifest(args.suite) if args.suite else [_single_episode(args)]
    if args.scorer:
        episodes = [Episode(**{**e.__dict__, "scorer": args.scorer}) for e in episodes]
    options = _scorer_options(args)
    if any(e.scorer == "vlm" for e in episodes):
        # fail at startup, not mid-suite, on a missing endpoint or token
        from .scoring import VLMClient

        opts = options or {}
        VLMClient(opts.get("endpoint"), opts.get("model", ""), adapter=opts.get("adapter", "simple"), token_env=opts.get("token_env", DEFAULT_TOKEN_ENV))
    if args.dry_run:
        for e in episodes:
            world = e.resolve_world()
            start = e.resolve_start(world, config)
            if not world.is_free_position(*start.xz):
                raise FrontierNavError(f"{e.episode_id}: start {start.xz} is not on a FREE cell")
            status = "feasible" if is_feasible(e, config) else (
                "negative_control" if not world.matching_objects(e.goal) else "infeasible")
            print(f"{e.episode_id:<12} {e.goal:<12} {e.scorer:<9} {status}")
        print(f"{len(episodes)} episodes validated")
        return 0
    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = run_suite(episodes, config, workers=args.workers, log_dir=out / "logs", scorer_options=options)
    write_results(results, out / "results.jsonl")
    _print_summary(results)
    return 0


def _world_for(args, header: dict | None):
    if args.world:
        return load_world(args.world)
    if args.seed is not None:
        return generate_world(args.seed, **_world_params(args))
    raise FrontierNavError("--world or --seed is required")


def cmd_plot(args) -> int:
    events = read_event_log(args.log)
    header = events[0] if events and events[0].get("type") == "header" else None
    world = _world_for(args, header)
    write_svg(world, events, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_replay(args) -> int:
    events = read_event_log(args.log)
    header = events[0] if events and events[0].get("type") == "header" else None
    if header is None:
        raise FrontierNavError(f"{args.log}: no header record")
    for e in events[1:]:
        if e.get("type") == "tick":
            extra = [k for k in ("drop", "reached", "verified", "discarded", "viewpoints_added", "rotation_inserted") if k in e]
            print(f"{e['step']:>4} {e['decision']:<16} {str(e.get('frontier_id')):>5} {str(e.get('action')):<13} {' '.join(extra)}")
        elif e.get("type") == "end":
            print(f"end: success={e['success']} steps={e['steps']} mode={e['failure_mode']}")
    if not args.verify:
        return 0
    world = _world_for(args, header)
    if header["world_digest"] != world_digest(world):
        raise FrontierNavError("world does not match the log header")
    x, z, heading = header["start"]
    config = config_from_dict(header["config"])
    episode = Episode(
        start_pose=Pose.planar(x, z, heading), goal=header["goal"], scorer=header["scorer"],
        max_steps=header["max_steps"], world=world, episode_id=header["episode_id"],
    )
    fresh = FsPath(args.log).with_suffix(".replay.jsonl")
    run_episode(episode, config, log_path=fresh)
    same = fresh.read_bytes() == FsPath(args.log).read_bytes()
    fresh.unlink()
    print("replay identical" if same else "replay DIFFERS")
    return 0 if same else 1


COMMANDS = {
    "gen-worlds": cmd_gen_worlds,
    "make-suite": cmd_make_suite,
    "run": cmd_run,
    "plot": cmd_plot,
    "replay": cmd_replay,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (FrontierNavError, OSError, json.JSONDecodeError) as exc:
        print(f"frontiernav: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
