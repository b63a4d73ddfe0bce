"""Command-line experiment runner.

Each command maps one-to-one onto a library construction, consumes an
explicit seed, and emits its objects in the library file formats plus a
JSON run manifest.  Re-running a manifest from the same inputs reproduces
every output byte for byte; all exact measures are serialized as
"numerator/2^exponent" strings, never floating point.

Exit codes partition outcomes: 0 ok, 2 bound or verification violation,
3 guard violation, 4 parse error, 5 strategy failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from typing import Optional

from . import __version__
from .adversaries import (
    AdversaryError,
    deficiency_bound_report,
    deficiency_weight_bound,
    removed_sets_disjoint,
    run_deficiency_adversary,
    run_threshold_adversary,
    threshold_bound_report,
    threshold_weight_bound,
)
from .bits import BitString, OracleStream
from .classes_games import (
    ExplicitClass,
    StrategyFailure,
    run_game,
    seeded_presentations,
    transcript_json,
    verify_transcript,
)
from .constructions import (
    FAT_N_MAX,
    d_set_enumerate,
    fat_set_run,
    positive_tree,
    sample_perfect_tree,
    shattered_tree,
    wgt,
    WeightedPairSet,
)
from .functionals import (
    constant_functional,
    constant_int_functional,
    identity_prefix_functional,
    random_functional,
    random_int_functional,
)
from .machine import ReferenceMachine
from .orders import OrderError, order_table, validate_order_table
from .trees import Tree, TreeClassPresentation, TreeError

EXIT_OK = 0
EXIT_BOUND = 2
EXIT_GUARD = 3
EXIT_PARSE = 4
EXIT_STRATEGY = 5

OUT_ENV = "PREFIXLAB_OUT"


def _atomic_write(path: str, data: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _sha256(data: str) -> str:
    return hashlib.sha256(data.encode()).hexdigest()


def _load_machine(path: Optional[str]) -> ReferenceMachine:
    if path is None:
        return ReferenceMachine()
    with open(path) as fh:
        return ReferenceMachine.load(fh.read())


def _emit(outdir: str, name: str, data: str, manifest: dict) -> None:
    os.makedirs(outdir, exist_ok=True)
    _atomic_write(os.path.join(outdir, name), data)
    manifest.setdefault("outputs", {})[name] = _sha256(data)


def _write_manifest(outdir: str, manifest: dict) -> None:
    data = json.dumps(manifest, sort_keys=True, separators=(",", ":")) + "\n"
    _atomic_write(os.path.join(outdir, "manifest.json"), data)


def _level_blocks(pairs) -> str:
    lines = []
    for label, strings in pairs:
        lines.append(f"level {label}:")
        lines.extend(s.text() for s in strings)
    return "\n".join(lines) + "\n"


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(
        json.dumps({"error": kind, "message": message}, sort_keys=True) + "\n"
    )
    return code


def _manifest_base(args, command: str, params: dict, machine: ReferenceMachine) -> dict:
    return {
        "command": command,
        "params": params,
        "seed": args.seed,
        "machine_state_digest": machine.state_digest(),
        "tool_version": __version__,
    }


def cmd_construct(args) -> int:
    machine = _load_machine(args.machine_state)
    outdir = args.out
    if args.kind == "fat-set":
        if not 2 <= args.n_max <= FAT_N_MAX:
            return _error("guard", f"n-max must lie in [2, {FAT_N_MAX}]", EXIT_GUARD)
        state = fat_set_run(args.seed, args.n_max)
        body = _level_blocks(
            (state.lengths[n], state.sets[n]) for n in sorted(state.sets)
        )
        manifest = _manifest_base(
            args, "construct fat-set", {"n_max": args.n_max}, machine
        )
        manifest["lengths"] = {str(n): state.lengths[n] for n in sorted(state.lengths)}
        _emit(outdir, "fat_set.txt", body, manifest)
    elif args.kind == "perfect-tree":
        if args.n_max > 4:
            return _error("guard", "schedule n^2 over n-max > 4 exceeds budget", EXIT_GUARD)
        state = sample_perfect_tree(args.seed, args.n_max)
        body = _level_blocks(
            (state.lengths[n], state.level_sets[n]) for n in range(state.steps + 1)
        )
        manifest = _manifest_base(
            args, "construct perfect-tree", {"n_max": args.n_max}, machine
        )
        manifest["lengths"] = list(state.lengths)
        manifest["raw_draws"] = [d if d is not None else -1 for d in state.raw_draws]
        _emit(outdir, "perfect_tree.txt", body, manifest)
    elif args.kind == "shattered-tree":
        try:
            g = order_table(args.g, args.depth)
            validate_order_table(g, step_le_one=True, start_zero=True)
        except OrderError as exc:
            return _error("parse", str(exc), EXIT_PARSE)
        x = OracleStream(args.seed).draw_string(args.depth)
        try:
            tree = shattered_tree(x, g, args.depth)
        except TreeError as exc:
            return _error("guard", str(exc), EXIT_GUARD)
        manifest = _manifest_base(
            args,
            "construct shattered-tree",
            {"depth": args.depth, "g": args.g},
            machine,
        )
        manifest["base"] = x.text()
        manifest["widths"] = tree.widths()
        _emit(outdir, "shattered_tree.txt", tree.save(), manifest)
    elif args.kind == "positive-tree":
        if args.pairs:
            try:
                with open(args.pairs) as fh:
                    pairs = [
                        tuple(int(tok) for tok in line.split())
                        for line in fh
                        if line.strip()
                    ]
                x_set = WeightedPairSet(pairs)
            except (OSError, ValueError) as exc:
                return _error("parse", str(exc), EXIT_PARSE)
        else:
            x_set = d_set_enumerate(machine, len_max=args.depth, k_max=args.k)
        tree, comp_measure, comp = positive_tree(x_set, args.k, args.depth)
        manifest = _manifest_base(
            args,
            "construct positive-tree",
            {"depth": args.depth, "k": args.k, "pairs": bool(args.pairs)},
            machine,
        )
        manifest["weight"] = str(wgt(x_set))
        manifest["complement_measure"] = str(comp_measure)
        _emit(outdir, "positive_tree.txt", tree.save(), manifest)
        _emit(outdir, "complement.txt", comp.serialize(), manifest)
    _write_manifest(outdir, manifest)
    return EXIT_OK


def _build_functional(args, seed):
    use, levels = args.use, args.levels
    if args.functional == "identity":
        return identity_prefix_functional(use, levels)
    if args.functional == "constant":
        target = OracleStream(seed ^ 0xC0FFEE).draw_string(levels)
        return constant_functional(
            use, [[target.prefix(n)] for n in range(levels + 1)]
        )
    return random_functional(seed, use, levels)


def cmd_adversary(args) -> int:
    if args.use > 14:
        return _error("guard", "functional use bound exceeds 14 bits", EXIT_GUARD)
    machine = _load_machine(args.machine_state)
    all_ok = True
    logs = []
    try:
        for i in range(args.count):
            seed = args.seed + i
            phi = _build_functional(args, seed)
            if args.kind == "deficiency":
                state = run_deficiency_adversary(phi, args.k_max, args.budget, machine)
                rows = deficiency_bound_report(state)
                ok = (
                    all(r.ok for r in rows)
                    and state.weight() <= deficiency_weight_bound(state)
                    and removed_sets_disjoint(state)
                )
            else:
                theta = random_int_functional(seed ^ 0x7E57, args.use, args.levels, 3)
                state = run_threshold_adversary(phi, theta, args.budget, machine)
                rows = threshold_bound_report(state)
                ok = all(r.ok for r in rows) and state.weight() <= threshold_weight_bound(
                    state
                )
            all_ok = all_ok and ok and state.converged
            logs.append(
                {
                    "seed": seed,
                    "converged": state.converged,
                    "actions": [a.to_json() for a in state.log],
                    "weight": str(state.weight()),
                    "constant": state.constant,
                    "bounds_ok": ok,
                    "violations": [r.to_json() for r in rows if not r.ok],
                }
            )
    except AdversaryError as exc:
        return _error("kcl-overflow", str(exc), EXIT_GUARD)
    manifest = _manifest_base(
        args,
        f"adversary {args.kind}",
        {
            "functional": args.functional,
            "use": args.use,
            "levels": args.levels,
            "k_max": args.k_max,
            "budget": args.budget,
            "count": args.count,
        },
        machine,
    )
    body = json.dumps(logs, sort_keys=True, separators=(",", ":")) + "\n"
    _emit(args.out, "actions.json", body, manifest)
    _write_manifest(args.out, manifest)
    return EXIT_OK if all_ok else EXIT_BOUND


def cmd_profile(args) -> int:
    machine = _load_machine(args.machine_state)
    try:
        with open(args.tree) as fh:
            text = fh.read()
        tree = Tree.parse(text)
    except (OSError, TreeError, ValueError) as exc:
        return _error("parse", str(exc), EXIT_PARSE)
    lines = ["level,width,deficiency,log_width_minus_deficiency"]
    for n, level in enumerate(tree.levels):
        width = len(level)
        if width == 0:
            lines.append(f"{n},0,,")
            continue
        def_n = machine.level_deficiency(level)
        log_w = width.bit_length() - 1
        lines.append(f"{n},{width},{def_n},{log_w - def_n}")
    data = "\n".join(lines) + "\n"
    if args.out:
        manifest = _manifest_base(args, "profile", {"tree": os.path.basename(args.tree)}, machine)
        _emit(args.out, "profile.csv", data, manifest)
        _write_manifest(args.out, manifest)
    else:
        sys.stdout.write(data)
    return EXIT_OK


def cmd_game(args) -> int:
    machine = _load_machine(args.machine_state)
    classes = []
    for path in args.classes or []:
        try:
            with open(path) as fh:
                classes.append(ExplicitClass(TreeClassPresentation.parse(fh.read())))
        except (OSError, TreeError, ValueError) as exc:
            return _error("parse", str(exc), EXIT_PARSE)
    if args.seeded_classes:
        classes.extend(seeded_presentations(args.seed ^ 0x9A11E5, args.seeded_classes))
    classes = classes[: args.rounds] if args.rounds else classes
    try:
        state = run_game(machine, args.c, classes, args.seed, args.depth)
    except StrategyFailure as exc:
        return _error("strategy", str(exc), EXIT_STRATEGY)
    ok, problems = verify_transcript(state, machine)
    manifest = _manifest_base(
        args,
        "game",
        {
            "c": args.c,
            "depth": args.depth,
            "rounds": len(classes),
            "seeded_classes": args.seeded_classes,
        },
        machine,
    )
    _emit(args.out, "transcript.json", transcript_json(state), manifest)
    manifest["verified"] = ok
    manifest["problems"] = problems
    _write_manifest(args.out, manifest)
    return EXIT_OK if ok else EXIT_BOUND


def cmd_replay(args) -> int:
    try:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
    except (OSError, ValueError) as exc:
        return _error("parse", str(exc), EXIT_PARSE)
    command = manifest["command"].split()
    params = manifest["params"]
    argv = command[:]
    for key, val in params.items():
        if isinstance(val, bool):
            continue
        argv.extend([f"--{key.replace('_', '-')}", str(val)])
    argv.extend(["--seed", str(manifest["seed"]), "--out", args.out])
    if args.machine_state:
        argv.extend(["--machine-state", args.machine_state])
    rc = main(argv)
    if rc != EXIT_OK:
        return rc
    with open(os.path.join(args.out, "manifest.json")) as fh:
        new_manifest = json.load(fh)
    if new_manifest["outputs"] != manifest["outputs"]:
        return _error("replay", "outputs differ from the manifest", EXIT_BOUND)
    return EXIT_OK


def _common_flags(p, *, seed=True):
    if seed:
        p.add_argument("--seed", type=int, default=0)
    p.add_argument("--machine-state", default=None)
    p.add_argument(
        "--out",
        default=os.environ.get(OUT_ENV, "prefixlab-out"),
        help=f"output directory (default from ${OUT_ENV})",
    )
    p.add_argument("--format", choices=["json", "csv"], default="json")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="prefixlab")
    sub = ap.add_subparsers(dest="cmd", required=True)

    pc = sub.add_parser("construct", help="run one of the object constructions")
    pc.add_argument(
        "kind", choices=["fat-set", "perfect-tree", "shattered-tree", "positive-tree"]
    )
    pc.add_argument("--n-max", type=int, default=8)
    pc.add_argument("--depth", type=int, default=8)
    pc.add_argument("--g", default="ceil(n/2)")
    pc.add_argument("--k", type=int, default=1)
    pc.add_argument("--pairs", default=None)
    _common_flags(pc)
    pc.set_defaults(fn=cmd_construct)

    pa = sub.add_parser("adversary", help="run a machine-building adversary")
    pa.add_argument("kind", choices=["deficiency", "threshold"])
    pa.add_argument("--functional", choices=["identity", "constant", "random"],
                    default="random")
    pa.add_argument("--use", type=int, default=8)
    pa.add_argument("--levels", type=int, default=6)
    pa.add_argument("--k-max", type=int, default=3)
    pa.add_argument("--budget", type=int, default=256)
    pa.add_argument("--count", type=int, default=1)
    _common_flags(pa)
    pa.set_defaults(fn=cmd_adversary)

    pp = sub.add_parser("profile", help="per-level width/deficiency CSV")
    pp.add_argument("tree")
    _common_flags(pp)
    pp.set_defaults(fn=cmd_profile)

    pg = sub.add_parser("game", help="Banach-Mazur avoidance game")
    pg.add_argument("--classes", nargs="*", default=None)
    pg.add_argument("--seeded-classes", type=int, default=0)
    pg.add_argument("--rounds", type=int, default=0)
    pg.add_argument("--c", type=int, default=3)
    pg.add_argument("--depth", type=int, default=12)
    _common_flags(pg)
    pg.set_defaults(fn=cmd_game)

    pr = sub.add_parser("replay", help="re-run a manifest and verify outputs")
    pr.add_argument("manifest")
    pr.add_argument("--machine-state", default=None)
    pr.add_argument("--out", default=os.environ.get(OUT_ENV, "prefixlab-replay"))
    pr.set_defaults(fn=cmd_replay)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else 0
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
