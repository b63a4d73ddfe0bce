import json
import os

import pytest

from prefixlab.bits import BitString, EMPTY
from prefixlab.cli import (
    EXIT_BOUND,
    EXIT_GUARD,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_STRATEGY,
    main,
)
from prefixlab.machine import PrefixFreeCodebook, ReferenceMachine
from prefixlab.trees import Tree, TreeClassPresentation, TreePrefix, tree_prefix_code


def read(path):
    with open(path) as fh:
        return fh.read()


def run(args):
    return main(args)


def test_construct_shattered_tree_and_profile(tmp_path):
    out = tmp_path / "run"
    rc = run(
        [
            "construct",
            "shattered-tree",
            "--g",
            "ceil(n/2)",
            "--depth",
            "5",
            "--seed",
            "3",
            "--out",
            str(out),
        ]
    )
    assert rc == EXIT_OK
    manifest = json.loads(read(out / "manifest.json"))
    assert manifest["widths"] == [1, 2, 2, 4, 4, 8]
    tree = Tree.parse(read(out / "shattered_tree.txt"))
    assert tree.widths() == [1, 2, 2, 4, 4, 8]
    rc = run(["profile", str(out / "shattered_tree.txt"), "--out", str(out / "prof")])
    assert rc == EXIT_OK
    csv = read(out / "prof" / "profile.csv").splitlines()
    assert csv[0] == "level,width,deficiency,log_width_minus_deficiency"
    # The log-width column recovers g(n).
    machine = ReferenceMachine()
    for n, line in enumerate(csv[1:]):
        level, width, d, lw_minus_d = line.split(",")
        assert int(width) == tree.widths()[n]
        assert int(lw_minus_d) + int(d) == [0, 1, 1, 2, 2, 3][n]


def test_profile_single_path(tmp_path):
    t = Tree([[BitString(n, 0)] for n in range(4)])
    path = tmp_path / "t.txt"
    path.write_text(t.save())
    rc = run(["profile", str(path), "--out", str(tmp_path / "p")])
    assert rc == EXIT_OK
    rows = read(tmp_path / "p" / "profile.csv").splitlines()[1:]
    assert all(r.split(",")[1] == "1" for r in rows)


def test_profile_parse_error(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("level 1:\n0\n")
    assert run(["profile", str(bad), "--out", str(tmp_path / "p")]) == EXIT_PARSE
    missing = tmp_path / "nope.txt"
    assert run(["profile", str(missing), "--out", str(tmp_path / "p")]) == EXIT_PARSE


def test_construct_guard_violation(tmp_path):
    rc = run(
        ["construct", "fat-set", "--n-max", "40", "--out", str(tmp_path / "x")]
    )
    assert rc == EXIT_GUARD
    rc = run(
        ["construct", "shattered-tree", "--g", "n*", "--out", str(tmp_path / "y")]
    )
    assert rc == EXIT_PARSE


def test_construct_positive_tree_empty_pairs(tmp_path):
    out = tmp_path / "pt"
    rc = run(
        ["construct", "positive-tree", "--depth", "4", "--k", "1", "--out", str(out)]
    )
    assert rc == EXIT_OK
    manifest = json.loads(read(out / "manifest.json"))
    assert manifest["complement_measure"] == "0/2^0"
    tree = Tree.parse(read(out / "positive_tree.txt"))
    assert tree.widths() == [1, 2, 4, 8, 16]


def test_adversary_constant_functional_logs_compressions(tmp_path):
    out = tmp_path / "adv"
    rc = run(
        [
            "adversary",
            "deficiency",
            "--functional",
            "constant",
            "--use",
            "8",
            "--levels",
            "6",
            "--seed",
            "4",
            "--out",
            str(out),
        ]
    )
    assert rc == EXIT_OK
    log = json.loads(read(out / "actions.json"))
    assert log[0]["converged"]
    assert log[0]["actions"], "concentrated functional must trigger actions"
    assert log[0]["bounds_ok"]


def test_adversary_budget_zero_ok(tmp_path):
    rc = run(
        [
            "adversary",
            "deficiency",
            "--functional",
            "identity",
            "--budget",
            "64",
            "--use",
            "7",
            "--levels",
            "5",
            "--out",
            str(tmp_path / "a"),
        ]
    )
    assert rc == EXIT_OK
    log = json.loads(read(tmp_path / "a" / "actions.json"))
    assert log[0]["actions"] == []


def test_game_trivial_and_seeded(tmp_path):
    assert (
        run(["game", "--seeded-classes", "0", "--out", str(tmp_path / "g0")])
        == EXIT_OK
    )
    rc = run(
        [
            "game",
            "--seeded-classes",
            "6",
            "--seed",
            "11",
            "--depth",
            "12",
            "--out",
            str(tmp_path / "g"),
        ]
    )
    assert rc == EXIT_OK
    doc = json.loads(read(tmp_path / "g" / "transcript.json"))
    assert len(doc["certificates"]) == 6


def test_game_explicit_class_file(tmp_path):
    # Exclusions covering every doubled depth-2 position, so player 1 can
    # certify from any opponent opening: both single-rooted doubled codes
    # and the full depth-2 code.
    pres = TreeClassPresentation(
        [
            (0, BitString.from_text("1011")),
            (0, BitString.from_text("0111")),
            (0, BitString.from_text("111111")),
        ]
    )
    path = tmp_path / "cls.txt"
    path.write_text(pres.save())
    rc = run(
        ["game", "--classes", str(path), "--seed", "2", "--out", str(tmp_path / "g")]
    )
    assert rc == EXIT_OK


def test_replay_reproduces_bytes(tmp_path):
    out1 = tmp_path / "r1"
    rc = run(
        [
            "construct",
            "fat-set",
            "--n-max",
            "8",
            "--seed",
            "9",
            "--out",
            str(out1),
        ]
    )
    assert rc == EXIT_OK
    out2 = tmp_path / "r2"
    rc = run(["replay", str(out1 / "manifest.json"), "--out", str(out2)])
    assert rc == EXIT_OK
    assert read(out1 / "fat_set.txt") == read(out2 / "fat_set.txt")
    assert read(out1 / "manifest.json") == read(out2 / "manifest.json")


def test_machine_state_flag(tmp_path):
    machine = ReferenceMachine()
    machine.register(PrefixFreeCodebook([(BitString.from_text("0"), BitString(6, 33))]))
    ms = tmp_path / "machine.json"
    ms.write_text(machine.dump())
    t = Tree([[BitString(n, 33 >> (6 - n)) for _ in range(1)] for n in range(7)])
    tp = tmp_path / "tree.txt"
    tp.write_text(t.save())
    rc = run(
        [
            "profile",
            str(tp),
            "--machine-state",
            str(ms),
            "--out",
            str(tmp_path / "p"),
        ]
    )
    assert rc == EXIT_OK
    rows = read(tmp_path / "p" / "profile.csv").splitlines()
    # The compressed string at level 6 shows deficiency 6 - 3 = 3.
    assert rows[7].split(",")[2] == "3"
