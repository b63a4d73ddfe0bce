import pytest

from prefixlab.bits import EMPTY, BitString, MalformedCodeword, OracleStream
from prefixlab.trees import (
    PrunedTree,
    Tree,
    TreeClassPresentation,
    TreeError,
    TreePrefix,
    basic_open_member,
    fatness_check,
    prefix_code_length,
    properness_witness,
    prune_deadends,
    tree_prefix_code,
    tree_prefix_decode,
    width_profile,
)


def b(text):
    return BitString.from_text(text)


def levels_from_texts(*levels):
    return [[b(t) for t in level] for level in levels]


def full_tree(depth):
    return PrunedTree(
        [[BitString(n, v) for v in range(1 << n)] for n in range(depth + 1)]
    )


def single_path(depth, value=0):
    path = BitString(depth, value)
    return PrunedTree([[path.prefix(n)] for n in range(depth + 1)])


def random_pruned_prefix(stream, depth):
    levels = [[EMPTY]]
    for _ in range(depth):
        nxt = []
        for s in levels[-1]:
            cfg = 1 + stream.draw(2) % 3
            if cfg & 1:
                nxt.append(s.child(0))
            if cfg & 2:
                nxt.append(s.child(1))
        levels.append(nxt)
    return TreePrefix(levels)


# -- structure validation -------------------------------------------------


def test_tree_validation():
    with pytest.raises(TreeError):
        Tree(levels_from_texts([""], ["0"], ["11"]))  # 11's parent missing
    with pytest.raises(TreeError):
        PrunedTree(levels_from_texts([""], ["0", "1"], ["00"]))  # deadend at "1"
    t = Tree(levels_from_texts([""], ["0", "1"], ["00"]))
    assert t.widths() == [1, 2, 1]


def test_width_profile_examples():
    assert width_profile(single_path(5)) == [1, 1, 1, 1, 1, 1]
    assert width_profile(full_tree(3)) == [1, 2, 4, 8]


def test_prune_deadends_examples():
    t = prune_deadends(levels_from_texts([""], ["0", "1"], ["00"]))
    assert t.widths() == [1, 1, 1]
    assert [s.text() for s in t.level(1)] == ["0"]
    again = prune_deadends([list(l) for l in t.levels])
    assert again == t  # idempotent
    empty = prune_deadends(levels_from_texts([""], ["0"], []))
    assert empty.is_empty()
    with pytest.raises(TreeError):
        prune_deadends(levels_from_texts([""], [], ["00"]))


def test_prune_widths_pointwise_bounded():
    stream = OracleStream(55)
    for _ in range(100):
        levels = [[EMPTY]]
        for _ in range(stream.draw(3) % 6 + 1):
            nxt = []
            for s in levels[-1]:
                cfg = stream.draw(2)  # 0 allowed: creates deadends
                if cfg & 1:
                    nxt.append(s.child(0))
                if cfg & 2:
                    nxt.append(s.child(1))
            levels.append(nxt)
        raw = Tree(levels)
        pruned = prune_deadends(levels)
        for n in range(pruned.depth + 1):
            assert len(pruned.level(n)) <= len(raw.level(n))


def test_tree_file_roundtrip():
    t = Tree(levels_from_texts([""], ["0", "1"], ["00", "10"]))
    assert Tree.parse(t.save()) == t
    with pytest.raises(TreeError):
        Tree.parse("level 1:\n0\n")


# -- fatness ---------------------------------------------------------------


def test_fatness_examples():
    one_per_level = [[BitString(n, 0)] for n in range(6)]
    assert fatness_check(one_per_level, [1] * 6) == [True] * 6
    assert fatness_check([[] for _ in range(4)], [1] * 4) == [False] * 4
    with pytest.raises(TreeError):
        fatness_check(one_per_level, [3, 2, 1, 1, 1, 1])


def test_fatness_uses_running_max():
    # Width profile [1,4,1]: the running max keeps level 2 fat.
    levels = [
        [EMPTY],
        [],
        [],
    ]
    levels[1] = [BitString(1, 0), BitString(1, 1)]
    levels[2] = [BitString(2, v) for v in range(4)]
    sets = [levels[0], levels[2], levels[1]]
    assert fatness_check(sets, [1, 2, 2]) == [True, True, True]


# -- prefix coding ----------------------------------------------------------


def test_code_examples():
    assert tree_prefix_code(TreePrefix([[EMPTY]])) == EMPTY
    assert tree_prefix_code(full_tree(1)).text() == "11"
    assert tree_prefix_code(single_path(1)).text() == "10"


def test_code_roundtrip_random():
    stream = OracleStream(2024)
    for _ in range(1000):
        depth = stream.draw(3) % 8 + 1
        f = random_pruned_prefix(stream, depth)
        code = tree_prefix_code(f)
        assert tree_prefix_decode(code) == f
        assert len(code) == prefix_code_length(f.widths())


def test_code_prefix_monotone():
    stream = OracleStream(77)
    for _ in range(200):
        f = random_pruned_prefix(stream, 6)
        code = tree_prefix_code(f)
        for d in range(f.depth + 1):
            sub = TreePrefix(f.levels[: d + 1])
            assert tree_prefix_code(sub).is_prefix_of(code)


def test_decode_rejects_bad_bitmaps():
    with pytest.raises(MalformedCodeword):
        tree_prefix_decode(b("00"))  # deadend at the root
    with pytest.raises(MalformedCodeword):
        tree_prefix_decode(b("111"))  # truncated level bitmap
    with pytest.raises(MalformedCodeword):
        tree_prefix_decode(b("11" + "1100"))  # deadend below "1"


# -- basic opens -------------------------------------------------------------


def test_basic_open_member():
    t = full_tree(4)
    f = TreePrefix(t.levels[:3])
    assert basic_open_member(f, t)
    narrower = TreePrefix(
        levels_from_texts([""], ["0", "1"], ["00", "10"])
    )
    assert not basic_open_member(narrower, t)
    with pytest.raises(TreeError):
        basic_open_member(TreePrefix(full_tree(5).levels), t)


def test_basic_open_monotone_consistency():
    stream = OracleStream(11)
    for _ in range(100):
        t = random_pruned_prefix(stream, 6)
        f = TreePrefix(t.levels[:3])
        f2 = TreePrefix(t.levels[:5])
        assert basic_open_member(f, t)
        assert basic_open_member(f2, t)
        assert f2.extends(f)


# -- presentations and the witness search ------------------------------------


def all_prefixes(depth):
    out = []

    def rec(levels):
        if len(levels) - 1 == depth:
            out.append(TreePrefix([list(l) for l in levels]))
            return
        prev = levels[-1]

        def assign(i, nxt):
            if i == len(prev):
                rec(levels + [nxt])
                return
            s = prev[i]
            for cfg in (1, 2, 3):
                add = []
                if cfg & 1:
                    add.append(s.child(0))
                if cfg & 2:
                    add.append(s.child(1))
                assign(i + 1, nxt + add)

        assign(0, [])

    rec([[EMPTY]])
    return out


def test_presentation_roundtrip_and_monotone():
    p = TreeClassPresentation([(0, b("10")), (2, b("11"))])
    assert p.exclusions_at(0) == (b("10"),)
    assert set(p.exclusions_at(2)) == {b("10"), b("11")}
    assert TreeClassPresentation.parse(p.save()).exclusions_at(5) == p.exclusions_at(5)
    with pytest.raises(TreeError):
        TreeClassPresentation([(-1, b("1"))])


def test_properness_witness_narrow_exclusions():
    # Exclude, at stage 0, every depth-2k prefix of width <= k; then the
    # least witness depth for k is exactly 2k.
    k_max = 2
    items = []
    for k in range(1, k_max + 1):
        for f in all_prefixes(2 * k):
            if len(f.levels[-1]) <= k:
                items.append((0, tree_prefix_code(f)))
    pres = TreeClassPresentation(items)
    res = properness_witness(pres, k_max, stage=0, depth_max=6)
    assert res.depths == {1: 2, 2: 4}


def test_properness_witness_single_path_times_out():
    pres = TreeClassPresentation([])  # nothing excluded: narrow trees survive
    res = properness_witness(pres, 1, stage=0, depth_max=5)
    assert res.depths == {1: None}


def test_properness_witness_budget_zero():
    pres = TreeClassPresentation([])
    res = properness_witness(pres, 1, stage=0, depth_max=0)
    assert res.depths == {1: None}
