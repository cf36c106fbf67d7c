import pytest
from hypothesis import given, strategies as st

from sdrkms.errors import TopologyError
from sdrkms.nodes import build_tree, kdms_forward, subtree, validate_tree

EDGES = {"root": ["a", "b"], "a": ["a1", "a2"], "b": ["b1", "b2"],
         "a1": ["l1", "l2"], "a2": ["l3", "l4"], "b1": ["l5", "l6"], "b2": ["l7", "l8"]}
LEAVES = [f"l{i}" for i in range(1, 9)]


def test_validate_returns_root():
    assert validate_tree(build_tree(EDGES)) == "root"
    assert subtree(build_tree(EDGES), "a") == {"a", "a1", "a2", "l1", "l2", "l3", "l4"}


@given(st.sets(st.sampled_from(LEAVES), min_size=1))
def test_each_target_gets_exactly_one_copy(targets):
    tree = build_tree(EDGES)
    trace = kdms_forward(tree, b"pkg", "root", sorted(targets))
    assert trace.delivered == {t: 1 for t in targets}
    reached = {dst for _, dst in trace.hops}
    # only stations on a path to a target hold the package
    needed = {n for n in tree if subtree(tree, n) & targets} - {"root"}
    assert reached == needed
    assert len(trace.hops) == len(reached)


def test_forward_from_inner_station():
    tree = build_tree(EDGES)
    assert kdms_forward(tree, b"p", "a", ["l1", "l4"]).delivered == {"l1": 1, "l4": 1}
    with pytest.raises(TopologyError):
        kdms_forward(tree, b"p", "a", ["l5"])
    with pytest.raises(TopologyError):
        kdms_forward(tree, b"p", "root", ["a1"])


def test_cycle_means_no_delivery():
    tree = build_tree(EDGES)
    tree["root"].parent = "l8"
    tree["l8"].children.append("root")
    with pytest.raises(TopologyError):
        kdms_forward(tree, b"pkg", "root", LEAVES)
    assert all(not node.pending for node in tree.values())


@pytest.mark.parametrize("edges", [
    {"r": ["a"], "x": ["b"]},              # two roots
    {"r": ["a"], "a": ["r"]},              # cycle, no root
    {"r": ["a", "a"]},                     # duplicate child
])
def test_malformed_topologies(edges):
    with pytest.raises(TopologyError):
        validate_tree(build_tree(edges))


def test_two_parents_rejected_on_build():
    with pytest.raises(TopologyError):
        build_tree({"r": ["a", "b"], "a": ["c"], "b": ["c"]})


def test_orphan_and_dangling_reference():
    tree = build_tree({"r": ["a"]})
    tree["a"].parent = "ghost"
    with pytest.raises(TopologyError):
        validate_tree(tree)
