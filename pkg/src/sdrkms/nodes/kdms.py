"""Key distribution tree: stations fan packages out to their children."""

from collections import deque
from dataclasses import dataclass, field

from ..errors import TopologyError


@dataclass
class KdmsNode:
    node_id: str
    parent: str | None = None
    children: list = field(default_factory=list)
    pending: deque = field(default_factory=deque)


@dataclass
class DeliveryTrace:
    hops: list = field(default_factory=list)        # (from, to) in delivery order
    delivered: dict = field(default_factory=dict)   # final node -> copies received


def build_tree(edges: dict) -> dict[str, KdmsNode]:
    """Nodes from a ``parent -> [children]`` mapping."""
    nodes: dict[str, KdmsNode] = {}
    for parent, children in edges.items():
        nodes.setdefault(parent, KdmsNode(parent))
        for child in children:
            node = nodes.setdefault(child, KdmsNode(child))
            if node.parent is not None and node.parent != parent:
                raise TopologyError(f"{child} has two parents: {node.parent}, {parent}")
            node.parent = parent
            nodes[parent].children.append(child)
    return nodes


def _as_map(tree) -> dict[str, KdmsNode]:
    if isinstance(tree, dict):
        return tree
    return {n.node_id: n for n in tree}


def validate_tree(tree) -> str:
    """Return the root id or raise TopologyError."""
    nodes = _as_map(tree)
    if not nodes:
        raise TopologyError("empty topology")
    roots = [n.node_id for n in nodes.values() if n.parent is None]
    for n in nodes.values():
        if n.parent is not None:
            if n.parent not in nodes:
                raise TopologyError(f"{n.node_id} names undefined parent {n.parent}")
            if n.node_id not in nodes[n.parent].children:
                raise TopologyError(f"{n.parent} does not list its child {n.node_id}")
        for c in n.children:
            if c not in nodes:
                raise TopologyError(f"{n.node_id} names undefined child {c}")
            if nodes[c].parent != n.node_id:
                raise TopologyError(f"{c} is listed under {n.node_id} but its parent is {nodes[c].parent}")
        if len(set(n.children)) != len(n.children):
            raise TopologyError(f"{n.node_id} lists a child twice")
    if len(roots) != 1:
        raise TopologyError(f"expected one root, found {len(roots)}")
    seen = {roots[0]}
    queue = deque([roots[0]])
    while queue:
        for c in nodes[queue.popleft()].children:
            if c in seen:
                raise TopologyError(f"cycle through {c}")
            seen.add(c)
            queue.append(c)
    if len(seen) != len(nodes):
        orphans = sorted(set(nodes) - seen)
        raise TopologyError(f"nodes unreachable from the root (cycle or orphan): {', '.join(orphans)}")
    return roots[0]


def subtree(tree, node_id: str) -> set[str]:
    nodes = _as_map(tree)
    out, stack = set(), [node_id]
    while stack:
        n = stack.pop()
        out.add(n)
        stack.extend(nodes[n].children)
    return out


def kdms_forward(tree, package, at: str, targets) -> DeliveryTrace:
    """Replicate ``package`` from station ``at`` down to every target.

    The topology is validated before anything moves.  Each hop is listed
    once; only stations on a path to a target ever hold the package.
    """
    nodes = _as_map(tree)
    validate_tree(nodes)
    if at not in nodes:
        raise TopologyError(f"unknown station {at}")
    targets = list(dict.fromkeys(targets))
    below = subtree(nodes, at)
    for t in targets:
        if t not in below:
            raise TopologyError(f"target {t} is not below {at}")
        if nodes[t].children:
            raise TopologyError(f"target {t} is not a final node")
    wanted = set(targets)
    trace = DeliveryTrace()
    queue = deque([at])
    nodes[at].pending.append(package)
    while queue:
        cur = queue.popleft()
        if cur in wanted:
            trace.delivered[cur] = trace.delivered.get(cur, 0) + 1
        for c in nodes[cur].children:
            if subtree(nodes, c) & wanted:
                trace.hops.append((cur, c))
                nodes[c].pending.append(package)
                queue.append(c)
    return trace
