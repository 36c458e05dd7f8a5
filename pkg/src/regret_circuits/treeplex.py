"""Sequence-form strategy spaces (treeplexes) and the CFR circuit.

A treeplex is built from two kinds of nodes.  An information set is a convex
hull over its actions, each action's subtree being embedded into a common
space: the action's own coordinate is set to 1 and the subtree's vector goes
into the action's block.  An observation node is a Cartesian product of the
treeplexes that can follow it.  Within an information set block the action
coordinates come first, in declaration order, followed by the child blocks in
the same order.

Wiring RM/RM+/Hedge atoms through this construction yields CFR: the loss each
information-set mixer receives is the negated counterfactual value.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np

from .atoms import ConstantMinimizer
from .circuits.affine import AffineImage, BlockEmbedding
from .circuits.hull import ConvexHull
from .circuits.product import CartesianProduct
from .core import RegretLedger, RegretMinimizer, as_vector, tolerances
from .sets import ConvexSet, Polyhedron


class InfosetNode:
    kind = "infoset"

    def __init__(self, name: str, actions: Sequence[str], children: Sequence[Optional["Node"]]):
        self.name = str(name)
        self.actions = [str(a) for a in actions]
        if not self.actions:
            raise ValueError(f"infoset {self.name!r} has no actions")
        if len(set(self.actions)) != len(self.actions):
            raise ValueError(f"infoset {self.name!r} has duplicate action names")
        self.children = list(children)
        if len(self.children) != len(self.actions):
            raise ValueError(f"infoset {self.name!r}: {len(self.actions)} actions but {len(self.children)} children")
        self.child_dims = [0 if c is None else c.dim for c in self.children]
        self.dim = len(self.actions) + sum(self.child_dims)
        starts = np.cumsum([len(self.actions)] + self.child_dims)
        self.child_starts = [int(s) for s in starts[:-1]]

    def embed(self, action: int, child_vector=None) -> np.ndarray:
        """Point of the embedded set for ``action``: 1 at the action's index,
        the child's vector in its block, 0 elsewhere."""
        x = np.zeros(self.dim)
        x[action] = 1.0
        if self.children[action] is not None:
            n = self.child_dims[action]
            v = np.zeros(n) if child_vector is None else as_vector(child_vector, n)
            x[self.child_starts[action]:self.child_starts[action] + n] = v
        return x


class ObservationNode:
    kind = "observation"

    def __init__(self, children: Sequence["Node"], name: Optional[str] = None):
        self.children = list(children)
        if not self.children:
            raise ValueError("observation node needs at least one child")
        self.name = name
        self.dim = sum(c.dim for c in self.children)
        starts = np.cumsum([0] + [c.dim for c in self.children])
        self.child_starts = [int(s) for s in starts[:-1]]


Node = Union[InfosetNode, ObservationNode]


def build_infoset(name: str, actions: Sequence[str], children=None) -> InfosetNode:
    """Information-set node; ``children`` maps actions to subtrees (``None`` for a leaf)."""
    if children is None:
        children = [None] * len(actions)
    elif isinstance(children, dict):
        unknown = set(children) - set(map(str, actions))
        if unknown:
            raise ValueError(f"children given for unknown actions {sorted(unknown)}")
        children = [children.get(str(a)) for a in actions]
    return InfosetNode(name, actions, children)


def build_observation(children: Sequence[Node], name: Optional[str] = None) -> ObservationNode:
    return ObservationNode(children, name)


@dataclass(frozen=True)
class InfosetInfo:
    name: str
    actions: tuple[str, ...]
    indices: tuple[int, ...]
    parent: Optional[int]


def _walk(node: Node, start: int, parent: Optional[int], out: list, labels: list):
    if isinstance(node, InfosetNode):
        idx = tuple(start + i for i in range(len(node.actions)))
        out.append(InfosetInfo(node.name, tuple(node.actions), idx, parent))
        for i, a in enumerate(node.actions):
            labels[start + i] = f"{node.name}:{a}"
        for i, child in enumerate(node.children):
            if child is not None:
                _walk(child, start + node.child_starts[i], start + i, out, labels)
    else:
        for child, s in zip(node.children, node.child_starts):
            _walk(child, start + s, parent, out, labels)


class Treeplex(ConvexSet):
    """The sequence-form polytope described by a node tree."""

    def __init__(self, root: Node):
        self.root = root
        self.dim = root.dim
        self.infosets: list[InfosetInfo] = []
        self.labels: list[str] = [""] * self.dim
        _walk(root, 0, None, self.infosets, self.labels)
        self.by_name = {info.name: info for info in self.infosets}
        if len(self.by_name) != len(self.infosets):
            raise ValueError("information set names must be unique")
        self.index = {label: i for i, label in enumerate(self.labels)}

    def __repr__(self):
        return f"Treeplex(dim={self.dim}, infosets={len(self.infosets)})"

    def flow_violation(self, x) -> float:
        x = as_vector(x, self.dim)
        worst = max(0.0, -float(x.min()))
        for info in self.infosets:
            parent = 1.0 if info.parent is None else x[info.parent]
            worst = max(worst, abs(float(x[list(info.indices)].sum()) - parent))
        return worst

    def contains(self, x, tol=None):
        t = tolerances.feasibility if tol is None else tol
        return self.flow_violation(x) <= t

    def linear_minimizer(self, gradient):
        return treeplex_best_response(self.root, gradient)

    def as_polyhedron(self):
        rows, rhs = [], []
        for info in self.infosets:
            row = np.zeros(self.dim)
            row[list(info.indices)] = 1.0
            if info.parent is None:
                rhs.append(1.0)
            else:
                row[info.parent] = -1.0
                rhs.append(0.0)
            rows.append(row)
        return Polyhedron(self.dim, np.array(rows), rhs, -np.eye(self.dim), np.zeros(self.dim))

    def project(self, x):
        return self.as_polyhedron().project(x)

    def diameter_bound(self) -> float:
        # sequence-form coordinates lie in [0, 1]
        return math.sqrt(self.dim)

    def behavioral(self, x) -> dict[str, np.ndarray]:
        """Per-infoset action distributions; uniform where the infoset is unreached."""
        x = as_vector(x, self.dim)
        out = {}
        for info in self.infosets:
            parent = 1.0 if info.parent is None else x[info.parent]
            block = x[list(info.indices)]
            if parent > 0:
                out[info.name] = block / parent
            else:
                out[info.name] = np.full(len(info.indices), 1.0 / len(info.indices))
        return out

    def from_behavioral(self, behavior: dict) -> np.ndarray:
        x = np.zeros(self.dim)
        # infosets are listed parents-first by construction
        for info in self.infosets:
            parent = 1.0 if info.parent is None else x[info.parent]
            probs = as_vector(behavior[info.name], len(info.indices))
            x[list(info.indices)] = parent * probs
        return x

    def uniform(self) -> np.ndarray:
        return self.from_behavioral({i.name: np.full(len(i.actions), 1.0 / len(i.actions))
                                     for i in self.infosets})

    def pure_strategies(self) -> Iterator[np.ndarray]:
        """Every pure sequence-form strategy (one action per infoset)."""
        choices = [range(len(i.actions)) for i in self.infosets]
        seen = set()
        for combo in itertools.product(*choices):
            behavior = {}
            for info, a in zip(self.infosets, combo):
                p = np.zeros(len(info.actions))
                p[a] = 1.0
                behavior[info.name] = p
            x = self.from_behavioral(behavior)
            key = tuple(x)
            if key not in seen:
                seen.add(key)
                yield x


def treeplex_best_response(root: Union[Node, Treeplex], gradient) -> tuple[np.ndarray, float]:
    """Exact ``min <g, x>`` over the treeplex by bottom-up dynamic programming.

    Ties go to the lowest action index.
    """
    if isinstance(root, Treeplex):
        root = root.root
    g = as_vector(gradient, root.dim, "gradient")
    x = np.zeros(root.dim)
    value = _best(root, g, x, 0)
    return x, value


def _best(node: Node, g: np.ndarray, x: np.ndarray, start: int) -> float:
    if isinstance(node, ObservationNode):
        return sum(_best(c, g, x, start + s) for c, s in zip(node.children, node.child_starts))
    best_value, best_action, best_fill = np.inf, 0, None
    for i, child in enumerate(node.children):
        value = g[start + i]
        fill = None
        if child is not None:
            fill = np.zeros(child.dim)
            value += _best(child, g[start + node.child_starts[i]:], fill, 0)
        if value < best_value:
            best_value, best_action, best_fill = value, i, fill
    x[start + best_action] = 1.0
    if best_fill is not None:
        s = start + node.child_starts[best_action]
        x[s:s + best_fill.size] = best_fill
    return float(best_value)


class CFRMinimizer(RegretMinimizer):
    """Regret minimizer over a treeplex assembled from hull and product circuits."""

    kind = "cfr"

    def __init__(self, root: Node, atom_factory: Callable[[int], RegretMinimizer], history: bool = False):
        self.treeplex = root if isinstance(root, Treeplex) else Treeplex(root)
        super().__init__(self.treeplex.dim, history)
        self.atom_factory = atom_factory
        self.infoset_hulls: dict[str, ConvexHull] = {}
        self.infoset_atoms: dict[str, RegretMinimizer] = {}
        self.circuit = self._build(self.treeplex.root)
        self._sum = np.zeros(self.dim)

    def _build(self, node: Node) -> RegretMinimizer:
        if isinstance(node, ObservationNode):
            product = CartesianProduct([self._build(c) for c in node.children])
            return product
        members = []
        for i, child in enumerate(node.children):
            if child is None:
                members.append(ConstantMinimizer(node.embed(i)))
            else:
                unit = np.zeros(node.dim)
                unit[i] = 1.0
                members.append(AffineImage(self._build(child),
                                           BlockEmbedding(child.dim, node.dim, node.child_starts[i], unit)))
        if len(members) == 1:
            self.infoset_atoms[node.name] = members[0]
            return members[0]
        mixer = self.atom_factory(len(members))
        hull = ConvexHull(members, mixer)
        hull.kind = f"hull[{node.name}]"
        self.infoset_hulls[node.name] = hull
        self.infoset_atoms[node.name] = mixer
        return hull

    def _next(self):
        return self.circuit.next_decision()

    def _observe(self, loss):
        self._sum += self.last_decision
        self.circuit.observe(loss)

    def mixer_losses(self) -> dict[str, np.ndarray]:
        """The loss vector each infoset mixer received in the latest round."""
        return {name: hull.last_mixer_loss for name, hull in self.infoset_hulls.items()}

    def average(self) -> np.ndarray:
        if self.rounds == 0:
            raise ValueError("no rounds played")
        return self._sum / self.rounds

    def best_response(self, gradient):
        return treeplex_best_response(self.treeplex.root, gradient)

    def contains(self, x, tol=None):
        return self.treeplex.contains(x, tol)

    def domain(self):
        return self.treeplex

    def children(self):
        return [self.circuit]


def cfr_minimizer(root, atom_factory, history: bool = False) -> CFRMinimizer:
    return CFRMinimizer(root, atom_factory, history)


def average_strategy(ledger_or_decisions) -> np.ndarray:
    """Uniform average of sequence-form decisions."""
    if isinstance(ledger_or_decisions, RegretLedger):
        decisions = ledger_or_decisions.decisions
    else:
        decisions = list(ledger_or_decisions)
    if not decisions:
        raise ValueError("cannot average an empty ledger")
    return np.mean(np.stack(decisions), axis=0)


# ----------------------------------------------------------------------------
# plain-text description
#
#   root <id>
#   infoset <id> <action>[:<child-id>] ...
#   observation <id> <child-id> ...
#
# '#' starts a comment.  Children must be declared somewhere in the file.

class TreeplexFormatError(ValueError):
    pass


def parse_treeplex(text: str) -> Node:
    decls: dict[str, tuple[int, str, list[str]]] = {}
    root_id, root_line = None, 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, *rest = line.split()
        if kind == "root":
            if len(rest) != 1:
                raise TreeplexFormatError(f"line {lineno}: 'root' takes exactly one id")
            root_id, root_line = rest[0], lineno
        elif kind in ("infoset", "observation"):
            if len(rest) < 2:
                raise TreeplexFormatError(f"line {lineno}: {kind} needs an id and at least one entry")
            if rest[0] in decls:
                raise TreeplexFormatError(f"line {lineno}: duplicate node id {rest[0]!r}")
            decls[rest[0]] = (lineno, kind, rest[1:])
        else:
            raise TreeplexFormatError(f"line {lineno}: unknown node kind {kind!r}")
    if root_id is None:
        raise TreeplexFormatError("missing 'root' line")

    building: set[str] = set()

    def build(node_id: str, ref_line: int) -> Node:
        if node_id not in decls:
            raise TreeplexFormatError(f"line {ref_line}: undefined node {node_id!r}")
        if node_id in building:
            raise TreeplexFormatError(f"line {ref_line}: cycle through node {node_id!r}")
        building.add(node_id)
        lineno, kind, entries = decls[node_id]
        try:
            if kind == "observation":
                node = build_observation([build(c, lineno) for c in entries], name=node_id)
            else:
                actions, children = [], []
                for entry in entries:
                    action, _, child = entry.partition(":")
                    actions.append(action)
                    children.append(build(child, lineno) if child else None)
                node = build_infoset(node_id, actions, children)
        except TreeplexFormatError:
            raise
        except ValueError as exc:
            raise TreeplexFormatError(f"line {lineno}: {exc}") from exc
        building.discard(node_id)
        return node

    return build(root_id, root_line)


def load_treeplex(path) -> Node:
    with open(path) as fh:
        return parse_treeplex(fh.read())


def format_treeplex(root: Node) -> str:
    lines: list[str] = []
    counter = itertools.count()

    def emit(node: Node) -> str:
        node_id = node.name if node.name else f"obs{next(counter)}"
        if isinstance(node, ObservationNode):
            ids = [emit(c) for c in node.children]
            lines.append(f"observation {node_id} " + " ".join(ids))
        else:
            entries = []
            for a, c in zip(node.actions, node.children):
                entries.append(a if c is None else f"{a}:{emit(c)}")
            lines.append(f"infoset {node_id} " + " ".join(entries))
        return node_id

    root_id = emit(root)
    return "\n".join([f"root {root_id}"] + lines) + "\n"
