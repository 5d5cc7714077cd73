"""Causal DAG model: parsing, d-separation, backdoor adjustment-set search.

Graph text format (UTF-8), one statement per line; ``;`` also separates
statements, ``#`` starts a comment, whitespace is ignored:

    Z -> T
    Z -> Y; T -> Y
    @treatment T
    @outcome Y
    @unobserved U

Edges implicitly declare their endpoints as covariates.  A bare identifier
declares an isolated covariate node.  Role lines may appear in any order
and override the default ``covariate`` role.

All graph values are immutable; every function here is pure, so graphs can
be shared freely across threads.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from typing import Iterable, Mapping

from .errors import (
    CycleError,
    NotIdentifiableError,
    ParseError,
    RoleError,
    UnknownNodeError,
)

ROLES = ("covariate", "treatment", "outcome", "unobserved")

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class CausalGraph:
    """Directed acyclic graph over named nodes with causal roles.

    Node names are case-sensitive identifiers (``[A-Za-z_][A-Za-z0-9_]*``)
    so they can match CSV headers exactly.  At most one node may carry the
    ``treatment`` role and at most one the ``outcome`` role.
    """

    __slots__ = ("_roles", "_edges", "_parents", "_children")

    def __init__(
        self,
        nodes: Mapping[str, str] | Iterable[tuple[str, str]],
        edges: Iterable[tuple[str, str]] = (),
    ):
        roles = dict(nodes)
        for name, role in roles.items():
            if not _NAME_RE.match(name):
                raise ParseError(f"invalid node name {name!r}")
            if role not in ROLES:
                raise ParseError(f"invalid role {role!r} for node {name!r}")
        for role in ("treatment", "outcome"):
            carriers = [n for n, r in roles.items() if r == role]
            if len(carriers) > 1:
                raise RoleError(f"multiple {role} nodes: {sorted(carriers)}")

        edge_set = set()
        for a, b in edges:
            if a not in roles:
                raise UnknownNodeError(f"edge endpoint {a!r} is not a declared node")
            if b not in roles:
                raise UnknownNodeError(f"edge endpoint {b!r} is not a declared node")
            if a == b:
                raise CycleError(f"self-loop on {a!r}")
            edge_set.add((a, b))

        parents: dict[str, frozenset[str]] = {}
        children: dict[str, frozenset[str]] = {}
        for n in roles:
            parents[n] = frozenset(a for a, b in edge_set if b == n)
            children[n] = frozenset(b for a, b in edge_set if a == n)

        self._roles = dict(sorted(roles.items()))
        self._edges = frozenset(edge_set)
        self._parents = parents
        self._children = children
        self._check_acyclic()

    def _check_acyclic(self) -> None:
        indegree = {n: len(self._parents[n]) for n in self._roles}
        queue = deque(n for n, d in indegree.items() if d == 0)
        seen = 0
        while queue:
            n = queue.popleft()
            seen += 1
            for c in self._children[n]:
                indegree[c] -= 1
                if indegree[c] == 0:
                    queue.append(c)
        if seen != len(self._roles):
            cyclic = sorted(n for n, d in indegree.items() if d > 0)
            raise CycleError(f"graph has no topological order (cycle through {cyclic})")

    # -- accessors ------------------------------------------------------

    @property
    def nodes(self) -> tuple[str, ...]:
        return tuple(self._roles)

    @property
    def edges(self) -> frozenset[tuple[str, str]]:
        return self._edges

    def role(self, name: str) -> str:
        try:
            return self._roles[name]
        except KeyError:
            raise UnknownNodeError(f"unknown node {name!r}") from None

    @property
    def treatment(self) -> str | None:
        return next((n for n, r in self._roles.items() if r == "treatment"), None)

    @property
    def outcome(self) -> str | None:
        return next((n for n, r in self._roles.items() if r == "outcome"), None)

    @property
    def unobserved(self) -> frozenset[str]:
        return frozenset(n for n, r in self._roles.items() if r == "unobserved")

    @property
    def observed(self) -> frozenset[str]:
        return frozenset(n for n, r in self._roles.items() if r != "unobserved")

    def parents(self, name: str) -> frozenset[str]:
        self.role(name)
        return self._parents[name]

    def children(self, name: str) -> frozenset[str]:
        self.role(name)
        return self._children[name]

    def descendants(self, name: str) -> frozenset[str]:
        """All nodes reachable from ``name`` by a directed path (exclusive)."""
        self.role(name)
        out: set[str] = set()
        queue = deque(self._children[name])
        while queue:
            n = queue.popleft()
            if n not in out:
                out.add(n)
                queue.extend(self._children[n])
        return frozenset(out)

    def ancestral_closure(self, names: Iterable[str]) -> frozenset[str]:
        """The given nodes plus all their ancestors."""
        out: set[str] = set()
        queue = deque(names)
        while queue:
            n = queue.popleft()
            if n not in out:
                self.role(n)
                out.add(n)
                queue.extend(self._parents[n])
        return frozenset(out)

    def without_outgoing(self, name: str) -> "CausalGraph":
        """Copy of the graph with every edge out of ``name`` removed."""
        self.role(name)
        return CausalGraph(self._roles, [(a, b) for a, b in self._edges if a != name])

    # -- value semantics --------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CausalGraph):
            return NotImplemented
        return self._roles == other._roles and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((tuple(self._roles.items()), self._edges))

    def __repr__(self) -> str:
        return f"CausalGraph(nodes={len(self._roles)}, edges={len(self._edges)})"


def parse_graph(text: str) -> CausalGraph:
    """Parse the line-oriented graph format into a :class:`CausalGraph`.

    Raises :class:`ParseError` for malformed statements, :class:`CycleError`
    when the edges admit no topological order, and :class:`RoleError` when
    more than one node is declared treatment or outcome.
    """
    roles: dict[str, str] = {}
    declared_roles: dict[str, str] = {}
    edges: list[tuple[str, str]] = []

    def declare(name: str) -> None:
        if not _NAME_RE.match(name):
            raise ParseError(f"invalid node name {name!r}")
        roles.setdefault(name, "covariate")

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0]
        for stmt in line.split(";"):
            stmt = stmt.strip()
            if not stmt:
                continue
            if stmt.startswith("@"):
                parts = stmt[1:].split()
                if len(parts) != 2 or parts[0] not in ("treatment", "outcome", "unobserved"):
                    raise ParseError(f"line {lineno}: bad role statement {stmt!r}")
                role, name = parts
                declare(name)
                prev = declared_roles.get(name)
                if prev is not None and prev != role:
                    raise RoleError(
                        f"line {lineno}: node {name!r} declared both {prev} and {role}"
                    )
                declared_roles[name] = role
                roles[name] = role
            elif "->" in stmt:
                parts = [p.strip() for p in stmt.split("->")]
                if len(parts) != 2 or not all(parts):
                    raise ParseError(f"line {lineno}: bad edge statement {stmt!r}")
                a, b = parts
                declare(a)
                declare(b)
                edges.append((a, b))
            else:
                if len(stmt.split()) != 1:
                    raise ParseError(f"line {lineno}: cannot parse {stmt!r}")
                declare(stmt)

    return CausalGraph(roles, edges)


def serialize_graph(g: CausalGraph) -> str:
    """Canonical text for ``g``; ``parse_graph(serialize_graph(g)) == g``."""
    lines = [f"@{g.role(n)} {n}" for n in g.nodes if g.role(n) != "covariate"]
    touched = {n for e in g.edges for n in e}
    lines += [n for n in g.nodes if g.role(n) == "covariate" and n not in touched]
    lines += [f"{a} -> {b}" for a, b in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def d_separated(g: CausalGraph, a: str, b: str, z: Iterable[str] = ()) -> bool:
    """True iff every path between ``a`` and ``b`` is blocked by ``z``.

    Uses the moralized-ancestral-graph reachability method: restrict to the
    ancestral closure of ``{a, b} | z``, marry co-parents, drop directions,
    delete ``z``, and test connectivity.  Chains and forks are blocked by
    conditioning on the middle node; colliders are open only when the
    collider or one of its descendants is conditioned on.
    """
    zset = frozenset(z)
    for name in (a, b, *zset):
        g.role(name)
    if a == b:
        raise ValueError("d-separation of a node from itself is undefined")
    if a in zset or b in zset:
        raise ValueError("endpoints may not appear in the conditioning set")

    relevant = g.ancestral_closure({a, b} | zset)
    neighbors: dict[str, set[str]] = {n: set() for n in relevant}
    for u, v in g.edges:
        if u in relevant and v in relevant:
            neighbors[u].add(v)
            neighbors[v].add(u)
    for n in relevant:
        ps = [p for p in g.parents(n) if p in relevant]
        for p, q in itertools.combinations(ps, 2):
            neighbors[p].add(q)
            neighbors[q].add(p)

    seen = {a}
    queue = deque([a])
    while queue:
        n = queue.popleft()
        for m in neighbors[n]:
            if m == b:
                return False
            if m not in seen and m not in zset:
                seen.add(m)
                queue.append(m)
    return True


def backdoor_sets(
    g: CausalGraph, t: str, y: str, max_size: int = 8
) -> list[tuple[str, ...]]:
    """All minimal backdoor adjustment sets for the effect of ``t`` on ``y``.

    A valid set contains no descendant of ``t`` and no unobserved node, and
    d-separates ``t`` from ``y`` once the edges out of ``t`` are deleted.
    Candidate subsets are enumerated in increasing cardinality up to
    ``max_size``; supersets of already-found sets are skipped, so the result
    is exactly the minimal valid sets, ordered by size then lexicographically.

    Raises :class:`NotIdentifiableError` when no subset of observed
    non-descendants blocks every backdoor path.
    """
    if g.role(t) != "treatment":
        raise RoleError(f"node {t!r} does not have role treatment")
    if g.role(y) != "outcome":
        raise RoleError(f"node {y!r} does not have role outcome")

    trimmed = g.without_outgoing(t)
    forbidden = g.descendants(t) | {t, y} | g.unobserved
    candidates = sorted(set(g.nodes) - forbidden)

    minimal: list[tuple[str, ...]] = []
    for size in range(min(max_size, len(candidates)) + 1):
        for combo in itertools.combinations(candidates, size):
            cset = set(combo)
            if any(set(m) <= cset for m in minimal):
                continue
            if d_separated(trimmed, t, y, combo):
                minimal.append(combo)
    if not minimal:
        culprits = sorted(
            u
            for u in g.unobserved
            if t in g.descendants(u) and y in g.descendants(u)
        )
        raise NotIdentifiableError(
            f"no observed set blocks every backdoor path from {t!r} to {y!r}"
            + (f"; unobserved common causes: {culprits}" if culprits else "")
        )
    return minimal
