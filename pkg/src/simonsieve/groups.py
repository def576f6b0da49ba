"""Finite groups as explicit multiplication tables with 0-based element indices."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

DEFAULT_ORDER_BOUND = 24


class GroupError(ValueError):
    """Malformed group table, group spec, or subgroup argument."""


@dataclass(frozen=True)
class GroupTable:
    """A finite group given by its full multiplication table.

    Conjugacy classes are canonically ordered: the identity's class first,
    then ascending class size, ties broken by the smallest member index.
    Catalog constructors always put the identity at index 0.
    """

    order: int
    mul: tuple[tuple[int, ...], ...]
    inv: tuple[int, ...]
    identity: int
    names: tuple[str, ...]
    classes: tuple[tuple[int, ...], ...]

    @cached_property
    def class_index(self) -> tuple[int, ...]:
        """Element index -> index of its conjugacy class."""
        out = [0] * self.order
        for ci, cls in enumerate(self.classes):
            for g in cls:
                out[g] = ci
        return tuple(out)

    @cached_property
    def name_index(self) -> dict[str, int]:
        return {nm: i for i, nm in enumerate(self.names)}

    @cached_property
    def mul_array(self) -> np.ndarray:
        arr = np.array(self.mul, dtype=np.intp)
        arr.setflags(write=False)
        return arr

    def elements(self) -> range:
        return range(self.order)

    def conj(self, h: int, g: int) -> int:
        """h * g * h^{-1}."""
        return self.mul[self.mul[h][g]][self.inv[h]]

    def element_order(self, g: int) -> int:
        k, x = 1, g
        while x != self.identity:
            x = self.mul[x][g]
            k += 1
        return k

    def parse_element(self, text: str) -> int:
        """Resolve an element given by display name or decimal index."""
        if text in self.name_index:
            return self.name_index[text]
        try:
            idx = int(text)
        except ValueError:
            raise GroupError(f"unknown element {text!r}") from None
        if not 0 <= idx < self.order:
            raise GroupError(f"element index {idx} out of range 0..{self.order - 1}")
        return idx


@dataclass(frozen=True)
class SubgroupSpec:
    """A subgroup as a sorted tuple of element indices."""

    elements: tuple[int, ...]

    def __contains__(self, g: int) -> bool:
        return g in set(self.elements)

    def __len__(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class GroupSpec:
    """Catalog name (Z/D/S/Q8/W) with parameter, or a custom table file."""

    kind: str  # "Z" | "D" | "S" | "Q8" | "W" | "file"
    param: object = None

    def describe(self) -> str:
        if self.kind == "file":
            return f"file:{self.param}"
        if self.kind == "Q8":
            return "Q8"
        if self.kind == "W":
            return f"W({self.param.describe()})"
        return f"{self.kind}{self.param}"


def parse_group_spec(text: str) -> GroupSpec:
    """Parse a catalog group name like Z6, D4, S3, Q8 or W(Z2)."""
    s = text.strip()
    if s.upper() == "Q8":
        return GroupSpec("Q8")
    if s.upper().startswith("W(") and s.endswith(")"):
        inner = parse_group_spec(s[2:-1])
        if inner.kind == "W":
            raise GroupError("only a single wreath layer is supported")
        return GroupSpec("W", inner)
    head, tail = s[:1].upper(), s[1:]
    if head in ("Z", "D", "S") and tail.isdigit():
        return GroupSpec(head, int(tail))
    raise GroupError(f"unrecognized group spec {text!r}")


# ---------------------------------------------------------------------------
# table validation


def _conjugacy_classes(mul: np.ndarray, inv: list[int], identity: int) -> tuple[tuple[int, ...], ...]:
    n = len(inv)
    seen = [False] * n
    classes = []
    for g in range(n):
        if seen[g]:
            continue
        orbit = {int(mul[mul[h, g], inv[h]]) for h in range(n)}
        for x in orbit:
            seen[x] = True
        classes.append(tuple(sorted(orbit)))
    ident_cls = next(c for c in classes if identity in c)
    rest = sorted((c for c in classes if c is not ident_cls), key=lambda c: (len(c), c[0]))
    return tuple([ident_cls] + rest)


def table_from_mul(
    mul,
    names=None,
    order_bound: int | None = DEFAULT_ORDER_BOUND,
) -> GroupTable:
    """Validate a raw multiplication table and build a GroupTable.

    Checks: square Latin square, associativity (exhaustive), identity,
    two-sided inverses. Raises GroupError on any failure.
    """
    M = np.asarray(mul, dtype=np.intp)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise GroupError("multiplication table must be square and nonempty")
    n = M.shape[0]
    if order_bound is not None and n > order_bound:
        raise GroupError(f"order {n} exceeds configured bound {order_bound}")
    if M.min() < 0 or M.max() >= n:
        raise GroupError("table entries out of range")
    full = np.arange(n)
    for a in range(n):
        if not (np.array_equal(np.sort(M[a]), full) and np.array_equal(np.sort(M[:, a]), full)):
            raise GroupError(f"table is not a Latin square at row/column {a}")
    # M[M[a,b],c] vs M[a,M[b,c]], all triples at once
    if not np.array_equal(M[M, :], M[:, M]):
        raise GroupError("multiplication table is not associative")
    identity = None
    for e in range(n):
        if np.array_equal(M[e], full) and np.array_equal(M[:, e], full):
            identity = e
            break
    if identity is None:
        raise GroupError("table has no identity element")
    inv = [0] * n
    for a in range(n):
        b = int(np.nonzero(M[a] == identity)[0][0])
        if M[b, a] != identity:
            raise GroupError(f"element {a} has no two-sided inverse")
        inv[a] = b
    if names is None:
        names = [str(i) for i in range(n)]
    names = [str(x) for x in names]
    if len(names) != n:
        raise GroupError("names list length does not match order")
    if len(set(names)) != n:
        raise GroupError("element names must be unique")
    classes = _conjugacy_classes(M, inv, identity)
    return GroupTable(
        order=n,
        mul=tuple(tuple(int(x) for x in row) for row in M),
        inv=tuple(inv),
        identity=identity,
        names=tuple(names),
        classes=classes,
    )


# ---------------------------------------------------------------------------
# catalog constructors (identity is always index 0)


def _zm_table(m: int):
    mul = [[(a + b) % m for b in range(m)] for a in range(m)]
    return mul, [str(i) for i in range(m)]


def _dk_table(k: int):
    # element t*k+i encodes s^t r^i with relations r^k = s^2 = 1, s r s = r^-1
    def code(t, i):
        return t * k + i

    mul = [[0] * (2 * k) for _ in range(2 * k)]
    for t, i, u, j in itertools.product(range(2), range(k), range(2), range(k)):
        ni = (i + j) % k if u == 0 else (j - i) % k
        mul[code(t, i)][code(u, j)] = code((t + u) % 2, ni)
    names = [f"r{i}" for i in range(k)] + [f"s{i}" for i in range(k)]
    return mul, names


def _perm_cycles(p: tuple[int, ...]) -> str:
    seen = [False] * len(p)
    parts = []
    for s in range(len(p)):
        if seen[s] or p[s] == s:
            seen[s] = True
            continue
        cyc, x = [], s
        while not seen[x]:
            seen[x] = True
            cyc.append(x)
            x = p[x]
        parts.append("(" + "".join(str(v) for v in cyc) + ")")
    return "".join(parts) if parts else "e"


def _sk_table(k: int):
    perms = sorted(itertools.permutations(range(k)))
    index = {p: i for i, p in enumerate(perms)}
    mul = [
        [index[tuple(p[q[i]] for i in range(k))] for q in perms]
        for p in perms
    ]
    return mul, [_perm_cycles(p) for p in perms]


_Q8_AXIS_MUL = {
    # (a, b) -> (axis, sign) for the products of 1,i,j,k
    (0, 0): (0, 1), (0, 1): (1, 1), (0, 2): (2, 1), (0, 3): (3, 1),
    (1, 0): (1, 1), (1, 1): (0, -1), (1, 2): (3, 1), (1, 3): (2, -1),
    (2, 0): (2, 1), (2, 1): (3, -1), (2, 2): (0, -1), (2, 3): (1, 1),
    (3, 0): (3, 1), (3, 1): (2, 1), (3, 2): (1, -1), (3, 3): (0, -1),
}


def _q8_table():
    # element 2*axis+s encodes (-1)^s * e_axis with e = (1, i, j, k)
    def code(axis, s):
        return 2 * axis + s

    mul = [[0] * 8 for _ in range(8)]
    for a, s, b, t in itertools.product(range(4), range(2), range(4), range(2)):
        axis, sign = _Q8_AXIS_MUL[(a, b)]
        u = (s + t + (1 if sign < 0 else 0)) % 2
        mul[code(a, s)][code(b, t)] = code(axis, u)
    names = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"]
    return mul, names


def _wreath_table(inner: GroupTable):
    # pairs-plus-flip: element t*q^2 + a*q + b encodes ((a, b), t); the flip
    # swaps the pair, semidirect-product style
    q = inner.order
    im = inner.mul

    def code(t, a, b):
        return t * q * q + a * q + b

    order = 2 * q * q
    mul = [[0] * order for _ in range(order)]
    for t, a, b, u, c, d in itertools.product(range(2), range(q), range(q), range(2), range(q), range(q)):
        if t == 0:
            pa, pb = im[a][c], im[b][d]
        else:
            pa, pb = im[a][d], im[b][c]
        mul[code(t, a, b)][code(u, c, d)] = code((t + u) % 2, pa, pb)
    names = [
        f"({inner.names[a]}|{inner.names[b]};{t})"
        for t in range(2)
        for a in range(q)
        for b in range(q)
    ]
    return mul, names


def build_group(spec: GroupSpec | str, order_bound: int | None = DEFAULT_ORDER_BOUND) -> GroupTable:
    """Build and validate a catalog group or a custom table file."""
    if isinstance(spec, str):
        spec = parse_group_spec(spec)
    if spec.kind == "Z":
        if spec.param < 1:
            raise GroupError("Z parameter must be >= 1")
        mul, names = _zm_table(spec.param)
    elif spec.kind == "D":
        if spec.param < 1:
            raise GroupError("D parameter must be >= 1")
        mul, names = _dk_table(spec.param)
    elif spec.kind == "S":
        if not 1 <= spec.param <= 4:
            raise GroupError("S parameter must be between 1 and 4")
        mul, names = _sk_table(spec.param)
    elif spec.kind == "Q8":
        mul, names = _q8_table()
    elif spec.kind == "W":
        inner = build_group(spec.param, order_bound=order_bound)
        mul, names = _wreath_table(inner)
    elif spec.kind == "file":
        return parse_group_file(Path(spec.param).read_text(encoding="utf-8"), order_bound=order_bound)
    else:
        raise GroupError(f"unknown spec kind {spec.kind!r}")
    return table_from_mul(mul, names, order_bound=order_bound)


# ---------------------------------------------------------------------------
# custom table file format


def parse_group_file(text: str, order_bound: int | None = DEFAULT_ORDER_BOUND) -> GroupTable:
    """Parse the custom group format: order line, r table rows, optional names row."""
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise GroupError("empty group file")
    try:
        r = int(lines[0])
    except ValueError:
        raise GroupError(f"first line must be the group order, got {lines[0]!r}") from None
    if r < 1:
        raise GroupError("order must be positive")
    if len(lines) < r + 1:
        raise GroupError(f"expected {r} table rows, found {len(lines) - 1}")
    mul = []
    for ln in lines[1 : r + 1]:
        try:
            row = [int(tok) for tok in ln.split()]
        except ValueError:
            raise GroupError(f"non-integer table entry in row {ln!r}") from None
        if len(row) != r:
            raise GroupError(f"table row has {len(row)} entries, expected {r}")
        mul.append(row)
    names = None
    rest = lines[r + 1 :]
    if rest:
        names = rest[0].split()
        if len(names) != r:
            raise GroupError(f"names line has {len(names)} entries, expected {r}")
        rest = rest[1:]
    if rest:
        raise GroupError(f"trailing garbage after table: {rest[0]!r}")
    return table_from_mul(mul, names, order_bound=order_bound)


def export_group(group: GroupTable) -> str:
    """Write the custom format; parse_group_file(export_group(G)) reproduces G."""
    lines = [str(group.order)]
    lines.extend(" ".join(str(x) for x in row) for row in group.mul)
    lines.append(" ".join(group.names))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# structural queries


def subgroup_from_elements(group: GroupTable, elements) -> SubgroupSpec:
    """Validate closure, inverses, identity; return the canonical SubgroupSpec."""
    elems = sorted(set(int(x) for x in elements))
    eset = set(elems)
    if group.identity not in eset:
        raise GroupError("subgroup must contain the identity")
    for a in elems:
        if group.inv[a] not in eset:
            raise GroupError(f"subgroup not closed under inverse at {a}")
        for b in elems:
            if group.mul[a][b] not in eset:
                raise GroupError(f"subgroup not closed under product at ({a},{b})")
    return SubgroupSpec(tuple(elems))


def closure(group: GroupTable, seed) -> set[int]:
    """Multiplicative closure of a subset (a subgroup, since G is finite)."""
    elems = set(seed) | {group.identity}
    frontier = list(elems)
    while frontier:
        nxt = []
        for a in frontier:
            for b in list(elems):
                for c in (group.mul[a][b], group.mul[b][a]):
                    if c not in elems:
                        elems.add(c)
                        nxt.append(c)
        frontier = nxt
    return elems


def commutator_subgroup(group: GroupTable) -> SubgroupSpec:
    """Smallest subgroup containing all g^-1 h^-1 g h."""
    comms = set()
    for g in group.elements():
        for h in group.elements():
            gh = group.mul[group.mul[group.inv[g]][group.inv[h]]][group.mul[g][h]]
            comms.add(gh)
    return subgroup_from_elements(group, closure(group, comms))


def normal_subgroups(group: GroupTable) -> list[SubgroupSpec]:
    """All normal subgroups, as closed unions of conjugacy classes.

    Every normal subgroup is the join of the normal closures of the classes it
    contains, so the join-closure of the per-class principal subgroups
    enumerates them all exactly once.
    """
    principal = []
    for cls in group.classes:
        principal.append(frozenset(closure(group, cls)))
    found = {frozenset({group.identity})}
    frontier = [frozenset({group.identity})]
    while frontier:
        nxt = []
        for sub in frontier:
            for p in principal:
                joined = frozenset(closure(group, sub | p))
                if joined not in found:
                    found.add(joined)
                    nxt.append(joined)
        frontier = nxt
    return [
        subgroup_from_elements(group, s)
        for s in sorted(found, key=lambda s: (len(s), tuple(sorted(s))))
    ]


def is_normal(group: GroupTable, sub: SubgroupSpec) -> bool:
    eset = set(sub.elements)
    return all(group.conj(h, g) in eset for g in sub.elements for h in group.elements())


def quotient_group(group: GroupTable, normal: SubgroupSpec) -> tuple[GroupTable, tuple[int, ...]]:
    """Quotient table plus the projection map element -> coset index."""
    subgroup_from_elements(group, normal.elements)  # re-validate
    if not is_normal(group, normal):
        raise GroupError("subgroup is not normal")
    nset = list(normal.elements)
    coset_of = {}
    reps = []
    for g in group.elements():
        if g in coset_of:
            continue
        coset = {group.mul[g][h] for h in nset}
        rep = min(coset)
        reps.append(rep)
        for x in coset:
            coset_of[x] = rep
    reps.sort()
    rep_index = {r: i for i, r in enumerate(reps)}
    proj = tuple(rep_index[coset_of[g]] for g in group.elements())
    q = len(reps)
    qmul = [[0] * q for _ in range(q)]
    for i, a in enumerate(reps):
        for j, b in enumerate(reps):
            qmul[i][j] = proj[group.mul[a][b]]
    for g in group.elements():
        for h in group.elements():
            if proj[group.mul[g][h]] != qmul[proj[g]][proj[h]]:
                raise GroupError("quotient multiplication is not well-defined")
    names = [f"[{group.names[r]}]" for r in reps]
    return table_from_mul(qmul, names, order_bound=None), proj


def involutions(group: GroupTable) -> list[int]:
    """All g != identity with g*g = identity."""
    e = group.identity
    return [g for g in group.elements() if g != e and group.mul[g][g] == e]


def conjugacy_class_of(group: GroupTable, g: int) -> tuple[int, ...]:
    return group.classes[group.class_index[g]]


def center(group: GroupTable) -> SubgroupSpec:
    members = [
        g
        for g in group.elements()
        if all(group.mul[g][h] == group.mul[h][g] for h in group.elements())
    ]
    return subgroup_from_elements(group, members)
