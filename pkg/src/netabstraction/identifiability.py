"""Block structure of the excitation map of an abstracted network.

Matrices are summarized per block as ``0`` (zero), ``D`` (square diagonal)
or ``*`` (anything). The algebra over these symbols is a sound
over-approximation: a concrete product or sum always conforms to the
predicted pattern, though a ``*`` may happen to be zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx

from .abstraction import Partition, _Blocks
from .errors import DimensionMismatch
from .network import NetworkModel
from .ratfun import TransferMatrix

ZERO_B, DIAG, STAR = "0", "D", "*"
_RANK = {ZERO_B: 0, DIAG: 1, STAR: 2}


@dataclass(frozen=True)
class StructurePattern:
    row_sizes: tuple
    col_sizes: tuple
    blocks: tuple

    def __post_init__(self):
        rs, cs = tuple(self.row_sizes), tuple(self.col_sizes)
        blocks = tuple(tuple(row) for row in self.blocks)
        if len(blocks) != len(rs) or any(len(r) != len(cs) for r in blocks):
            raise DimensionMismatch("block grid does not match the block sizes")
        norm = []
        for a, row in enumerate(blocks):
            out = []
            for b, sym in enumerate(row):
                if sym not in _RANK:
                    raise ValueError(f"unknown block symbol {sym!r}")
                if rs[a] == 0 or cs[b] == 0:
                    sym = ZERO_B
                if sym == DIAG and rs[a] != cs[b]:
                    raise ValueError("a diagonal block must be square")
                out.append(sym)
            norm.append(tuple(out))
        object.__setattr__(self, "row_sizes", rs)
        object.__setattr__(self, "col_sizes", cs)
        object.__setattr__(self, "blocks", tuple(norm))

    @property
    def rows(self) -> int:
        return len(self.row_sizes)

    @property
    def cols(self) -> int:
        return len(self.col_sizes)

    def __getitem__(self, ab) -> str:
        a, b = ab
        return self.blocks[a][b]

    def select_rows(self, idx: Sequence[int]) -> "StructurePattern":
        return StructurePattern(
            tuple(self.row_sizes[a] for a in idx), self.col_sizes, tuple(self.blocks[a] for a in idx)
        )

    def render(self) -> str:
        return "\n".join(" ".join(row) for row in self.blocks)

    def element_support(self) -> list[list[bool]]:
        """Entry-level structural nonzeros: ``D`` marks its diagonal, ``*`` everything."""
        grid = []
        for a, ra in enumerate(self.row_sizes):
            for r in range(ra):
                line = []
                for b, cb in enumerate(self.col_sizes):
                    sym = self.blocks[a][b]
                    line.extend(sym == STAR or (sym == DIAG and c == r) for c in range(cb))
                grid.append(line)
        return grid

    @classmethod
    def identity(cls, sizes: Sequence[int]) -> "StructurePattern":
        k = len(sizes)
        return cls(tuple(sizes), tuple(sizes), tuple(tuple(DIAG if a == b else ZERO_B for b in range(k)) for a in range(k)))

    @classmethod
    def from_rows(cls, row_sizes, col_sizes, text: str) -> "StructurePattern":
        """Parse ``"D * 0; 0 * D"`` style templates."""
        blocks = [row.split() for row in text.split(";")]
        return cls(tuple(row_sizes), tuple(col_sizes), tuple(tuple(r) for r in blocks))


def _mul_sym(a: str, b: str) -> str:
    if a == ZERO_B or b == ZERO_B:
        return ZERO_B
    if a == DIAG and b == DIAG:
        return DIAG
    return STAR


def _add_sym(a: str, b: str) -> str:
    if a == ZERO_B:
        return b
    if b == ZERO_B:
        return a
    if a == DIAG and b == DIAG:
        return DIAG
    return STAR


def pattern_mul(a: StructurePattern, b: StructurePattern) -> StructurePattern:
    if a.col_sizes != b.row_sizes:
        raise DimensionMismatch("block sizes do not conform for multiplication")
    blocks = []
    for x in range(a.rows):
        row = []
        for y in range(b.cols):
            acc = ZERO_B
            for k in range(a.cols):
                acc = _add_sym(acc, _mul_sym(a[x, k], b[k, y]))
            row.append(acc)
        blocks.append(tuple(row))
    return StructurePattern(a.row_sizes, b.col_sizes, tuple(blocks))


def pattern_add(a: StructurePattern, b: StructurePattern) -> StructurePattern:
    if (a.row_sizes, a.col_sizes) != (b.row_sizes, b.col_sizes):
        raise DimensionMismatch("block sizes differ")
    return StructurePattern(
        a.row_sizes,
        a.col_sizes,
        tuple(tuple(_add_sym(x, y) for x, y in zip(ra, rb)) for ra, rb in zip(a.blocks, b.blocks)),
    )


def classify_block(m: TransferMatrix) -> str:
    if m.rows == 0 or m.cols == 0 or m.is_zero():
        return ZERO_B
    if m.is_square() and all(not m[i, j] for i in range(m.rows) for j in range(m.cols) if i != j):
        return DIAG
    return STAR


def pattern_of(m: TransferMatrix, row_groups: Sequence[Sequence[int]], col_groups: Sequence[Sequence[int]] | None = None) -> StructurePattern:
    """Block pattern of ``m`` for the given row and column index groups."""
    col_groups = row_groups if col_groups is None else col_groups
    blocks = tuple(
        tuple(classify_block(m.select(rg, cg)) for cg in col_groups) for rg in row_groups
    )
    return StructurePattern(tuple(len(g) for g in row_groups), tuple(len(g) for g in col_groups), blocks)


def partition_groups(p: Partition) -> list[tuple]:
    return [p.s_tilde, p.l_set, p.v_set, p.z_tilde]


def conforms(actual: StructurePattern, predicted: StructurePattern) -> bool:
    """Every block of ``actual`` is at least as structured as predicted."""
    if (actual.row_sizes, actual.col_sizes) != (predicted.row_sizes, predicted.col_sizes):
        return False
    return all(
        _RANK[x] <= _RANK[y]
        for ra, rp in zip(actual.blocks, predicted.blocks)
        for x, y in zip(ra, rp)
    )


# ---------------------------------------------------------------------------
# Predicted structure of the abstracted excitation and noise maps
# ---------------------------------------------------------------------------


def _inv_pattern(sym: str) -> str:
    """Pattern of ``(I - X)^-1`` given the pattern of ``X``."""
    return DIAG if sym in (ZERO_B, DIAG) else STAR


def transformation_patterns(m: NetworkModel, p: Partition) -> StructurePattern:
    """Pattern of ``P4 P3 P2 P1`` in block order, built from the block patterns of ``G``."""
    p.validate(m.L)
    groups = partition_groups(p)
    sizes = tuple(len(g) for g in groups)
    gp = pattern_of(m.G, groups)
    S, L, V, Z = range(4)
    w = _inv_pattern(gp[Z, Z])
    # after eliminating z_tilde
    g1 = {}
    for x in (S, L, V):
        for y in (S, L, V):
            g1[x, y] = _add_sym(gp[x, y], _mul_sym(_mul_sym(gp[x, Z], w), gp[Z, y]))
    g1_zv = _mul_sym(w, gp[Z, V])

    eye = [[DIAG if a == b else ZERO_B for b in range(4)] for a in range(4)]
    p1 = [row[:] for row in eye]
    for x in (S, L, V):
        p1[x][Z] = _mul_sym(gp[x, Z], w)
    p1[Z][Z] = w

    p2 = [row[:] for row in eye]
    p3 = [row[:] for row in eye]
    if sizes[V]:
        lv = g1[L, V]
        if lv == DIAG and sizes[L] != sizes[V]:
            lv = STAR
        p2[L][V] = _mul_sym(lv, _inv_pattern(g1[V, V]))
        p2[V][L] = DIAG if lv == DIAG else STAR
        p2[V][V] = ZERO_B
        # rows s_tilde and z_tilde pass through the second step unchanged
        p3[S][V] = g1[S, V]
        p3[Z][V] = g1_zv

    # the final self-loop normalization is diagonal with nonzero entries
    out = StructurePattern.identity(sizes)
    for grid in (p3, p2, p1):
        out = pattern_mul(out, StructurePattern(sizes, sizes, tuple(map(tuple, grid))))
    return out


def _excitation_pattern(m: NetworkModel, p: Partition, target: TransferMatrix) -> StructurePattern:
    groups = partition_groups(p)
    if target.cols != m.L:
        raise DimensionMismatch("excitation columns must line up with the nodes")
    t = pattern_of(target, groups, groups)
    return pattern_mul(transformation_patterns(m, p), t).select_rows([0, 1])


def r_check_structure(m: NetworkModel, p: Partition) -> StructurePattern:
    """Predicted block pattern of the abstracted excitation map (rows s_tilde, l_set)."""
    return _excitation_pattern(m, p, m.R)


def v_check_structure(m: NetworkModel, p: Partition) -> StructurePattern:
    """Predicted block pattern of the abstracted noise filter."""
    return _excitation_pattern(m, p, m.noise.F)


def excitation_template(p: Partition) -> StructurePattern:
    """``[D * 0 *; 0 * D *]``: private excitation for s_tilde and for l_set (through v_set)."""
    sizes = p.sizes
    return StructurePattern.from_rows(sizes[:2], sizes, "D * 0 *; 0 * D *")


def concrete_pattern(mat: TransferMatrix, p: Partition) -> StructurePattern:
    """Block pattern of a matrix over the kept rows, columns grouped by the partition."""
    k1, k2 = len(p.s_tilde), len(p.l_set)
    rows = [tuple(range(k1)), tuple(range(k1, k1 + k2))]
    return pattern_of(mat, rows, partition_groups(p))


# ---------------------------------------------------------------------------
# Leading diagonal
# ---------------------------------------------------------------------------

LEADING_MODES = ("private", "triangular", "matching")


def has_leading_diagonal(pat: StructurePattern | Sequence[Sequence[bool]], mode: str = "private") -> bool:
    """Can the columns be permuted to put nonzeros on the leading square diagonal?

    ``private``: each row gets its own column that excites no other row, so
    the leading square block is diagonal. ``triangular``: the leading block
    may be lower triangular. ``matching``: only the diagonal entries must be
    nonzero, i.e. a row-perfect bipartite matching exists.
    """
    support = pat.element_support() if isinstance(pat, StructurePattern) else [list(r) for r in pat]
    n_rows = len(support)
    n_cols = len(support[0]) if support else 0
    if n_rows > n_cols:
        return False
    if n_rows == 0:
        return True
    cols = [[support[r][c] for r in range(n_rows)] for c in range(n_cols)]
    if mode == "private":
        owners = {c.index(True) for c in cols if sum(c) == 1}
        return owners == set(range(n_rows))
    if mode == "triangular":
        firsts = {c.index(True) for c in cols if any(c)}
        return firsts == set(range(n_rows))
    if mode == "matching":
        g = nx.Graph()
        g.add_nodes_from(("r", r) for r in range(n_rows))
        g.add_nodes_from(("c", c) for c in range(n_cols))
        g.add_edges_from((("r", r), ("c", c)) for r in range(n_rows) for c in range(n_cols) if support[r][c])
        top = [("r", r) for r in range(n_rows)]
        match = nx.bipartite.hopcroft_karp_matching(g, top_nodes=top)
        return all(t in match for t in top)
    raise ValueError(f"mode must be one of {LEADING_MODES}")


def support_of(mat: TransferMatrix) -> list[list[bool]]:
    return [[bool(x) for x in row] for row in mat.entries]


# ---------------------------------------------------------------------------
# Sufficient conditions on the original network
# ---------------------------------------------------------------------------


@dataclass
class ConditionReport:
    clauses: dict = field(default_factory=dict)
    messages: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.clauses.values())

    def to_dict(self) -> dict:
        return {"ok": self.ok, "clauses": dict(self.clauses), "messages": dict(self.messages)}


def _diag_nonzero(m: TransferMatrix) -> bool:
    return classify_block(m) == DIAG and all(m.diagonal())


def _private_excitation(m: NetworkModel, group: tuple) -> tuple[bool, str]:
    others = [k for k in range(m.L) if k not in group]
    if not group:
        return True, ""
    own = m.R.select(group, group)
    if not _diag_nonzero(own):
        return False, "excitation block is not diagonal with nonzero diagonal"
    if not m.R.select(others, group).is_zero():
        return False, "these excitations also reach other nodes"
    return True, ""


def check_excitation_conditions(m: NetworkModel, p: Partition) -> ConditionReport:
    """Sufficient conditions on the original network for a private excitation
    of every abstracted node."""
    p.validate(m.L)
    rep = ConditionReport()
    if m.K != m.L:
        msg = "excitation signals must be indexed like the nodes (K = L)"
        for name in ("s_tilde_excitation", "v_set_excitation", "observation_structure"):
            rep.clauses[name] = False
            rep.messages[name] = msg
        return rep
    for name, group in (("s_tilde_excitation", p.s_tilde), ("v_set_excitation", p.v_set)):
        ok, msg = _private_excitation(m, group)
        rep.clauses[name] = ok
        if msg:
            rep.messages[name] = msg

    b = _Blocks(p)
    g = m.G.select(p.order, p.order)
    problems = []
    lv = b.get(g, 1, 2)
    if p.v_set and not (lv.is_square() and _diag_nonzero(lv)):
        problems.append("l_set <- v_set block is not square diagonal with nonzero diagonal")
    for (x, y), what in (((1, 3), "l_set <- z_tilde"), ((2, 2), "v_set <- v_set"), ((2, 3), "v_set <- z_tilde")):
        if not b.get(g, x, y).is_zero():
            problems.append(f"{what} block is nonzero")
    rep.clauses["observation_structure"] = not problems
    if problems:
        rep.messages["observation_structure"] = "; ".join(problems)
    return rep


# short public name
check_prop4 = check_excitation_conditions
