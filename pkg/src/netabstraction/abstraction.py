"""Node abstraction with indirect observations.

Nodes are split into four disjoint groups:

* ``s_tilde``: measured nodes kept as they are,
* ``l_set``: measured nodes whose equations are inverted to stand in for
  the ``v_set`` nodes (indirect observations),
* ``v_set``: unmeasured nodes reconstructed from ``l_set``,
* ``z_tilde``: unmeasured nodes eliminated outright.

The abstracted model keeps ``s_tilde + l_set`` (in that order, each sorted).
It is computed two ways that must agree exactly: as a product of four
equivalence transformations applied to the full model, and as direct block
substitution on the network equations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import DimensionMismatch, ModelFormatError, RankDeficient, SelfLoopSingular
from .network import NetworkModel, NoiseRep
from .ratfun import ONE, ZERO, TransferMatrix, rank_at

RANK_POINTS = 8
BLOCKS = ("s_tilde", "l_set", "v_set", "z_tilde")


@dataclass(frozen=True)
class Partition:
    """Disjoint node groups, 0-based and sorted."""

    s_tilde: tuple = ()
    l_set: tuple = ()
    v_set: tuple = ()
    z_tilde: tuple = ()

    def __post_init__(self):
        for name in BLOCKS:
            object.__setattr__(self, name, tuple(sorted(int(k) for k in getattr(self, name))))
        seen = [k for name in BLOCKS for k in getattr(self, name)]
        if len(seen) != len(set(seen)):
            raise ModelFormatError("partition groups must be disjoint")
        if any(k < 0 for k in seen):
            raise ModelFormatError("node indices must be nonnegative")
        if len(self.l_set) < len(self.v_set):
            raise ModelFormatError("need at least as many indirect observations as reconstructed nodes")

    @classmethod
    def complete(cls, n: int, s_tilde=(), l_set=(), v_set=(), z_tilde=None) -> "Partition":
        """Fill ``z_tilde`` with every node not named elsewhere."""
        named = set(s_tilde) | set(l_set) | set(v_set)
        if z_tilde is None:
            z_tilde = [k for k in range(n) if k not in named]
        p = cls(tuple(s_tilde), tuple(l_set), tuple(v_set), tuple(z_tilde))
        p.validate(n)
        return p

    def validate(self, n: int) -> None:
        if sorted(self.order) != list(range(n)):
            raise ModelFormatError(f"partition must cover nodes 1..{n} exactly once")

    @property
    def order(self) -> tuple:
        return self.s_tilde + self.l_set + self.v_set + self.z_tilde

    @property
    def kept(self) -> tuple:
        return self.s_tilde + self.l_set

    @property
    def removed(self) -> tuple:
        return self.v_set + self.z_tilde

    @property
    def sizes(self) -> tuple:
        return tuple(len(getattr(self, name)) for name in BLOCKS)

    def labelled(self, labels: Iterable[str]) -> dict:
        labels = list(labels)
        return {name: [labels[k] for k in getattr(self, name)] for name in BLOCKS}


@dataclass
class AbstractionResult:
    abstracted: NetworkModel
    partition: Partition
    input_map: TransferMatrix
    p_abs: Optional[TransferMatrix] = None
    g4: Optional[TransferMatrix] = None
    report: dict = field(default_factory=dict)

    @property
    def kept(self) -> tuple:
        return self.partition.kept


# ---------------------------------------------------------------------------
# Block helpers (everything below works in block order s, l, v, z)
# ---------------------------------------------------------------------------


class _Blocks:
    def __init__(self, p: Partition):
        self.sizes = p.sizes
        offs = np.cumsum((0,) + self.sizes)
        self.ranges = [tuple(range(offs[b], offs[b + 1])) for b in range(4)]
        self.n = int(offs[-1])

    def get(self, m: TransferMatrix, a: int, b: int) -> TransferMatrix:
        return m.select(self.ranges[a], self.ranges[b])

    def rows(self, m: TransferMatrix, a: int) -> TransferMatrix:
        return m.select(self.ranges[a], None)

    def assemble(self, parts: dict, eye: Iterable[int] = ()) -> TransferMatrix:
        """Square block matrix from ``{(a, b): block}``; ``eye`` blocks get I."""
        grid = [[None] * self.n for _ in range(self.n)]
        for a in eye:
            for k in self.ranges[a]:
                grid[k][k] = ONE
        for (a, b), blk in parts.items():
            if blk.shape != (self.sizes[a], self.sizes[b]):
                raise DimensionMismatch(f"block ({a},{b}) has shape {blk.shape}")
            for r, i in enumerate(self.ranges[a]):
                for c, j in enumerate(self.ranges[b]):
                    grid[i][j] = blk.entries[r][c]
        items = {(i, j): x for i, row in enumerate(grid) for j, x in enumerate(row) if x}
        return TransferMatrix.from_sparse(self.n, self.n, items)


S, L, V, Z = range(4)


def _eye(n: int) -> TransferMatrix:
    return TransferMatrix.identity(n)


def _step(p_k: TransferMatrix, g_prev: TransferMatrix) -> TransferMatrix:
    eye = _eye(g_prev.rows)
    return eye - p_k @ (eye - g_prev)


def _inv_eye_minus(m: TransferMatrix) -> TransferMatrix:
    if m.rows == 0:
        return m
    return (_eye(m.rows) - m).inverse()


def block_modules(m: NetworkModel, p: Partition) -> TransferMatrix:
    """``G`` permuted into block order."""
    p.validate(m.L)
    return m.G.select(p.order, p.order)


def _unpermute(m: TransferMatrix, p: Partition) -> TransferMatrix:
    back = [0] * len(p.order)
    for pos, k in enumerate(p.order):
        back[k] = pos
    return m.select(back, back)


# ---------------------------------------------------------------------------
# The four transformations
# ---------------------------------------------------------------------------


def build_p1(m: NetworkModel, p: Partition) -> TransferMatrix:
    """Eliminate ``z_tilde`` from every equation."""
    b = _Blocks(p)
    g = block_modules(m, p)
    w = _inv_eye_minus(b.get(g, Z, Z))
    parts = {(x, Z): b.get(g, x, Z) @ w for x in (S, L, V)}
    parts[(Z, Z)] = w
    return b.assemble(parts, eye=(S, L, V))


def first_stage(m: NetworkModel, p: Partition) -> TransferMatrix:
    return _step(build_p1(m, p), block_modules(m, p))


def indirect_gain(g1: TransferMatrix, p: Partition) -> TransferMatrix:
    """Map from ``v_set`` to ``l_set`` once ``z_tilde`` is eliminated."""
    return _Blocks(p).get(g1, L, V)


def build_p2(m: NetworkModel, p: Partition, g1: Optional[TransferMatrix] = None) -> TransferMatrix:
    """Invert the ``l_set`` equations for ``v_set`` and feed ``v_set`` into them."""
    b = _Blocks(p)
    g1 = first_stage(m, p) if g1 is None else g1
    if not p.v_set:
        return _eye(b.n)
    g_lv = b.get(g1, L, V)
    feed = g_lv @ _inv_eye_minus(b.get(g1, V, V))
    recover = -g_lv.left_inverse()
    return b.assemble({(L, V): feed, (V, L): recover}, eye=(S, L, Z))


def build_p3(m: NetworkModel, p: Partition, g2: Optional[TransferMatrix] = None) -> TransferMatrix:
    """Substitute the reconstructed ``v_set`` into the ``s_tilde`` and ``z_tilde`` rows."""
    b = _Blocks(p)
    if not p.v_set:
        return _eye(b.n)
    if g2 is None:
        g1 = first_stage(m, p)
        g2 = _step(build_p2(m, p, g1), g1)
    parts = {(S, V): b.get(g2, S, V), (Z, V): b.get(g2, Z, V)}
    return b.assemble(parts, eye=(S, L, V, Z))


def build_p4(m: NetworkModel, p: Partition, g3: Optional[TransferMatrix] = None) -> TransferMatrix:
    """Normalize away the self-loops created by the substitutions."""
    if g3 is None:
        g1 = first_stage(m, p)
        g2 = _step(build_p2(m, p, g1), g1)
        g3 = _step(build_p3(m, p, g2), g2)
    return TransferMatrix.diag([_unit_gain(g, j, p) for j, g in enumerate(g3.diagonal())])


def _unit_gain(loop, j: int, p: Partition):
    if loop == ONE:
        raise SelfLoopSingular(f"self-loop equal to 1 at block position {j} of {p}")
    return (ONE - loop).inv()


# ---------------------------------------------------------------------------
# Checks and drivers
# ---------------------------------------------------------------------------


def check_indirect_observations(m: NetworkModel, p: Partition, seed=0) -> bool:
    """Generic full column rank of the ``v_set -> l_set`` map after eliminating ``z_tilde``."""
    if not p.v_set:
        return True
    b = _Blocks(p)
    g = block_modules(m, p)
    g_lz = b.get(g, L, Z)
    g_lv = b.get(g, L, V)
    if p.z_tilde and not g_lz.is_zero():
        g_lv = g_lv + g_lz @ _inv_eye_minus(b.get(g, Z, Z)) @ b.get(g, Z, V)
    rng = random.Random(seed)
    points = [np.exp(1j * rng.uniform(-np.pi, np.pi)) for _ in range(RANK_POINTS)]
    return rank_at(g_lv, points) == len(p.v_set)


def _report(m: NetworkModel, p: Partition, abstracted: NetworkModel, rank_ok: bool) -> dict:
    nonproper = []
    for name, mat in (("G", abstracted.G), ("R", abstracted.R), ("H", abstracted.noise.F)):
        for i, row in enumerate(mat.entries):
            for j, x in enumerate(row):
                if x and not x.is_proper():
                    cols = abstracted.node_labels if name == "G" else (
                        abstracted.signal_labels if name == "R" else None
                    )
                    nonproper.append({
                        "matrix": name,
                        "row": abstracted.node_labels[i],
                        "col": cols[j] if cols else str(j + 1),
                    })
    return {
        "partition": p.labelled(m.node_labels),
        "kept": [m.node_labels[k] for k in p.kept],
        "possibly_nonproper": bool(p.l_set),
        "nonproper_entries": nonproper,
        "indirect_observations_full_rank": rank_ok,
        "max_degree": max(abstracted.G.max_degree(), abstracted.R.max_degree(), abstracted.noise.F.max_degree()),
    }


def _abstracted_model(m: NetworkModel, p: Partition, g_kept, input_map) -> NetworkModel:
    # the noise filter stays monic only when nothing was removed or mixed
    untouched = not p.removed and input_map == _eye(m.L).select(p.kept, None)
    noise = NoiseRep(input_map @ m.noise.F, m.noise.Lambda, m.noise.monic and untouched)
    return NetworkModel(
        g_kept,
        input_map @ m.R,
        noise,
        tuple(m.node_labels[k] for k in p.kept),
        m.signal_labels,
    )


def _require_rank(m: NetworkModel, p: Partition) -> bool:
    ok = check_indirect_observations(m, p)
    if not ok:
        raise RankDeficient("the l_set nodes do not observe the v_set nodes (generic rank too low)")
    return ok


def abstract_by_transformation(m: NetworkModel, p: Partition) -> AbstractionResult:
    p.validate(m.L)
    if not p.kept:
        raise ModelFormatError("nothing to keep")
    rank_ok = _require_rank(m, p)
    g0 = block_modules(m, p)
    p1 = build_p1(m, p)
    g1 = _step(p1, g0)
    p2 = build_p2(m, p, g1)
    g2 = _step(p2, g1)
    p3 = build_p3(m, p, g2)
    g3 = _step(p3, g2)
    p4 = build_p4(m, p, g3)
    g4 = _step(p4, g3)
    p_abs = p4 @ p3 @ p2 @ p1

    kept_rows = list(range(len(p.kept)))
    p_abs_orig = _unpermute(p_abs, p)
    input_map = p_abs_orig.select(p.kept, None)
    g_kept = g4.select(kept_rows, kept_rows)
    abstracted = _abstracted_model(m, p, g_kept, input_map)
    return AbstractionResult(
        abstracted=abstracted,
        partition=p,
        input_map=input_map,
        p_abs=p_abs_orig,
        g4=_unpermute(g4, p),
        report=_report(m, p, abstracted, rank_ok),
    )


def abstract_by_substitution(m: NetworkModel, p: Partition) -> AbstractionResult:
    p.validate(m.L)
    if not p.kept:
        raise ModelFormatError("nothing to keep")
    rank_ok = _require_rank(m, p)
    b = _Blocks(p)
    g = block_modules(m, p)
    n = b.n
    # coefficient of each original input u_k (block-ordered columns)
    unit = _eye(n)

    # step a: solve the z_tilde equations and substitute
    w = _inv_eye_minus(b.get(g, Z, Z))
    g1 = {}
    u1 = {}
    for x in (S, L, V):
        through_z = b.get(g, x, Z) @ w
        for y in (S, L, V):
            g1[x, y] = b.get(g, x, y) + through_z @ b.get(g, Z, y)
        u1[x] = b.rows(unit, x) + through_z @ b.rows(unit, Z)

    # steps b-c: v_set from the l_set equations, substituted into s_tilde;
    # the original v_set equations substituted into l_set
    if p.v_set:
        recover = g1[L, V].left_inverse()
        feed = g1[L, V] @ _inv_eye_minus(g1[V, V])
        via_v = g1[S, V] @ recover
        g3_ss = g1[S, S] - via_v @ g1[L, S]
        g3_sl = g1[S, L] + via_v @ (_eye(len(p.l_set)) - g1[L, L])
        u3_s = u1[S] - via_v @ u1[L]
        g3_ls = g1[L, S] + feed @ g1[V, S]
        g3_ll = g1[L, L] + feed @ g1[V, L]
        u3_l = u1[L] + feed @ u1[V]
    else:
        g3_ss, g3_sl, u3_s = g1[S, S], g1[S, L], u1[S]
        g3_ls, g3_ll, u3_l = g1[L, S], g1[L, L], u1[L]

    g3 = TransferMatrix.block([[g3_ss, g3_sl], [g3_ls, g3_ll]]) if p.s_tilde and p.l_set else (
        g3_ss if p.s_tilde else g3_ll
    )
    u3 = TransferMatrix.block([[u3_s], [u3_l]]) if p.s_tilde and p.l_set else (
        u3_s if p.s_tilde else u3_l
    )

    # step d: move self-loops to the left and divide
    k = g3.rows
    g_rows, u_rows = [], []
    for j in range(k):
        scale = _unit_gain(g3.entries[j][j], j, p)
        g_rows.append(tuple(x * scale if c != j else ZERO for c, x in enumerate(g3.entries[j])))
        u_rows.append(tuple(x * scale for x in u3.entries[j]))
    g_kept = TransferMatrix._raw(tuple(g_rows), k, k)
    u_block = TransferMatrix._raw(tuple(u_rows), k, n)

    back = [0] * n
    for pos, node in enumerate(p.order):
        back[node] = pos
    input_map = u_block.select(None, back)
    abstracted = _abstracted_model(m, p, g_kept, input_map)
    return AbstractionResult(
        abstracted=abstracted,
        partition=p,
        input_map=input_map,
        report=_report(m, p, abstracted, rank_ok),
    )


def abstract(m: NetworkModel, p: Partition, method: str = "transform") -> AbstractionResult:
    if method == "transform":
        return abstract_by_transformation(m, p)
    if method == "substitute":
        return abstract_by_substitution(m, p)
    raise ValueError(f"unknown method {method!r}")


def results_agree(a: AbstractionResult, b: AbstractionResult) -> bool:
    """Exact entrywise equality of two abstractions of the same model."""
    ma, mb = a.abstracted, b.abstracted
    return (
        a.partition == b.partition
        and ma.G == mb.G
        and ma.R == mb.R
        and ma.noise.F == mb.noise.F
        and a.input_map == b.input_map
    )


def immersion(m: NetworkModel, keep: Iterable[int]) -> AbstractionResult:
    keep = sorted(set(keep))
    if not keep:
        raise ModelFormatError("immersion must keep at least one node")
    return abstract_by_transformation(m, Partition.complete(m.L, s_tilde=keep))
