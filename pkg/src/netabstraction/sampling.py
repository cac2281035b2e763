"""Random well-posed models, partitions and transformations for property checks."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional

from .abstraction import Partition, check_indirect_observations
from .network import NetworkModel, NoiseRep
from .ratfun import Polynomial, RationalFunction, TransferMatrix
from .transform import is_nonsingular

ROW_GAIN_BUDGET = Fraction(9, 10)


def rand_rational(rng: random.Random, bound: Fraction, denominators=(2, 3, 4, 5, 7, 10)) -> Fraction:
    """Nonzero rational in ``[-bound, bound]`` with a small denominator."""
    while True:
        d = rng.choice(denominators)
        top = int(bound * d)
        if top == 0:
            return bound if rng.random() < 0.5 else -bound
        x = Fraction(rng.randint(-top, top), d)
        if x:
            return x


def random_module(rng: random.Random, gain_bound: Fraction, max_degree: int = 2, strictly_proper: bool = True) -> RationalFunction:
    """Stable module whose magnitude on the unit circle stays below ``gain_bound``."""
    den_deg = rng.randint(0, min(1, max_degree))
    pole = rand_rational(rng, Fraction(1, 2)) if den_deg else Fraction(0)
    floor = 1 - abs(pole)
    num_deg = rng.randint(1, max_degree)
    start = 1 if strictly_proper else 0
    terms = num_deg + 1 - start
    share = gain_bound * floor / terms
    num = [Fraction(0)] * start + [rand_rational(rng, share) for _ in range(terms)]
    den = [Fraction(1), -pole] if den_deg else [Fraction(1)]
    return RationalFunction(Polynomial(num), Polynomial(den))


def random_modules(rng: random.Random, n: int, density: float = 0.5, max_degree: int = 2, strictly_proper: bool = True) -> TransferMatrix:
    """Hollow ``G`` with every row's total gain below one, so ``(I - G)^-1`` is stable."""
    items = {}
    for j in range(n):
        cols = [k for k in range(n) if k != j and rng.random() < density]
        if not cols:
            continue
        budget = ROW_GAIN_BUDGET / len(cols)
        for k in cols:
            items[j, k] = random_module(rng, budget, max_degree, strictly_proper)
    return TransferMatrix.from_sparse(n, n, items)


def random_filter(rng: random.Random) -> RationalFunction:
    """Monic, stable and stably invertible first-order filter."""
    if rng.random() < 0.5:
        return RationalFunction.coerce(1)
    a = rand_rational(rng, Fraction(1, 2))
    b = rand_rational(rng, Fraction(1, 2))
    return RationalFunction(Polynomial([1, b]), Polynomial([1, a]))


def random_lambda(rng: random.Random, p: int) -> tuple:
    lam = [[Fraction(0)] * p for _ in range(p)]
    for a in range(p):
        for b in range(a):
            if rng.random() < 0.3:
                lam[a][b] = lam[b][a] = rand_rational(rng, Fraction(1, 4))
    for a in range(p):
        off = sum(abs(x) for k, x in enumerate(lam[a]) if k != a)
        lam[a][a] = off + Fraction(rng.randint(1, 4), 2)
    return tuple(tuple(r) for r in lam)


def random_model(
    rng: random.Random,
    n: Optional[int] = None,
    density: float = 0.5,
    max_degree: int = 2,
    excitation: str = "random",
    noise: bool = True,
) -> NetworkModel:
    """Valid model on ``n`` nodes. ``excitation`` is ``identity`` or ``random``."""
    n = rng.randint(3, 6) if n is None else n
    G = random_modules(rng, n, density, max_degree)
    if excitation == "identity":
        R = TransferMatrix.identity(n)
    else:
        items = {(k, k): random_module(rng, Fraction(2), 1, strictly_proper=False) for k in range(n)}
        for _ in range(rng.randint(0, n)):
            a, b = rng.randrange(n), rng.randrange(n)
            items.setdefault((a, b), random_module(rng, Fraction(1), max_degree, strictly_proper=False))
        R = TransferMatrix.from_sparse(n, n, items)
    if noise:
        H = TransferMatrix.diag([random_filter(rng) for _ in range(n)])
        lam = random_lambda(rng, n)
    else:
        H = TransferMatrix.identity(n)
        lam = tuple(tuple(Fraction(int(a == b)) for b in range(n)) for a in range(n))
    return NetworkModel(G, R, NoiseRep(H, lam, True))


def random_partition(
    rng: random.Random,
    n: int,
    observations: bool = True,
    must_remove: bool = True,
) -> Partition:
    """Random partition with a nonempty kept set and ``|l_set| >= |v_set|``."""
    while True:
        groups = [rng.choice("SLVZ") if observations else rng.choice("SZ") for _ in range(n)]
        pick = {c: tuple(k for k, g in enumerate(groups) if g == c) for c in "SLVZ"}
        if not pick["S"] and not pick["L"]:
            continue
        if len(pick["L"]) < len(pick["V"]):
            continue
        if must_remove and not (pick["V"] or pick["Z"]):
            continue
        return Partition(pick["S"], pick["L"], pick["V"], pick["Z"])


def random_observable_partition(rng: random.Random, m: NetworkModel, tries: int = 200, **kw) -> Optional[Partition]:
    """Random partition whose ``l_set`` generically observes its ``v_set``."""
    for _ in range(tries):
        p = random_partition(rng, m.L, **kw)
        if check_indirect_observations(m, p):
            return p
    return None


def random_valid_transformation(rng: random.Random, G: TransferMatrix, density: float = 0.5) -> TransferMatrix:
    """Random ``P`` with ``I - P (I - G)`` hollow.

    Off-diagonal entries are drawn freely; each diagonal entry is then fixed by
    the hollowness condition ``P_jj = 1 + sum_k P_jk G_kj``.
    """
    n = G.rows
    while True:
        rows = []
        for j in range(n):
            row = [RationalFunction.coerce(0)] * n
            for k in range(n):
                if k != j and rng.random() < density:
                    row[k] = random_module(rng, Fraction(1), 1, strictly_proper=False)
            diag = RationalFunction.coerce(1)
            for k in range(n):
                if k != j and row[k]:
                    diag = diag + row[k] * G[k, j]
            row[j] = diag
            rows.append(row)
        P = TransferMatrix(rows)
        if is_nonsingular(P):
            return P


def break_hollowness(rng: random.Random, P: TransferMatrix) -> TransferMatrix:
    """Shift one diagonal entry of ``P`` by a nonzero constant."""
    j = rng.randrange(P.rows)
    shift = RationalFunction.coerce(rand_rational(rng, Fraction(1)))
    rows = [list(r) for r in P.entries]
    rows[j][j] = rows[j][j] + shift
    return TransferMatrix(rows)


def random_digraph_edges(rng: random.Random, n: int, density: float = 0.4) -> frozenset:
    return frozenset((a, b) for a in range(n) for b in range(n) if a != b and rng.random() < density)


def model_on_edges(rng: random.Random, n: int, edges, labels=()) -> NetworkModel:
    """Model with a distinct ``c q^-1`` module on each edge ``a -> b``."""
    used = set()
    items = {}
    for a, b in sorted(edges):
        while True:
            c = Fraction(rng.randint(1, 97), rng.randint(2, 101)) * rng.choice((1, -1))
            if c not in used:
                used.add(c)
                break
        items[b, a] = RationalFunction.delay(1, c)
    G = TransferMatrix.from_sparse(n, n, items)
    return NetworkModel.build(G, node_labels=labels)
