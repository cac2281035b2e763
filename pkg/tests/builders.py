"""Random models that satisfy the sufficient excitation conditions."""

from fractions import Fraction

from netabstraction.abstraction import Partition
from netabstraction.network import NetworkModel
from netabstraction.ratfun import RationalFunction, TransferMatrix
from netabstraction.sampling import random_module


def excitation_case(rng, n=None):
    """Model with R = I and a partition whose observation structure is one-to-one.

    Each v_set node feeds exactly its own l_set partner; v_set nodes are fed
    only by s_tilde and l_set; l_set nodes never hear from z_tilde.
    """
    n = rng.randint(3, 7) if n is None else n
    nodes = list(range(n))
    rng.shuffle(nodes)
    pairs = rng.randint(0, (n - 1) // 2)
    v_set, l_set = sorted(nodes[:pairs]), sorted(nodes[pairs:2 * pairs])
    rest = nodes[2 * pairs:]
    n_s = rng.randint(1, len(rest))
    s_tilde, z_tilde = rest[:n_s], rest[n_s:]

    allowed = set()
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            if b in l_set and a in z_tilde:
                continue
            if b in v_set and a in v_set + z_tilde:
                continue
            if b in l_set and a in v_set:
                continue
            allowed.add((a, b))
    edges = {e for e in allowed if rng.random() < 0.4}
    edges |= set(zip(v_set, l_set))

    incoming = {b: [a for a, bb in edges if bb == b] for b in range(n)}
    items = {}
    for b, srcs in incoming.items():
        for a in srcs:
            budget = Fraction(9, 10) / len(srcs)
            items[b, a] = random_module(rng, budget, max_degree=1)
    G = TransferMatrix.from_sparse(n, n, items)
    m = NetworkModel.build(G)
    return m, Partition.complete(n, s_tilde, l_set, v_set, z_tilde)


def unit(c) -> RationalFunction:
    return RationalFunction.coerce(Fraction(c))
