"""Small reference networks used by the tests, the CLI fixtures and the docs.

Each builder takes optional module values so that tests can plug in distinct
rational gains and compare against hand-derived closed forms.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .network import NetworkModel
from .ratfun import RationalFunction, TransferMatrix


def delay_gain(c) -> RationalFunction:
    """``c q^-1``."""
    return RationalFunction.delay(1, Fraction(c))


def model_from_edges(
    labels: Sequence[str],
    modules: Mapping[tuple, object],
    R: Optional[TransferMatrix] = None,
) -> NetworkModel:
    """Model with ``w_b = sum modules[(a, b)] w_a + r_b + v_b`` over labelled edges ``a -> b``."""
    pos = {lab: k for k, lab in enumerate(labels)}
    items = {(pos[b], pos[a]): RationalFunction.coerce(f) for (a, b), f in modules.items()}
    n = len(labels)
    G = TransferMatrix.from_sparse(n, n, items)
    return NetworkModel.build(G, R=R, node_labels=labels)


def _gains(edges, gains) -> dict:
    if gains is None:
        # distinct small gains keep random coincidences out of exact comparisons
        gains = {e: delay_gain(Fraction(k + 2, 10 + 3 * k)) for k, e in enumerate(edges)}
    return {e: gains[e] for e in edges}


# four-node example: 2->1, 3->1, 4->1, 4->2, 1->4
FOUR_NODE_LABELS = ("1", "2", "3", "4")
FOUR_NODE_EDGES = (("2", "1"), ("3", "1"), ("4", "1"), ("4", "2"), ("1", "4"))


def four_node_network(gains: Optional[Mapping] = None) -> NetworkModel:
    """Keys of ``gains`` are ``(from, to)`` label pairs; defaults are ``c q^-1``."""
    return model_from_edges(FOUR_NODE_LABELS, _gains(FOUR_NODE_EDGES, gains))


def four_node_uniform(c="3/10") -> NetworkModel:
    return four_node_network({e: delay_gain(c) for e in FOUR_NODE_EDGES})


# parallel path around the module i->j, observable through l
PARALLEL_LABELS = ("i", "j", "u", "l")
PARALLEL_EDGES = (("i", "j"), ("i", "u"), ("u", "j"), ("u", "l"))


def parallel_path_network(input_feeds_observer: bool = False, gains=None) -> NetworkModel:
    edges = PARALLEL_EDGES + ((("i", "l"),) if input_feeds_observer else ())
    return model_from_edges(PARALLEL_LABELS, _gains(edges, gains))


# loop around the output j through u, observable through l
LOOP_LABELS = ("i", "j", "u", "l")
LOOP_EDGES = (("i", "j"), ("j", "u"), ("u", "j"), ("u", "l"))


def output_loop_network(output_feeds_observer: bool = False, gains=None) -> NetworkModel:
    edges = LOOP_EDGES + ((("j", "l"),) if output_feeds_observer else ())
    return model_from_edges(LOOP_LABELS, _gains(edges, gains))


# two unmeasured nodes seen by three observers, one of them through z
OBSERVER_LABELS = ("v1", "v2", "z", "l1", "l2", "l3")
OBSERVER_EDGES = (
    ("v1", "l1"),
    ("v1", "z"),
    ("v2", "z"),
    ("z", "l2"),
    ("z", "l3"),
)


def observer_network(gains=None) -> NetworkModel:
    return model_from_edges(OBSERVER_LABELS, _gains(OBSERVER_EDGES, gains))


# node selection example: the parallel path via u can be blocked by measuring
# u, or by observing u through l, which in turn needs 2 measured or observed
SELECTION_LABELS = ("i", "j", "u", "l", "2", "3")
SELECTION_EDGES = (
    ("i", "j"),
    ("i", "u"),
    ("u", "j"),
    ("u", "l"),
    ("i", "2"),
    ("2", "l"),
    ("2", "3"),
)


def selection_network(gains=None) -> NetworkModel:
    return model_from_edges(SELECTION_LABELS, _gains(SELECTION_EDGES, gains))
