"""Equivalence transformations: premultiplying the network equation by ``P``.

``w = G w + R r + v`` becomes ``P (I - G) w = P R r + P v``, i.e. the model
``(I - P(I - G), P R, P F)``. Node responses are unchanged as long as ``P`` is
nonsingular; the result is again a network model when its module diagonal is
zero.
"""

from __future__ import annotations

from .errors import DimensionMismatch, InvalidTransformation, SingularMatrix
from .network import NetworkModel, NoiseRep
from .ratfun import TransferMatrix

Transformation = TransferMatrix


def _check_dims(P: TransferMatrix, m: NetworkModel) -> None:
    if P.shape != (m.L, m.L):
        raise DimensionMismatch(f"P must be {m.L}x{m.L}, got {P.rows}x{P.cols}")


def transformed_modules(P: TransferMatrix, G: TransferMatrix) -> TransferMatrix:
    """``I - P (I - G)`` without any validity check."""
    eye = TransferMatrix.identity(G.rows)
    return eye - P @ (eye - G)


def is_nonsingular(P: TransferMatrix) -> bool:
    return P.is_nonsingular()


def is_valid_transformation(P: TransferMatrix, m: NetworkModel) -> bool:
    """Full rank and a hollow transformed module matrix, both decided exactly."""
    _check_dims(P, m)
    if any(transformed_modules(P, m.G).diagonal()):
        return False
    return is_nonsingular(P)


def apply_transformation(m: NetworkModel, P: TransferMatrix, check: bool = True) -> NetworkModel:
    _check_dims(P, m)
    if check and not is_valid_transformation(P, m):
        raise InvalidTransformation("P is singular or leaves self-loops in I - P(I - G)")
    eye = TransferMatrix.identity(m.L)
    noise = NoiseRep(P @ m.noise.F, m.noise.Lambda, m.noise.monic and P == eye)
    return m.replace(G=transformed_modules(P, m.G), R=P @ m.R, noise=noise)


def transformation_between(G1: TransferMatrix, G2: TransferMatrix) -> TransferMatrix:
    """The ``P`` taking modules ``G1`` to ``G2``: ``(I - G2)(I - G1)^-1``."""
    if G1.shape != G2.shape or not G1.is_square():
        raise DimensionMismatch(f"{G1.shape} vs {G2.shape}")
    eye = TransferMatrix.identity(G1.rows)
    if not (eye - G2).is_nonsingular():
        raise SingularMatrix("target modules are not well posed")
    return (eye - G2) @ (eye - G1).inverse()
