"""Network models ``w = G w + R r + F e`` and their frequency-domain checks."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, PoleAtPoint, SingularMatrix
from .ratfun import ONE, ZERO, TransferMatrix, eval_at

DEFAULT_TOL = 1e-9
UNIT_TOL = 1e-12
POLE_RETRIES = 3


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------


def _check_lambda(lam: tuple[tuple[Fraction, ...], ...]) -> None:
    p = len(lam)
    if any(len(row) != p for row in lam):
        raise DimensionMismatch("Lambda must be square")


@dataclass(frozen=True)
class NoiseRep:
    """Noise ``v = F e`` with ``cov(e) = Lambda``.

    Original models carry a square monic ``F`` (the ``H`` filter). After a
    transformation or abstraction ``F`` becomes the unfactorized product
    ``C P H``, possibly non-square and non-monic, and ``monic`` is False.
    """

    F: TransferMatrix
    Lambda: tuple
    monic: bool = True

    def __post_init__(self):
        lam = tuple(tuple(Fraction(x) for x in row) for row in self.Lambda)
        object.__setattr__(self, "Lambda", lam)
        _check_lambda(lam)
        if self.F.cols != len(lam):
            raise DimensionMismatch(f"F has {self.F.cols} columns but Lambda is {len(lam)}x{len(lam)}")

    @classmethod
    def white(cls, n: int) -> "NoiseRep":
        return cls(TransferMatrix.identity(n), identity_lambda(n), True)

    @property
    def p(self) -> int:
        return len(self.Lambda)

    def lambda_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.Lambda], dtype=float)


def identity_lambda(n: int) -> tuple:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


@dataclass(frozen=True)
class NetworkModel:
    """The quadruple (G, R, H, Lambda) plus optional node/signal labels."""

    G: TransferMatrix
    R: TransferMatrix
    noise: NoiseRep
    node_labels: tuple = ()
    signal_labels: tuple = ()

    def __post_init__(self):
        if not self.G.is_square():
            raise DimensionMismatch(f"G must be square, got {self.G.shape}")
        if self.R.rows != self.G.rows:
            raise DimensionMismatch("R must have one row per node")
        if self.noise.F.rows != self.G.rows:
            raise DimensionMismatch("noise filter must have one row per node")
        nodes = tuple(self.node_labels) or tuple(str(k + 1) for k in range(self.L))
        signals = tuple(self.signal_labels) or tuple(f"r{k + 1}" for k in range(self.K))
        if len(nodes) != self.L or len(set(nodes)) != self.L:
            raise DimensionMismatch("node labels must be unique, one per node")
        if len(signals) != self.K:
            raise DimensionMismatch("one signal label per external signal")
        object.__setattr__(self, "node_labels", nodes)
        object.__setattr__(self, "signal_labels", signals)

    @classmethod
    def build(
        cls,
        G: TransferMatrix,
        R: Optional[TransferMatrix] = None,
        H: Optional[TransferMatrix] = None,
        Lambda=None,
        node_labels: Sequence[str] = (),
        signal_labels: Sequence[str] = (),
        monic: Optional[bool] = None,
    ) -> "NetworkModel":
        """Fill in the usual defaults: R = I, H = I, Lambda = I."""
        n = G.rows
        R = TransferMatrix.identity(n) if R is None else R
        H = TransferMatrix.identity(n) if H is None else H
        Lambda = identity_lambda(H.cols) if Lambda is None else Lambda
        if monic is None:
            monic = H.is_square()
        return cls(G, R, NoiseRep(H, Lambda, monic), tuple(node_labels), tuple(signal_labels))

    @property
    def L(self) -> int:
        return self.G.rows

    @property
    def K(self) -> int:
        return self.R.cols

    @property
    def H(self) -> TransferMatrix:
        return self.noise.F

    def index_of(self, token) -> int:
        """Resolve a node label (or 1-based index) to a 0-based index."""
        token = str(token).strip()
        if token in self.node_labels:
            return self.node_labels.index(token)
        try:
            k = int(token)
        except ValueError:
            raise KeyError(f"unknown node {token!r}") from None
        if not 1 <= k <= self.L:
            raise KeyError(f"node index {k} out of range 1..{self.L}")
        return k - 1

    def replace(self, **changes) -> "NetworkModel":
        fields = dict(
            G=self.G, R=self.R, noise=self.noise,
            node_labels=self.node_labels, signal_labels=self.signal_labels,
        )
        fields.update(changes)
        return NetworkModel(**fields)


@dataclass(frozen=True)
class FrequencyGrid:
    """Evaluation points ``e^{i w}`` on the unit circle."""

    points: tuple

    def __post_init__(self):
        pts = tuple(complex(z) for z in self.points)
        if any(abs(abs(z) - 1) > UNIT_TOL for z in pts):
            raise ValueError("grid points must lie on the unit circle")
        object.__setattr__(self, "points", pts)

    @classmethod
    def default(cls, n: int = 32) -> "FrequencyGrid":
        # w = pi (2k+1) / (2n) stays clear of w = 0 and w = pi
        return cls(tuple(np.exp(1j * np.pi * (2 * k + 1) / (2 * n)) for k in range(n)))

    @classmethod
    def random(cls, n: int, seed=None) -> "FrequencyGrid":
        rng = random.Random(seed)
        return cls(tuple(np.exp(1j * rng.uniform(-np.pi, np.pi)) for _ in range(n)))

    def rotated(self, phase: float) -> "FrequencyGrid":
        rot = np.exp(1j * phase)
        return FrequencyGrid(tuple(z * rot for z in self.points))

    def __iter__(self) -> Iterator[complex]:
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SelectionMatrix:
    """0/1 matrix ``C`` keeping the listed nodes, in order."""

    kept: tuple

    def __post_init__(self):
        kept = tuple(int(k) for k in self.kept)
        if len(set(kept)) != len(kept):
            raise ValueError("selected indices must be distinct")
        if any(k < 0 for k in kept):
            raise ValueError("selected indices must be nonnegative")
        object.__setattr__(self, "kept", kept)

    def matrix(self, n: int) -> np.ndarray:
        if any(k >= n for k in self.kept):
            raise DimensionMismatch("selection index out of range")
        c = np.zeros((len(self.kept), n))
        for r, k in enumerate(self.kept):
            c[r, k] = 1.0
        return c


@dataclass
class ValidationReport:
    clauses: dict = field(default_factory=dict)
    messages: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.clauses.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.clauses.items() if not v]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "clauses": dict(self.clauses), "messages": dict(self.messages)}


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def leading_minors_positive(lam) -> bool:
    """Sylvester's criterion with exact arithmetic."""
    p = len(lam)
    for k in range(1, p + 1):
        if _det([row[:k] for row in lam[:k]]) <= 0:
            return False
    return True


def _det(a) -> Fraction:
    a = [[Fraction(x) for x in row] for row in a]
    n = len(a)
    det = Fraction(1)
    for k in range(n):
        piv = next((r for r in range(k, n) if a[r][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        for r in range(k + 1, n):
            f = a[r][k] / a[k][k]
            if f:
                for c in range(k, n):
                    a[r][c] -= f * a[k][c]
    return det


def validate_model(m: NetworkModel) -> ValidationReport:
    """Check each well-formedness clause; failures are reported, not raised."""
    rep = ValidationReport()
    diag = m.G.diagonal()
    bad = [m.node_labels[k] for k, g in enumerate(diag) if g]
    rep.clauses["hollow"] = not bad
    if bad:
        rep.messages["hollow"] = f"self-loops at nodes {bad}"

    twr = None
    try:
        ig_inv = (TransferMatrix.identity(m.L) - m.G).inverse()
        rep.clauses["well_posed"] = True
        twr = ig_inv @ m.R
    except SingularMatrix:
        rep.clauses["well_posed"] = False
        rep.messages["well_posed"] = "I - G is singular"

    if twr is None:
        rep.clauses["twr_proper_stable"] = False
        rep.messages["twr_proper_stable"] = "T_wr undefined"
    else:
        offenders = [
            (i, j)
            for i, row in enumerate(twr.entries)
            for j, x in enumerate(row)
            if x and not (x.is_proper() and x.is_stable())
        ]
        rep.clauses["twr_proper_stable"] = not offenders
        if offenders:
            rep.messages["twr_proper_stable"] = f"non-proper or unstable T_wr entries {offenders[:8]}"

    rep.clauses["noise"], msg = _noise_ok(m)
    if msg:
        rep.messages["noise"] = msg

    lam = m.noise.Lambda
    sym = all(lam[i][j] == lam[j][i] for i in range(len(lam)) for j in range(len(lam)))
    rep.clauses["lambda_positive"] = sym and leading_minors_positive(lam)
    if not rep.clauses["lambda_positive"]:
        rep.messages["lambda_positive"] = "Lambda is not symmetric positive definite"
    return rep


def _noise_ok(m: NetworkModel) -> tuple[bool, str]:
    F = m.noise.F
    if not m.noise.monic:
        return True, ""
    if not F.is_square():
        return False, "monic noise filter must be square"
    for i, row in enumerate(F.entries):
        for j, x in enumerate(row):
            if not x.is_proper():
                return False, f"H[{i},{j}] is not proper"
            if x.value_at_infinity() != (1 if i == j else 0):
                return False, "H is not monic"
            if x and not x.is_stable():
                return False, f"H[{i},{j}] is unstable"
    try:
        hinv = F.inverse()
    except SingularMatrix:
        return False, "H is singular"
    if any(x and not x.is_stable() for row in hinv.entries for x in row):
        return False, "H has an unstable inverse"
    return True, ""


def open_loop_response(m: NetworkModel) -> tuple[TransferMatrix, TransferMatrix]:
    """Exact ``T_wr = (I-G)^-1 R`` and ``T_we = (I-G)^-1 F``."""
    ig_inv = (TransferMatrix.identity(m.L) - m.G).inverse()
    return ig_inv @ m.R, ig_inv @ m.noise.F


def _responses_at(m: NetworkModel, z: complex) -> tuple[np.ndarray, np.ndarray]:
    ig = np.eye(m.L) - eval_at(m.G, z)
    rhs = np.hstack([eval_at(m.R, z), eval_at(m.noise.F, z)])
    try:
        sol = np.linalg.solve(ig, rhs)
    except np.linalg.LinAlgError:
        raise PoleAtPoint(f"I - G is singular at z={z}") from None
    return sol[:, : m.K], sol[:, m.K:]


def noise_spectrum_at(m: NetworkModel, omega: float) -> np.ndarray:
    """``T_we(e^{iw}) Lambda T_we^T(e^{-iw})``, Hermitian for real models."""
    z = np.exp(1j * omega)
    _, twe = _responses_at(m, z)
    return _spectrum(twe, m.noise.lambda_array())


def _spectrum(twe: np.ndarray, lam: np.ndarray) -> np.ndarray:
    # real coefficients: T(e^{-iw}) = conj(T(e^{iw}))
    return twe @ lam @ twe.conj().T


def _scaled_gap(a: np.ndarray, b: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    scale = max(1.0, float(np.abs(a).max()), float(np.abs(b).max()))
    return float(np.abs(a - b).max()) / scale


def _with_retries(check, grid: FrequencyGrid, seed) -> bool:
    rng = random.Random(seed)
    last = None
    for attempt in range(POLE_RETRIES + 1):
        g = grid if attempt == 0 else grid.rotated(rng.uniform(0, 2 * np.pi))
        try:
            return check(g)
        except PoleAtPoint as exc:
            last = exc
    raise last


def check_equivalence(
    m1: NetworkModel,
    m2: NetworkModel,
    grid: Optional[FrequencyGrid] = None,
    tol: float = DEFAULT_TOL,
    seed=0,
) -> bool:
    """Same ``T_wr`` and same noise spectrum at every grid point."""
    if (m1.L, m1.K) != (m2.L, m2.K):
        raise DimensionMismatch("equivalence needs identical node and signal counts")
    if m1.node_labels != m2.node_labels or m1.signal_labels != m2.signal_labels:
        return False
    return check_abstraction(m1, m2, SelectionMatrix(tuple(range(m1.L))), grid, tol, seed, strict=False)


def check_abstraction(
    m1: NetworkModel,
    m2: NetworkModel,
    C: SelectionMatrix,
    grid: Optional[FrequencyGrid] = None,
    tol: float = DEFAULT_TOL,
    seed=0,
    strict: bool = True,
) -> bool:
    """``T_wr2 = C T_wr1`` and ``Phi2 = C Phi1 C^T`` on the grid.

    Differences are measured relative to ``max(1, |entries|)`` so that large
    but correct responses near lightly damped poles do not fail on rounding.
    """
    grid = FrequencyGrid.default() if grid is None else grid
    kept = list(C.kept)
    if m2.L != len(kept):
        raise DimensionMismatch(f"abstracted model has {m2.L} nodes, selection keeps {len(kept)}")
    if strict and not len(kept) < m1.L and kept != list(range(m1.L)):
        raise DimensionMismatch("an abstraction must keep fewer nodes")
    if m1.K != m2.K:
        raise DimensionMismatch("abstraction must keep the external signals")
    if any(k >= m1.L for k in kept):
        raise DimensionMismatch("selection index out of range")
    lam1, lam2 = m1.noise.lambda_array(), m2.noise.lambda_array()

    def run(g: FrequencyGrid) -> bool:
        for z in g:
            t1, e1 = _responses_at(m1, z)
            t2, e2 = _responses_at(m2, z)
            if _scaled_gap(t1[kept, :], t2) >= tol:
                return False
            phi1 = _spectrum(e1, lam1)[np.ix_(kept, kept)]
            if _scaled_gap(phi1, _spectrum(e2, lam2)) >= tol:
                return False
        return True

    return _with_retries(run, grid, seed)


def exact_abstraction_twr(m1: NetworkModel, m2: NetworkModel, C: SelectionMatrix) -> bool:
    """Symbolic comparison of ``T_wr2`` with ``C T_wr1``."""
    t1, _ = open_loop_response(m1)
    t2, _ = open_loop_response(m2)
    return t2 == t1.select(C.kept, None)


def hollow(g: TransferMatrix) -> bool:
    return all(not x for x in g.diagonal())


__all__ = [
    "NoiseRep", "NetworkModel", "FrequencyGrid", "SelectionMatrix", "ValidationReport",
    "validate_model", "open_loop_response", "noise_spectrum_at", "check_equivalence",
    "check_abstraction", "exact_abstraction_twr", "identity_lambda", "ONE", "ZERO",
]
