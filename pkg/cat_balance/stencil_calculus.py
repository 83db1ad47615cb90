"""Interpolation, differentiation and quadrature weights on uniform 2p-point stencils.

All weights are generated with exact rational arithmetic on the unit-spaced reference
stencil ``-p+1, ..., p`` and converted to float64 once. The mesh scaling (``1/dx**k``
for derivatives, ``dx`` for integrals) is applied by the caller at evaluation time.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache
from math import factorial

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionError, InvalidOffsetError, InvalidOrderError, InvalidSubintervalError

HALF = Fraction(1, 2)


def stencil_nodes(p: int) -> tuple[int, ...]:
    """Return the reference nodes -p+1..p of a 2p-point stencil."""
    if p < 1:
        raise InvalidOrderError(f"Stencil half-width must be positive, got {p}")
    return tuple(range(-p + 1, p + 1))


def _fornberg(z: Fraction, nodes: tuple[int, ...], m: int) -> list[list[Fraction]]:
    """Fornberg's recursion: c[j][k] is the weight of node j for the k-th derivative at z."""
    n = len(nodes) - 1
    c = [[Fraction(0)] * (m + 1) for _ in range(n + 1)]
    c1 = Fraction(1)
    c4 = nodes[0] - z
    c[0][0] = Fraction(1)
    for i in range(1, n + 1):
        mn = min(i, m)
        c2 = Fraction(1)
        c5 = c4
        c4 = nodes[i] - z
        for j in range(i):
            c3 = Fraction(nodes[i] - nodes[j])
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2
            for k in range(mn, 0, -1):
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3
            c[j][0] = c4 * c[j][0] / c3
        c1 = c2
    return c


@cache
def exact_weights(p: int, k: int, q: Fraction) -> tuple[Fraction, ...]:
    """Exact gamma^{k,q}_{p,j}, j = -p+1..p."""
    nodes = stencil_nodes(p)
    if not 0 <= k <= 2 * p - 1:
        raise InvalidOrderError(f"Derivative order {k} not in 0..{2 * p - 1} for p={p}")
    table = _fornberg(Fraction(q), nodes, k)
    return tuple(row[k] for row in table)


def fornberg_weights(p: int, k: int, q: Fraction | float | int) -> NDArray[np.float64]:
    """Weights of the interpolatory formula for the k-th derivative at offset q.

    Args:
        p: Half stencil width
        k: Derivative order, 0 <= k <= 2p-1
        q: Rational evaluation offset relative to the stencil centre node

    Returns:
        Array of 2p weights for the nodes -p+1..p
    """
    return np.array([float(w) for w in exact_weights(p, k, Fraction(q))])


def _poly_mul(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def _integrate(coeffs: list[Fraction], lo: int, hi: int) -> Fraction:
    return sum(
        (c * (Fraction(hi) ** (m + 1) - Fraction(lo) ** (m + 1)) / (m + 1) for m, c in enumerate(coeffs)),
        Fraction(0),
    )


@cache
def exact_quadrature(p: int, j: int) -> tuple[Fraction, ...]:
    """Exact a^{j}_{p,l}: integrals of the Lagrange basis over [j-1, j]."""
    nodes = stencil_nodes(p)
    if not -p + 2 <= j <= p:
        raise InvalidSubintervalError(f"Subinterval {j} not in {-p + 2}..{p} for P={p}")
    weights = []
    for l in nodes:
        basis = [Fraction(1)]
        for m in nodes:
            if m != l:
                basis = _poly_mul(basis, [Fraction(-m, l - m), Fraction(1, l - m)])
        weights.append(_integrate(basis, j - 1, j))
    return tuple(weights)


def quadrature_weights(P: int, j: int) -> NDArray[np.float64]:
    """Interpolatory quadrature weights on the subinterval [j-1, j] of the 2P-point stencil."""
    return np.array([float(w) for w in exact_quadrature(P, j)])


@dataclass(frozen=True)
class DifferentiationTable:
    """Precomputed gamma^{k,q}_{p,j} for k = 0..2p-1 and q in {-p+1..p} U {1/2}."""

    p: int
    coeffs: dict[tuple[int, Fraction], NDArray[np.float64]] = field(repr=False)

    @classmethod
    def build(cls, p: int) -> "DifferentiationTable":
        return _differentiation_table(p)

    @property
    def offsets(self) -> tuple[Fraction, ...]:
        return (*(Fraction(n) for n in stencil_nodes(self.p)), HALF)

    def weights(self, k: int, q: Fraction | float | int) -> NDArray[np.float64]:
        """Look up the weights for derivative k at offset q."""
        if not 0 <= k <= 2 * self.p - 1:
            raise InvalidOrderError(f"Derivative order {k} not in 0..{2 * self.p - 1}")
        key = (k, Fraction(q))
        if key not in self.coeffs:
            raise InvalidOffsetError(f"Offset {q} not tabulated for p={self.p}")
        return self.coeffs[key]

    def matrix(self, k: int) -> NDArray[np.float64]:
        """Rows gamma^{k,j}_{p,*} for every stencil node j."""
        return np.stack([self.weights(k, j) for j in stencil_nodes(self.p)])


@cache
def _differentiation_table(p: int) -> DifferentiationTable:
    offsets = (*(Fraction(n) for n in stencil_nodes(p)), HALF)
    coeffs = {(k, q): fornberg_weights(p, k, q) for k in range(2 * p) for q in offsets}
    for array in coeffs.values():
        array.setflags(write=False)
    return DifferentiationTable(p=p, coeffs=coeffs)


@dataclass(frozen=True)
class QuadratureTable:
    """Precomputed a^{j}_{P,l} for j = -P+2..P."""

    P: int
    weights: dict[int, NDArray[np.float64]] = field(repr=False)

    @classmethod
    def build(cls, P: int) -> "QuadratureTable":
        return _quadrature_table(P)

    def matrix(self) -> NDArray[np.float64]:
        """(2P-1) x 2P matrix, row s for subinterval j = s - P + 2."""
        return np.stack([self.weights[j] for j in range(-self.P + 2, self.P + 1)])


@cache
def _quadrature_table(P: int) -> QuadratureTable:
    weights = {j: quadrature_weights(P, j) for j in range(-P + 2, P + 1)}
    for array in weights.values():
        array.setflags(write=False)
    return QuadratureTable(P=P, weights=weights)


def apply_formula(
    table: DifferentiationTable,
    k: int,
    q: Fraction | float | int,
    samples: NDArray[np.float64],
    dx: float,
) -> float | NDArray[np.float64]:
    """Apply the k-th derivative formula at offset q to 2p samples.

    Samples may carry trailing component axes; the stencil axis is the first one.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] != 2 * table.p:
        raise DimensionError(f"Expected {2 * table.p} samples, got {samples.shape[0]}")
    value = np.tensordot(table.weights(k, q), samples, axes=(0, 0)) / dx**k
    return float(value) if np.ndim(value) == 0 else value


def undivided_difference(P: int, samples: NDArray[np.float64]) -> float | NDArray[np.float64]:
    """Order-(2P-1) undivided difference of 2P samples at the stencil midpoint.

    Equals (2P-1)! times the leading coefficient of the interpolating polynomial, so it
    annihilates polynomials of degree <= 2P-2.
    """
    return apply_formula(DifferentiationTable.build(P), 2 * P - 1, HALF, samples, 1.0)


def taylor_factors(p: int, dt: float) -> NDArray[np.float64]:
    """Matrix T[r, m-1] = (r dt)^m / m! for time nodes r = -p+1..p and m = 1..2p-1."""
    r = np.array(stencil_nodes(p), dtype=float)[:, None]
    m = np.arange(1, 2 * p)
    return (r * dt) ** m / np.array([factorial(v) for v in m], dtype=float)


@dataclass(frozen=True)
class CatTables:
    """Float matrices used by the Taylor recursion for one half-width p."""

    p: int
    first_derivative: NDArray[np.float64]  # (2p, 2p): gamma^{1,j}_{p,l}
    time_derivatives: NDArray[np.float64]  # (2p, 2p): row k holds gamma^{k,0}_{p,r}, row 0 unused
    midpoint: NDArray[np.float64]  # (2p,): gamma^{0,1/2}_{p,j}
    quadrature: NDArray[np.float64]  # (2p-1, 2p)
    flux_factors: NDArray[np.float64]  # (2p,): dt-free 1/k! for k = 1..2p


@cache
def cat_tables(p: int) -> CatTables:
    """Cached matrices for the CAT2P recursion."""
    diff = DifferentiationTable.build(p)
    time_rows = np.zeros((2 * p, 2 * p))
    for k in range(1, 2 * p):
        time_rows[k] = diff.weights(k, 0)
    return CatTables(
        p=p,
        first_derivative=diff.matrix(1),
        time_derivatives=time_rows,
        midpoint=diff.weights(0, HALF),
        quadrature=QuadratureTable.build(p).matrix(),
        flux_factors=np.array([1.0 / factorial(k) for k in range(1, 2 * p + 1)]),
    )
