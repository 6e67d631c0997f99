"""Quasi-F-split height of Calabi-Yau hypersurfaces over F_p.

Two drivers compute the same invariant: the naive one iterates the
splitting operator on polynomials, the matrix one applies the operator
as a fixed dense matrix on coefficient vectors. Height 1 is the plain
Fedder criterion; height h > 1 means the criterion first succeeds
after h-1 applications of g -> u(delta * g); exceeding the bound
reports infinity.
"""

import math
from dataclasses import dataclass

from .errors import DomainError
from .modarith import is_prime
from .modmatrix import matvec
from .mtsmatrix import ZERO_MAP, build_mts
from .polyring import (
    SparsePoly,
    _mul_mod,
    delta1,
    fedder_survives,
    power_mod_p,
    split_u,
    to_dense,
)

INFINITE = math.inf


def default_bound(n: int) -> int:
    """Proven finite-height ceiling, where one is known.

    For quartic K3 surfaces (n=4) finite heights lie in 1..10. No
    numeric bound is claimed for other n; callers must supply one.
    """
    if n == 4:
        return 10
    raise DomainError(f"no default height bound for n={n}; pass bound explicitly")


@dataclass(frozen=True)
class HeightResult:
    """height is a positive integer or math.inf; iterations counts
    applications of the splitting operator."""

    height: object
    bound_used: int
    iterations: int

    def __post_init__(self):
        if self.is_finite:
            if not isinstance(self.height, int) or self.height < 1:
                raise DomainError(f"finite height must be a positive integer, got {self.height}")
            if self.height > self.bound_used:
                raise DomainError("finite height exceeds the bound used")

    @property
    def is_finite(self) -> bool:
        return not (isinstance(self.height, float) and math.isinf(self.height))


@dataclass(frozen=True)
class SurfaceProblem:
    """A degree-n hypersurface in n variables over F_p with a height bound.

    deg f = nvars is the Calabi-Yau condition; bound defaults to the
    proven ceiling when one exists for n.
    """

    p: int
    n: int
    f: SparsePoly
    bound: int | None = None

    def __post_init__(self):
        if not is_prime(self.p):
            raise DomainError(f"p={self.p} is not prime")
        if self.n < 2:
            raise DomainError(f"need at least 2 variables, got n={self.n}")
        if self.f.nvars != self.n:
            raise DomainError(f"f has {self.f.nvars} variables, expected {self.n}")
        if self.f.modulus != self.p:
            raise DomainError(f"f has modulus {self.f.modulus}, expected {self.p}")
        if self.f.is_zero:
            raise DomainError("f must be nonzero")
        if not self.f.is_homogeneous() or self.f.degree != self.n:
            raise DomainError(
                f"f must be homogeneous of degree {self.n} (Calabi-Yau condition)"
            )
        if self.bound is None:
            object.__setattr__(self, "bound", default_bound(self.n))
        if not isinstance(self.bound, int) or self.bound < 1:
            raise DomainError(f"bound must be a positive integer, got {self.bound}")


def height_naive(prob: SurfaceProblem) -> HeightResult:
    """Iterate g -> u(delta * g) on sparse polynomials until the
    Fedder coefficient survives or the bound is passed."""
    p, b = prob.p, prob.bound
    g = power_mod_p(prob.f, p - 1)
    if fedder_survives(g):
        return HeightResult(1, b, 0)
    if b < 2:
        return HeightResult(INFINITE, b, 0)
    delta = delta1(g)
    h = 2
    iters = 0
    while True:
        if b < h:
            return HeightResult(INFINITE, b, iters)
        g = split_u(_mul_mod(delta, g))
        iters += 1
        if fedder_survives(g):
            return HeightResult(h, b, iters)
        h += 1


def height_matrix(prob: SurfaceProblem, algorithm: str = "wics") -> HeightResult:
    """Same loop with the operator realized once as a matrix; each
    round is a matvec and one coefficient test."""
    p, n, b = prob.p, prob.n, prob.bound
    g = power_mod_p(prob.f, p - 1)
    if fedder_survives(g):
        return HeightResult(1, b, 0)
    if b < 2:
        return HeightResult(INFINITE, b, 0)
    delta = delta1(g)
    m = build_mts(delta, g.degree, p, algorithm)
    if m is ZERO_MAP:
        # Every product is annihilated, so no later test can survive.
        return HeightResult(INFINITE, b, 0)
    gv = to_dense(g, m.source_basis)
    cap_index = m.target_basis.index_of((p - 1,) * n)
    h = 2
    iters = 0
    while True:
        if b < h:
            return HeightResult(INFINITE, b, iters)
        gv = matvec(m, gv)
        iters += 1
        if int(gv.values[cap_index]) != 0:
            return HeightResult(h, b, iters)
        h += 1
