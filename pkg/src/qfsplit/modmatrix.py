"""Dense mod-p products with reduction delayed under an overflow budget.

Accumulators are 64-bit, so for the primes in scope one reduction per
dot product would already be safe; the budget is the explicit contract
that makes the delay provably exact and keeps the door open for
narrower accumulator types.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .mtsmatrix import MtsMatrix
from .polyring import DenseVector

# Memory ceiling on the unreduced accumulation window: the uint64 cast
# of a column block is the only large transient.
_COL_BLOCK = 2048


@dataclass(frozen=True)
class OverflowBudget:
    """Safe unreduced-product count for entries in [0, entry_bound - 1].

    ops products, each at most (entry_bound - 1)^2, plus one reduced
    carry never exceed element_cap.
    """

    element_cap: int
    entry_bound: int
    ops: int


def overflow_budget(element_cap: int, entry_bound: int) -> OverflowBudget:
    """Budget with ops = floor(cap / (N-1)^2) - 1 for N = entry_bound."""
    if entry_bound < 2:
        raise DomainError(f"entry bound must be at least 2, got {entry_bound}")
    q = (entry_bound - 1) ** 2
    if element_cap <= q:
        raise DomainError(
            f"element cap {element_cap} cannot hold one product of size {q}"
        )
    ops = element_cap // q - 1
    if ops < 1:
        raise DomainError(
            f"element cap {element_cap} admits no safe accumulation for N={entry_bound}"
        )
    return OverflowBudget(element_cap, entry_bound, ops)


def uint64_budget(p: int) -> OverflowBudget:
    """The budget of a 64-bit accumulator over residues mod p."""
    return overflow_budget(2**64 - 1, p)


def _as_entries(m, p):
    """Entry block, modulus, and the MtsMatrix when one was given."""
    if isinstance(m, MtsMatrix):
        if p is not None and p != m.p:
            raise DomainError(f"matrix is over F_{m.p}, got p={p}")
        return m.entries, m.p, m
    arr = np.asarray(m)
    if p is None:
        raise DomainError("raw matrix input needs an explicit p")
    if arr.ndim != 2 or not np.issubdtype(arr.dtype, np.integer):
        raise DomainError("matrix must be a 2d integer array")
    if arr.size and (int(arr.max()) >= p or int(arr.min()) < 0):
        raise DomainError("matrix entries must be reduced mod p")
    return arr, p, None


def _as_values(v, cols, source_basis):
    if isinstance(v, DenseVector):
        if source_basis is not None and (
            v.basis.degree != source_basis.degree
            or v.basis.nvars != source_basis.nvars
        ):
            raise DomainError(
                f"vector basis degree {v.basis.degree} does not match matrix source degree"
            )
        vals = v.values
    else:
        vals = np.asarray(v)
        if vals.ndim != 1 or not np.issubdtype(vals.dtype, np.integer):
            raise DomainError("vector must be a 1d integer array")
    if vals.size != cols:
        raise DomainError(f"vector length {vals.size} does not match {cols} columns")
    return vals


def _window(budget, cadence, p):
    if budget is None:
        budget = uint64_budget(p)
    if budget.entry_bound < p:
        raise DomainError(
            f"budget entry bound {budget.entry_bound} is below the modulus {p}"
        )
    if cadence is None:
        cadence = budget.ops
    if not 1 <= cadence <= budget.ops:
        raise DomainError(f"cadence {cadence} outside budget ops {budget.ops}")
    step = int(min(cadence, _COL_BLOCK))
    # One reduced carry below p rides along with each unreduced window.
    assert step * (p - 1) ** 2 + (p - 1) <= budget.element_cap
    return step


def matvec(m, v, budget=None, cadence=None, p=None):
    """M @ v over F_p, reducing every `cadence` products.

    Any cadence within the budget yields the same exact result; the
    default uses the full budget. MtsMatrix and DenseVector inputs
    return a DenseVector over the target basis; raw arrays return a
    raw uint64 array.
    """
    entries, p, mm = _as_entries(m, p)
    vals = _as_values(v, entries.shape[1], mm.source_basis if mm else None)
    if vals.size and int(vals.max()) >= p:
        raise DomainError("vector values must be reduced mod p")
    step = _window(budget, cadence, p)
    acc = np.zeros(entries.shape[0], dtype=np.uint64)
    v64 = vals.astype(np.uint64)
    pp = np.uint64(p)
    for s in range(0, entries.shape[1], step):
        e = min(s + step, entries.shape[1])
        acc += entries[:, s:e].astype(np.uint64) @ v64[s:e]
        acc %= pp
    if mm is not None and isinstance(v, DenseVector):
        return DenseVector(mm.target_basis, acc)
    return acc


def matmul(a, b, budget=None, cadence=None, p=None):
    """A @ B over F_p with the same delayed-reduction window as matvec.

    Two MtsMatrix inputs compose as maps (inner bases must agree) and
    return an MtsMatrix; raw integer arrays return a uint64 array.
    """
    ae, pa, ma = _as_entries(a, p)
    be, pb, mb = _as_entries(b, p if p is not None else pa)
    if pa != pb:
        raise DomainError(f"moduli differ: {pa} vs {pb}")
    if ae.shape[1] != be.shape[0]:
        raise DomainError(
            f"inner dimensions disagree: {ae.shape[1]} vs {be.shape[0]}"
        )
    if (ma is None) != (mb is None):
        raise DomainError("matmul operands must both be MtsMatrix or both raw")
    if ma is not None and (
        ma.source_basis.degree != mb.target_basis.degree
        or ma.source_basis.nvars != mb.target_basis.nvars
    ):
        raise DomainError("inner bases do not compose")
    step = _window(budget, cadence, pa)
    out = np.zeros((ae.shape[0], be.shape[1]), dtype=np.uint64)
    pp = np.uint64(pa)
    for s in range(0, ae.shape[1], step):
        e = min(s + step, ae.shape[1])
        out += ae[:, s:e].astype(np.uint64) @ be[s:e, :].astype(np.uint64)
        out %= pp
    if ma is not None:
        return MtsMatrix(out.astype(np.uint16), mb.source_basis, ma.target_basis, pa)
    return out
