"""Exact polynomial powers through Kronecker substitution and multimodular NTTs.

A homogeneous polynomial is flattened to one dense univariate array,
transformed once per helper prime, raised to the power pointwise, and
transformed back. Helper primes are chosen below 2**42 so the butterfly
kernels can run a float-assisted Barrett reduction entirely in uint64.
The exact integer result comes out of a final CRT pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

from .errors import DomainError, InternalInvariantError
from .modarith import CrtBasis, Modulus, crt_combine, is_prime
from .monomials import Packing
from .polyring import SparsePoly

# Cap on helper primes. The butterfly kernel estimates the Barrett
# quotient in float64; the estimate is off by at most one when q < 2**42,
# which one conditional add and one conditional subtract repair.
_PRIME_CAP = 1 << 42

# Above this transform length the power-of-two Kronecker stride is traded
# for the minimal stride when that shrinks the transform.
_STRIDE_RELIEF = 1 << 22

_SIGN_BIT = np.uint64(1) << np.uint64(63)


# kernels


@numba.njit(numba.uint64(numba.uint64, numba.uint64, numba.uint64, numba.float64),
            cache=True, inline="always")
def _mulmod(x, y, q, qinv):
    qe = np.uint64(np.float64(x) * np.float64(y) * qinv)
    r = x * y - qe * q
    if r & _SIGN_BIT:
        r += q
    while r >= q:
        r -= q
    return r


@numba.njit(cache=True)
def _fwd_kernel(a, q, qinv, root):
    """Radix-2 decimation in frequency: natural order in, bit-reversed out."""
    size = a.size
    wm = root
    m = size
    while m >= 2:
        half = m >> 1
        for start in range(0, size, m):
            w = np.uint64(1)
            for j in range(start, start + half):
                x = a[j]
                y = a[j + half]
                s = x + y
                if s >= q:
                    s -= q
                d = x + q - y
                if d >= q:
                    d -= q
                a[j] = s
                a[j + half] = _mulmod(d, w, q, qinv)
                w = _mulmod(w, wm, q, qinv)
        wm = _mulmod(wm, wm, q, qinv)
        m = half


@numba.njit(cache=True)
def _inv_kernel(a, q, qinv, inv_root, inv_size):
    """Radix-2 decimation in time: bit-reversed in, natural order out, scaled."""
    size = a.size
    m = 2
    while m <= size:
        half = m >> 1
        wm = np.uint64(1)
        base = inv_root
        e = size // m
        while e:
            if e & 1:
                wm = _mulmod(wm, base, q, qinv)
            base = _mulmod(base, base, q, qinv)
            e >>= 1
        for start in range(0, size, m):
            w = np.uint64(1)
            for j in range(start, start + half):
                x = a[j]
                t = _mulmod(a[j + half], w, q, qinv)
                s = x + t
                if s >= q:
                    s -= q
                d = x + q - t
                if d >= q:
                    d -= q
                a[j] = s
                a[j + half] = d
                w = _mulmod(w, wm, q, qinv)
        m <<= 1
    for i in range(size):
        a[i] = _mulmod(a[i], inv_size, q, qinv)


@numba.njit(cache=True)
def _pow_kernel(a, k, q, qinv):
    for i in range(a.size):
        base = a[i]
        acc = np.uint64(1)
        e = k
        while e:
            if e & 1:
                acc = _mulmod(acc, base, q, qinv)
            base = _mulmod(base, base, q, qinv)
            e >>= 1
        a[i] = acc


@numba.njit(cache=True)
def _fold_kernel(dense, pos, inv_c, weight, q, qinv, acc_f, acc_u):
    """Accumulate one residue channel into the running CRT fold."""
    recip = 1.0 / q
    for j in range(pos.size):
        s = _mulmod(dense[pos[j]], inv_c, q, qinv)
        acc_f[j] += np.float64(s) * recip
        acc_u[j] += s * weight


# bounds and plans


@dataclass(frozen=True)
class PowerBound:
    """Upper bound on every coefficient of the power being computed."""

    value: int


def coefficient_bound(m: int, h: int, n: int, k: int) -> PowerBound:
    """Closed form ((m-1) * C(h+n-1, n-1))**k for coefficients of f**k,
    valid whenever f has n variables, degree h, and coefficients below m."""
    if m < 2:
        raise DomainError(f"coefficient cap {m} below 2")
    if k < 0 or h < 0 or n < 1:
        raise DomainError(f"bad shape m={m} h={h} n={n} k={k}")
    return PowerBound(((m - 1) * math.comb(h + n - 1, n - 1)) ** k)


def refined_power_bound(m: int, h: int, n: int, k: int) -> PowerBound:
    """Sharper bound: the true maximum coefficient of the extremal input,
    (m-1) times the sum of every degree-h monomial, raised to the k.
    Costs a full powering; worthwhile only when reused across many runs."""
    from .monomials import wics

    extremal = SparsePoly.from_terms(
        n, [(e, m - 1) for e in wics(h, n)], modulus=None
    )
    power = poly_power_multimodular(extremal, k)
    if power.is_zero:
        return PowerBound(1)
    return PowerBound(max(int(c) for c in power.coeffs))


@dataclass(frozen=True)
class NttPlan:
    length: int
    primes: tuple[Modulus, ...]
    roots: tuple[int, ...]
    inv_roots: tuple[int, ...]
    inv_length: tuple[int, ...]
    product: int

    def __post_init__(self):
        for m, w in zip(self.primes, self.roots):
            q = m.value
            if pow(w, self.length, q) != 1 or pow(w, self.length // 2, q) != q - 1:
                raise InternalInvariantError(f"bad root {w} mod {q}")


def _find_root(q: int, L: int) -> int:
    """Primitive L-th root of unity mod q, for prime q = cL + 1, L a 2-power."""
    e = (q - 1) // L
    for x in range(2, q):
        w = pow(x, e, q)
        # order divides L; it equals L exactly when w**(L/2) = -1
        if pow(w, L // 2, q) == q - 1:
            return w
    raise InternalInvariantError(f"no {L}-th root mod {q}")


def select_ntt_primes(L: int, bound) -> NttPlan:
    """Ascending primes q = cL + 1 below the kernel cap until their product
    clears the coefficient bound."""
    if L < 2 or L & (L - 1):
        raise DomainError(f"transform length {L} is not a power of 2")
    target = max(int(getattr(bound, "value", bound)), 1)
    primes, roots, inv_roots, inv_len = [], [], [], []
    product = 1
    q = 1
    while product <= target:
        q += L
        if q >= _PRIME_CAP:
            raise DomainError(
                f"not enough primes = 1 mod {L} below 2^42 for bound {target}"
            )
        if q < 3 or not is_prime(q):
            continue
        w = _find_root(q, L)
        primes.append(Modulus.of(q))
        roots.append(w)
        inv_roots.append(pow(w, -1, q))
        inv_len.append(pow(L, -1, q))
        product *= q
    return NttPlan(
        L, tuple(primes), tuple(roots), tuple(inv_roots), tuple(inv_len), product
    )


@lru_cache(maxsize=64)
def _cached_plan(L: int, bound_value: int) -> NttPlan:
    return select_ntt_primes(L, PowerBound(bound_value))


@lru_cache(maxsize=64)
def _shape_plan(n: int, h: int, m: int, k: int, pow2_stride: bool):
    """Stride, transform length, and prime plan for powering shape (n, h, m, k).

    Cached so repeated problems of one shape reuse one plan object.
    """
    T = max(k * h, 1)

    def transform_len(stride):
        dense = T * stride ** max(n - 2, 0) + 1
        return 1 << max((dense - 1).bit_length(), 1)

    stride = 1 << T.bit_length()
    L = transform_len(stride)
    if not pow2_stride and L > _STRIDE_RELIEF and transform_len(T + 1) < L:
        stride = T + 1
        L = transform_len(stride)
    bound = coefficient_bound(m, h, n, k)
    # factor 4 of headroom keeps the fused CRT fold's fraction below 1/4
    plan = _cached_plan(L, bound.value * 4)
    return stride, L, bound, plan


# Kronecker substitution


@lru_cache(maxsize=32)
def _bit_reversal(L: int) -> np.ndarray:
    bits = L.bit_length() - 1
    idx = np.arange(L, dtype=np.int64)
    rev = np.zeros(L, dtype=np.int64)
    for b in range(bits):
        rev = (rev << 1) | ((idx >> b) & 1)
    rev.flags.writeable = False
    return rev


def _reduced_positions(f: SparsePoly, stride: int) -> np.ndarray:
    """Dense positions of f's terms with the last variable eliminated."""
    rows = f.packing.unpack_rows(f.words)
    reduced = rows[:, :-1] if f.nvars > 1 else rows[:, :0]
    if reduced.size and int(reduced.max()) >= stride:
        raise DomainError(f"stride {stride} too small for exponents in the input")
    weights = stride ** np.arange(max(f.nvars - 1, 0), dtype=np.int64)
    return reduced @ weights if reduced.shape[1] else np.zeros(len(f), np.int64)


def kronecker_substitute(f: SparsePoly, stride: int) -> np.ndarray:
    """Flatten a homogeneous integer polynomial to dense univariate
    coefficients: the term with reduced exponents (a_1, ..., a_{n-1}) lands
    at position sum(a_i * stride**(i-1))."""
    if f.modulus is not None:
        raise DomainError("kronecker_substitute expects an integer polynomial")
    if not f.is_homogeneous():
        raise DomainError("kronecker_substitute needs a homogeneous input")
    positions = _reduced_positions(f, stride)
    length = f.degree * stride ** max(f.nvars - 2, 0) + 1
    out = np.zeros(length, dtype=object)
    for pos, c in zip(positions.tolist(), f.coeffs.tolist()):
        out[pos] += c
    return out


def _poly_from_positions(positions, coeffs, stride, n, total_degree, modulus,
                         packing=None, exc=InternalInvariantError):
    """Rebuild a homogeneous polynomial from dense positions, restoring the
    eliminated variable's exponent from the degree."""
    if packing is None:
        packing = Packing.for_max_exponent(n, max(total_degree, 1))
    positions = np.asarray(positions, dtype=np.int64)
    if positions.size == 0:
        return SparsePoly.zero(n, total_degree, modulus, packing)
    rem = positions.copy()
    words = np.zeros(positions.size, dtype=np.uint64)
    degsum = np.zeros(positions.size, dtype=np.int64)
    shifts = packing.shifts
    for i in range(n - 1):
        digit = rem % stride
        rem //= stride
        degsum += digit
        words |= digit.astype(np.uint64) << np.uint64(shifts[i])
    if rem.any():
        raise exc("position beyond the admissible Kronecker range")
    last = total_degree - degsum
    if (last < 0).any():
        raise exc("negative exponent reconstructed from a Kronecker position")
    words |= last.astype(np.uint64) << np.uint64(shifts[n - 1])
    order = np.argsort(words)
    words = words[order]
    if isinstance(coeffs, np.ndarray) and coeffs.dtype == object:
        coeffs = coeffs[order]
    else:
        coeffs = np.asarray(coeffs, dtype=np.uint64)[order]
    return SparsePoly._make(n, packing, words, coeffs, modulus, total_degree)


def kronecker_invert(coeffs, stride: int, n: int, total_degree: int) -> SparsePoly:
    """Exact inverse of kronecker_substitute for homogeneous polynomials."""
    coeffs = np.asarray(coeffs, dtype=object)
    nz = np.nonzero(coeffs)[0]
    vals = coeffs[nz]
    return _poly_from_positions(
        nz, vals, stride, n, total_degree, None, exc=DomainError
    )


# transforms


def _channels(values, plan: NttPlan) -> list[np.ndarray]:
    rows = [np.asarray(v) for v in values]
    if len(rows) != len(plan.primes):
        raise DomainError(
            f"{len(rows)} channels for {len(plan.primes)} primes"
        )
    for v in rows:
        if v.shape != (plan.length,):
            raise DomainError(f"channel length {v.shape} != {plan.length}")
    return rows


def ntt_forward(values, plan: NttPlan) -> np.ndarray:
    """Evaluate each residue channel at successive powers of its root.
    Channel i of the result is [f(1), f(w_i), f(w_i^2), ...] mod prime i."""
    rows = _channels(values, plan)
    rev = _bit_reversal(plan.length)
    out = np.empty((len(rows), plan.length), dtype=np.uint64)
    for i, (m, w) in enumerate(zip(plan.primes, plan.roots)):
        a = (rows[i].astype(np.uint64) % np.uint64(m.value)).copy()
        _fwd_kernel(a, np.uint64(m.value), 1.0 / m.value, np.uint64(w))
        out[i] = a[rev]
    return out


def ntt_inverse(values, plan: NttPlan) -> np.ndarray:
    rows = _channels(values, plan)
    rev = _bit_reversal(plan.length)
    out = np.empty((len(rows), plan.length), dtype=np.uint64)
    for i, m in enumerate(plan.primes):
        a = rows[i].astype(np.uint64)[rev].copy()
        _inv_kernel(
            a,
            np.uint64(m.value),
            1.0 / m.value,
            np.uint64(plan.inv_roots[i]),
            np.uint64(plan.inv_length[i]),
        )
        out[i] = a
    return out


# powering pipelines


def _monomial_power(f: SparsePoly, k: int, modulus=None) -> SparsePoly:
    (exps, c), = f.terms()
    scaled = tuple(e * k for e in exps)
    value = int(c) ** k if modulus is None else pow(int(c), k, modulus)
    return SparsePoly.from_terms(
        f.nvars, [(scaled, value)], modulus=modulus,
        packing=Packing.for_max_exponent(f.nvars, max(f.degree * k, 1)),
        degree=f.degree * k,
    )


def _validate_power_input(f: SparsePoly, k: int):
    if f.modulus is not None:
        raise DomainError("powering expects an integer polynomial; lift first")
    if k < 0:
        raise DomainError(f"negative exponent {k}")
    if not f.is_homogeneous():
        raise DomainError("powering requires a homogeneous input")
    if any(int(c) < 0 for c in f.coeffs):
        raise DomainError("negative coefficients are not supported")


def poly_power_multimodular(f: SparsePoly, k: int,
                            n: int | None = None, h: int | None = None) -> SparsePoly:
    """Exact f**k over the integers via one NTT per helper prime."""
    _validate_power_input(f, k)
    n = f.nvars if n is None else n
    h = f.degree if h is None else h
    if n != f.nvars or h != f.degree:
        raise DomainError("shape arguments disagree with the polynomial")
    if k == 0:
        return SparsePoly.from_terms(n, [((0,) * n, 1)])
    if k == 1 or f.is_zero:
        return f if k == 1 else SparsePoly.zero(n, h * k)
    if len(f) == 1:
        return _monomial_power(f, k)
    m = max(int(c) for c in f.coeffs) + 1
    stride, L, _, plan = _shape_plan(n, h, m, k, True)
    positions = _reduced_positions(f, stride)
    T = k * h

    channels = np.empty((len(plan.primes), L), dtype=np.uint64)
    coeff_ints = [int(c) for c in f.coeffs]
    for i, mod in enumerate(plan.primes):
        q = mod.value
        dense = np.zeros(L, dtype=np.uint64)
        dense[positions] = np.array([c % q for c in coeff_ints], dtype=np.uint64)
        _fwd_kernel(dense, np.uint64(q), 1.0 / q, np.uint64(plan.roots[i]))
        _pow_kernel(dense, k, np.uint64(q), 1.0 / q)
        _inv_kernel(dense, np.uint64(q), 1.0 / q,
                    np.uint64(plan.inv_roots[i]), np.uint64(plan.inv_length[i]))
        channels[i] = dense

    mask = (channels != 0).any(axis=0)
    nz = np.nonzero(mask)[0]
    basis = CrtBasis.of(tuple(m.value for m in plan.primes))
    residue_cols = channels[:, nz]
    values = np.empty(nz.size, dtype=object)
    for j in range(nz.size):
        values[j] = crt_combine([int(r) for r in residue_cols[:, j]], basis)
    return _poly_from_positions(nz, values, stride, n, T, None)


def power_mod_small(f: SparsePoly, k: int, small_mod: int,
                    packing: Packing | None = None) -> SparsePoly:
    """f**k with coefficients delivered mod small_mod (a fused CRT fold).

    The exact coefficients are never materialized: each residue channel is
    folded into a float wrap estimate plus a mod-small accumulator, which
    is enough to recover every coefficient mod small_mod. Channels are
    processed one at a time so only a single dense scratch array lives at
    once. Terms whose coefficient is 0 mod small_mod are dropped.
    """
    _validate_power_input(f, k)
    # the cap keeps every fold accumulator below 2**63 for any plausible
    # channel count, so the signed recovery below cannot overflow
    if small_mod < 2 or small_mod >= 1 << 12:
        raise DomainError(f"small modulus {small_mod} out of range")
    n, h = f.nvars, f.degree
    if k == 0:
        return SparsePoly.from_terms(n, [((0,) * n, 1)], modulus=small_mod)
    if f.is_zero:
        return SparsePoly.zero(n, h * k, small_mod, packing)
    if len(f) == 1:
        out = _monomial_power(f, k, modulus=small_mod)
        return out if packing is None else out.repack(packing)
    m = max(int(c) for c in f.coeffs) + 1
    stride, L, _, plan = _shape_plan(n, h, m, k, False)
    positions = _reduced_positions(f, stride)
    residues = np.array([int(c) % small_mod for c in f.coeffs], dtype=np.uint64)
    T = k * h

    support = _support_positions(T, stride, n - 1)
    acc_f = np.zeros(support.size, dtype=np.float64)
    acc_u = np.zeros(support.size, dtype=np.uint64)
    prod_mod = plan.product % small_mod
    coeff_ints = [int(c) for c in f.coeffs]
    dense = np.empty(L, dtype=np.uint64)
    for i, mod in enumerate(plan.primes):
        q = mod.value
        cofactor = plan.product // q
        inv_c = pow(cofactor % q, -1, q)
        dense[:] = 0
        dense[positions] = np.array([c % q for c in coeff_ints], dtype=np.uint64)
        _fwd_kernel(dense, np.uint64(q), 1.0 / q, np.uint64(plan.roots[i]))
        _pow_kernel(dense, k, np.uint64(q), 1.0 / q)
        _inv_kernel(dense, np.uint64(q), 1.0 / q,
                    np.uint64(plan.inv_roots[i]), np.uint64(plan.inv_length[i]))
        _fold_kernel(dense, support, np.uint64(inv_c),
                     np.uint64(cofactor % small_mod), np.uint64(q), 1.0 / q,
                     acc_f, acc_u)
    del dense

    # wrap count: sum over channels of s_i/q_i equals coefficient/product
    # plus the wrap count, and the headroom factor keeps the fractional
    # part safely below 1, so the nudged floor is exact
    wraps = np.floor(acc_f + 2.0 ** -20).astype(np.int64)
    del acc_f
    vals = (acc_u.astype(np.int64) - wraps * prod_mod) % small_mod
    del acc_u, wraps
    keep = np.nonzero(vals)[0]
    return _poly_from_positions(
        support[keep], vals[keep], stride, n, T, small_mod, packing
    )


def _support_positions(T: int, stride: int, nv: int) -> np.ndarray:
    """Ascending Kronecker positions of every monomial of degree at most T
    in nv variables (the reduced-variable support of a degree-T power)."""
    if nv == 0:
        return np.zeros(1, dtype=np.int64)
    if nv == 1:
        return np.arange(T + 1, dtype=np.int64)
    if nv == 2:
        lens = np.arange(T + 1, 0, -1, dtype=np.int64)
        second = np.repeat(np.arange(T + 1, dtype=np.int64), lens)
        starts = np.repeat(np.cumsum(lens) - lens, lens)
        first = np.arange(second.size, dtype=np.int64) - starts
        return second * stride + first
    blocks = []
    top_weight = stride ** (nv - 1)
    for c in range(T + 1):
        blocks.append(c * top_weight + _support_positions(T - c, stride, nv - 1))
    return np.concatenate(blocks)
