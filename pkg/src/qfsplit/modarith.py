"""Scalar modular arithmetic: Barrett reduction, powering, CRT reconstruction.

Moduli throughout are odd numbers below 2**62 (in practice odd primes).
Barrett constants are sized so that reduction is exact for every input
x < m**2, which covers the only case callers need: products of two
already-reduced values.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class Modulus:
    """An odd modulus with its precomputed Barrett constant.

    For m of bit length k we store mu = floor(2**(2k) / m). For x < m**2
    the estimate q = (x * mu) >> 2k undershoots x // m by at most 2, so
    reduction needs at most two correcting subtractions.
    """

    value: int
    shift: int
    mu: int

    @classmethod
    def of(cls, m: int) -> "Modulus":
        if m < 3 or m % 2 == 0:
            raise DomainError(f"modulus must be odd and >= 3, got {m}")
        if m >= 1 << 62:
            raise DomainError(f"modulus out of range: {m} >= 2**62")
        shift = 2 * m.bit_length()
        return cls(m, shift, (1 << shift) // m)


def _coerce(m) -> Modulus:
    return m if isinstance(m, Modulus) else Modulus.of(m)


def reduce(x: int, m) -> int:
    """Barrett reduction of x modulo m, exact for 0 <= x < m**2."""
    m = _coerce(m)
    if x < 0 or x >= m.value * m.value:
        raise DomainError(f"reduce requires 0 <= x < m**2, got x={x}, m={m.value}")
    q = (x * m.mu) >> m.shift
    r = x - q * m.value
    while r >= m.value:
        r -= m.value
    return r


def mod_pow(x: int, e: int, m) -> int:
    """x**e mod m by square and multiply, every product Barrett-reduced."""
    m = _coerce(m)
    if e < 0:
        raise DomainError(f"negative exponent {e}")
    x %= m.value
    acc = 1 % m.value
    while e:
        if e & 1:
            acc = reduce(acc * x, m)
        x = reduce(x * x, m)
        e >>= 1
    return acc


@dataclass(frozen=True)
class CrtBasis:
    """Pairwise coprime odd moduli with Garner mixed-radix constants.

    garner[j] is the inverse of (m_0 * ... * m_{j-1}) modulo m_j; the
    product field is the full modulus of the combined residue system.
    """

    moduli: tuple[Modulus, ...]
    garner: tuple[int, ...]
    product: int

    @classmethod
    def of(cls, values) -> "CrtBasis":
        mods = tuple(_coerce(v) for v in values)
        if len(set(m.value for m in mods)) != len(mods):
            raise DomainError("CRT moduli must be distinct")
        garner = []
        prefix = 1
        product = 1
        for m in mods:
            garner.append(pow(prefix % m.value, -1, m.value) if prefix > 1 else 1)
            prefix *= m.value
            product *= m.value
        return cls(mods, tuple(garner), product)


def crt_combine(residues, basis: CrtBasis) -> int:
    """The unique value in [0, product) with the given residues.

    Garner's mixed-radix walk: digit j is ((r_j - partial) * garner_j)
    mod m_j, where partial is the value reconstructed so far.
    """
    if len(residues) != len(basis.moduli):
        raise DomainError(
            f"expected {len(basis.moduli)} residues, got {len(residues)}"
        )
    value = 0
    prefix = 1
    for r, m, g in zip(residues, basis.moduli, basis.garner):
        if r < 0 or r >= m.value:
            raise DomainError(f"residue {r} out of range for modulus {m.value}")
        digit = reduce(((r - value) % m.value) * g, m)
        value += digit * prefix
        prefix *= m.value
    return value


# Witnesses making Miller-Rabin deterministic for all n < 2**64.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 2**64."""
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    if n >= 1 << 64:
        raise DomainError(f"is_prime supports n < 2**64, got {n}")
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    m = Modulus.of(n)
    for a in _MR_WITNESSES:
        x = mod_pow(a, d, m)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = reduce(x * x, m)
            if x == n - 1:
                break
        else:
            return False
    return True
