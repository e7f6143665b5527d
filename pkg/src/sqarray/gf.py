"""Small finite fields GF(p^e) for labelling rows and columns.

Elements are the integers ``0..p^e - 1``; the base-p digits of an element
are its polynomial coefficients, lowest degree first.  Arithmetic is done
once into lookup tables, which is all the affine groups need.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

# monic irreducible moduli, coefficients lowest degree first
IRREDUCIBLE = {
    (2, 2): (1, 1, 1),        # x^2 + x + 1
    (2, 3): (1, 1, 0, 1),     # x^3 + x + 1
    (2, 4): (1, 1, 0, 0, 1),  # x^4 + x + 1
    (3, 2): (1, 0, 1),        # x^2 + 1
    (3, 3): (1, 2, 0, 1),     # x^3 + 2x + 1
    (3, 4): (2, 1, 0, 0, 1),  # x^4 + x + 2
    (5, 2): (2, 0, 1),        # x^2 + 2
    (5, 3): (1, 1, 0, 1),     # x^3 + x + 1
    (5, 4): (2, 0, 0, 0, 1),  # x^4 + 2
}


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def prime_power(n: int) -> tuple[int, int] | None:
    """``(p, e)`` with ``n == p**e``, or None."""
    for p in range(2, n + 1):
        if n % p == 0:
            e = 0
            m = n
            while m % p == 0:
                m //= p
                e += 1
            return (p, e) if m == 1 and is_prime(p) else None
    return None


def poly_mulmod(a, b, modulus, p):
    e = len(modulus) - 1
    prod = [0] * (2 * e - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod[i + j] = (prod[i + j] + x * y) % p
    for d in range(len(prod) - 1, e - 1, -1):
        c = prod[d]
        if c:
            for j in range(e + 1):
                prod[d - e + j] = (prod[d - e + j] - c * modulus[j]) % p
    return prod[:e]


class GaloisField:
    def __init__(self, p: int, e: int = 1, modulus=None):
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        if modulus is None:
            if e == 1:
                modulus = (0, 1)
            elif (p, e) in IRREDUCIBLE:
                modulus = IRREDUCIBLE[(p, e)]
            else:
                raise ValueError(f"no built-in modulus for GF({p}^{e})")
        self.p = p
        self.e = e
        self.modulus = tuple(modulus)
        self.order = p**e

    def digits(self, x: int) -> list[int]:
        return [(x // self.p**i) % self.p for i in range(self.e)]

    def from_digits(self, d) -> int:
        return sum(int(c) * self.p**i for i, c in enumerate(d))

    @cached_property
    def add_table(self) -> np.ndarray:
        q = self.order
        tab = np.zeros((q, q), dtype=np.int64)
        for a in range(q):
            da = self.digits(a)
            for b in range(q):
                tab[a, b] = self.from_digits([(x + y) % self.p for x, y in zip(da, self.digits(b))])
        return tab

    @cached_property
    def mul_table(self) -> np.ndarray:
        q, p, e = self.order, self.p, self.e
        if e == 1:
            x = np.arange(q)
            return np.outer(x, x) % p
        # multiplication by a is GF(p)-linear: a*b = sum_i b_i * (a * x^i)
        digits = np.array([self.digits(b) for b in range(q)])
        weights = p ** np.arange(e)
        tab = np.zeros((q, q), dtype=np.int64)
        for a in range(q):
            da = self.digits(a)
            basis = np.array([poly_mulmod(da, [0] * i + [1], self.modulus, p) for i in range(e)])
            tab[a] = (digits @ basis % p) @ weights
        return tab

    def is_field(self) -> bool:
        """Every nonzero element has a multiplicative inverse (modulus irreducible)."""
        m = self.mul_table[1:, 1:]
        return bool(np.all((m == 1).sum(axis=1) == 1))
