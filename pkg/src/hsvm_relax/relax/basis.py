"""Monomial bookkeeping for moment relaxations.

Monomials are exponent tuples over a group's local variables. Within a
degree, pure powers come first, then monomials with two distinct variables,
and so on; ties are broken lexicographically (earlier variables first). For
``(w0, w1, w2, xi)`` at degree 2 this gives
``1, w0, w1, w2, xi, w0^2, w1^2, w2^2, xi^2, w0w1, w0w2, w0xi, w1w2, w1xi, w2xi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb

import numpy as np

Monomial = tuple[int, ...]


def _key(alpha: Monomial):
    support = sum(1 for a in alpha if a)
    return (sum(alpha), support, tuple(-a for a in alpha))


@lru_cache(maxsize=None)
def monomials(nvars: int, degree: int) -> tuple[Monomial, ...]:
    """All exponent tuples of total degree <= ``degree`` in basis order."""
    out = []
    for deg in range(degree + 1):
        for combo in combinations_with_replacement(range(nvars), deg):
            alpha = [0] * nvars
            for j in combo:
                alpha[j] += 1
            out.append(tuple(alpha))
    return tuple(sorted(out, key=_key))


def basis_size(nvars: int, degree: int) -> int:
    return comb(nvars + degree, degree)


def add(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def monomial_name(alpha: Monomial, names) -> str:
    parts = []
    for a, nm in zip(alpha, names):
        if a == 1:
            parts.append(nm)
        elif a > 1:
            parts.append(f"{nm}^{a}")
    return "*".join(parts) if parts else "1"


@dataclass(frozen=True)
class MonomialBasis:
    variables: tuple[str, ...]
    degree: int
    entries: tuple[Monomial, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", monomials(len(self.variables), self.degree))

    @property
    def size(self) -> int:
        return len(self.entries)

    def names(self) -> list[str]:
        return [monomial_name(a, self.variables) for a in self.entries]


# A polynomial is a dict mapping exponent tuples to coefficients.
Polynomial = dict


def poly_degree(p: Polynomial) -> int:
    return max((sum(a) for a, c in p.items() if c != 0), default=0)


def unit(nvars: int, j: int, power: int = 1) -> Monomial:
    alpha = [0] * nvars
    alpha[j] = power
    return tuple(alpha)


def localizer_degree(kappa: int, gdeg: int) -> int:
    """Largest ``s`` with ``2 s + deg(g) <= 2 kappa``."""
    return (2 * kappa - gdeg) // 2


class TMSIndex:
    """Maps monomials of degree <= 2 kappa to positions in a TMS vector."""

    def __init__(self, nvars: int, kappa: int):
        self.nvars = nvars
        self.kappa = kappa
        self.monos = monomials(nvars, 2 * kappa)
        self.pos = {a: i for i, a in enumerate(self.monos)}

    def __len__(self) -> int:
        return len(self.monos)

    def moment_index(self, degree: int | None = None) -> np.ndarray:
        """Integer matrix of TMS positions for ``[q]_s [q]_s^T``."""
        deg = self.kappa if degree is None else degree
        basis = monomials(self.nvars, deg)
        idx = np.empty((len(basis), len(basis)), dtype=int)
        for i, a in enumerate(basis):
            for j, b in enumerate(basis):
                idx[i, j] = self.pos[add(a, b)]
        return idx

    def localizer_terms(self, g: Polynomial, degree: int) -> list[tuple[int, int, int, float]]:
        """Sparse entries ``(row, col, tms_pos, coeff)`` of ``g [q]_s [q]_s^T``."""
        basis = monomials(self.nvars, degree)
        out = []
        for i, a in enumerate(basis):
            for j in range(i, len(basis)):
                ab = add(a, basis[j])
                for beta, coef in g.items():
                    if coef != 0:
                        out.append((i, j, self.pos[add(ab, beta)], float(coef)))
        return out

    def moment_matrix(self, z, degree: int | None = None) -> np.ndarray:
        return np.asarray(z)[self.moment_index(degree)]
