"""Polynomials with extended-precision coefficients.

Coefficients live in a private mpmath context so exponents never overflow
and the alternating sums of the eigenbasis change stay accurate.  The
working precision is switched with :func:`set_precision`.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np

__all__ = ["MP", "set_precision", "get_precision", "Poly", "ThetaShiftedPoly"]

MP = mpmath.MPContext()
MP.dps = 50


def set_precision(name: str) -> None:
    """'double' runs the coefficient arithmetic at 53 bits, 'extended' at 50 digits."""
    if name == "double":
        MP.prec = 53
    elif name == "extended":
        MP.dps = 50
    else:
        raise ValueError(f"precision must be 'double' or 'extended', got {name!r}")


def get_precision() -> str:
    return "double" if MP.prec == 53 else "extended"


def _to_mp(value):
    if isinstance(value, (int, np.integer)):
        return MP.mpf(int(value))
    if hasattr(value, "_mpf_"):
        return MP.mpf(value)
    return MP.mpf(float(value))


@dataclass(frozen=True)
class Poly:
    """sum_k coeffs[k] x^k, trailing zeros stripped."""

    coeffs: tuple

    def __post_init__(self):
        cs = [_to_mp(c) for c in self.coeffs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if not cs:
            cs = [MP.zero]
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def monomial(cls, k: int, scale=1):
        return cls((0,) * k + (scale,))

    @classmethod
    def zero(cls):
        return cls((0,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0

    def __add__(self, other: "Poly") -> "Poly":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (MP.zero,) * (n - len(self.coeffs))
        b = other.coeffs + (MP.zero,) * (n - len(other.coeffs))
        return Poly(tuple(x + y for x, y in zip(a, b)))

    def __sub__(self, other: "Poly") -> "Poly":
        return self + other.scale(-1)

    def scale(self, factor) -> "Poly":
        factor = _to_mp(factor)
        return Poly(tuple(c * factor for c in self.coeffs))

    def to_numpy(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs])

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.to_numpy())

    def __repr__(self):
        terms = ", ".join(MP.nstr(c, 8) for c in self.coeffs)
        return f"Poly([{terms}])"


@dataclass(frozen=True)
class ThetaShiftedPoly:
    """x^theta * poly(x)."""

    poly: Poly
    theta: float

    @property
    def degree(self) -> int:
        return self.poly.degree

    def scale(self, factor) -> "ThetaShiftedPoly":
        return ThetaShiftedPoly(self.poly.scale(factor), self.theta)

    def __add__(self, other: "ThetaShiftedPoly") -> "ThetaShiftedPoly":
        if other.theta != self.theta:
            raise ValueError("cannot add x^theta multiples with different theta")
        return ThetaShiftedPoly(self.poly + other.poly, self.theta)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x**self.theta * self.poly(x)

    def __repr__(self):
        return f"x^{self.theta:g} * {self.poly!r}"
