"""Finitely supported coefficient masks.

A mask is a finite sequence of real coefficients attached to a range of
integer indices.  Masks drive both refinement (upsampling convolution) and
decimation (downsampling convolution); all index bookkeeping lives here so
the transform code can stay close to the formulas.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MaskError, NearZeroSumError

__all__ = [
    "Mask",
    "bspline_mask",
    "kronecker_delta",
    "downsample_mask",
    "upsample_mask",
    "convolve",
    "mask_constants",
    "MaskConstants",
]

#: absolute tolerance for the even/odd sum test of refinement masks
SHIFT_INVARIANCE_TOL = 1e-12


@dataclass(frozen=True)
class Mask:
    """Coefficients ``coeffs[j]`` attached to indices ``first_index + j``.

    Exact zeros at either end are trimmed on construction so that equal
    masks have equal support; an all-zero mask is rejected.
    """

    coeffs: tuple[float, ...]
    first_index: int

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if not coeffs:
            raise MaskError("mask needs at least one coefficient")
        lo, hi = 0, len(coeffs)
        while lo < hi and coeffs[lo] == 0.0:
            lo += 1
        while hi > lo and coeffs[hi - 1] == 0.0:
            hi -= 1
        if lo == hi:
            raise MaskError("mask is identically zero")
        object.__setattr__(self, "coeffs", coeffs[lo:hi])
        object.__setattr__(self, "first_index", int(self.first_index) + lo)

    # -- indexing ---------------------------------------------------------

    @property
    def last_index(self) -> int:
        return self.first_index + len(self.coeffs) - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.first_index, self.last_index + 1)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, k: int) -> float:
        """Coefficient at absolute index ``k`` (zero off support)."""
        j = k - self.first_index
        if 0 <= j < len(self.coeffs):
            return self.coeffs[j]
        return 0.0

    # -- sums and checks ---------------------------------------------------

    def sum(self) -> float:
        return float(np.sum(self.array))

    def even_sum(self) -> float:
        return float(sum(c for k, c in self.items() if k % 2 == 0))

    def odd_sum(self) -> float:
        return float(sum(c for k, c in self.items() if k % 2 != 0))

    def items(self):
        for j, c in enumerate(self.coeffs):
            yield self.first_index + j, c

    def is_refinement_mask(self, tol: float = SHIFT_INVARIANCE_TOL) -> bool:
        """True when both parity sums equal 1, the shift-invariance condition
        a refinement step needs in order to treat even and odd outputs alike."""
        return abs(self.even_sum() - 1.0) <= tol and abs(self.odd_sum() - 1.0) <= tol

    def is_decimation_mask(self, tol: float = SHIFT_INVARIANCE_TOL) -> bool:
        """True when the coefficients sum to 1."""
        return abs(self.sum() - 1.0) <= tol

    def require_refinement(self):
        if not self.is_refinement_mask():
            raise MaskError(
                "refinement mask must have unit even and odd coefficient sums "
                f"(got even={self.even_sum():.3e}, odd={self.odd_sum():.3e})"
            )

    # -- derived masks ------------------------------------------------------

    def scaled(self, factor: float) -> "Mask":
        return Mask(tuple(factor * c for c in self.coeffs), self.first_index)

    def normalized(self, tol: float = 1e-8) -> "Mask":
        """Divide by the coefficient sum so the result sums to exactly 1."""
        s = self.sum()
        if abs(s) < tol:
            raise NearZeroSumError(f"coefficient sum {s:.3e} is too close to zero")
        return self.scaled(1.0 / s)

    def reversed(self) -> "Mask":
        return Mask(tuple(self.coeffs[::-1]), -self.last_index)

    def parity_part(self, parity: int) -> "Mask":
        """Sub-mask ``i -> a[2*i + parity]``, used for the even/odd split of a
        refinement step.  ``parity`` is 0 or 1."""
        ks = [k for k, c in self.items() if k % 2 == parity % 2]
        if not ks:
            raise MaskError(f"mask has no coefficients of parity {parity}")
        lo = min(ks) // 2 if parity % 2 == 0 else (min(ks) - 1) // 2
        hi = max(ks) // 2 if parity % 2 == 0 else (max(ks) - 1) // 2
        coeffs = [self[2 * i + parity % 2] for i in range(lo, hi + 1)]
        return Mask(tuple(coeffs), lo)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {"first_index": self.first_index, "coeffs": list(self.coeffs)}

    @classmethod
    def from_dict(cls, data: dict) -> "Mask":
        try:
            return cls(tuple(data["coeffs"]), int(data["first_index"]))
        except (KeyError, TypeError) as exc:
            raise MaskError(f"bad mask data: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Mask":
        return cls.from_dict(json.loads(text))


def bspline_mask(order: int) -> Mask:
    """B-spline refinement mask of the given order.

    Coefficients are ``2**-order * binom(order + 1, j)`` placed starting at
    index ``-ceil(order / 2)``.  Order 1 is piecewise linear, 2 is the
    corner-cutting quadratic, 3 the cubic.
    """
    if order < 1:
        raise MaskError("order must be a positive integer")
    coeffs = tuple(math.comb(order + 1, j) / 2.0**order for j in range(order + 2))
    return Mask(coeffs, -math.ceil(order / 2))


def kronecker_delta() -> Mask:
    """The identity decimation mask: plain downsampling."""
    return Mask((1.0,), 0)


def downsample_mask(mask: Mask) -> Mask:
    """Keep the even-indexed coefficients: ``b[k] = a[2*k]``."""
    lo = math.ceil(mask.first_index / 2)
    hi = math.floor(mask.last_index / 2)
    if lo > hi:
        raise MaskError("mask has no even-indexed coefficients")
    return Mask(tuple(mask[2 * k] for k in range(lo, hi + 1)), lo)


def upsample_mask(mask: Mask) -> Mask:
    """Insert zeros between coefficients: ``b[2*k] = a[k]``, odd entries 0."""
    coeffs = np.zeros(2 * len(mask.coeffs) - 1)
    coeffs[::2] = mask.coeffs
    return Mask(tuple(coeffs), 2 * mask.first_index)


def convolve(a: Mask, b: Mask) -> Mask:
    """Convolution of two masks; supports add, first indices add."""
    coeffs = np.convolve(a.array, b.array)
    return Mask(tuple(coeffs), a.first_index + b.first_index)


@dataclass(frozen=True)
class MaskConstants:
    """Norms of a mask used to assemble detail-decay bounds.

    ``moment`` is the raw first absolute moment ``sum |a_i| * |i|``; bounds
    that need the doubled decimation-side moment apply the factor 2 at the
    point of assembly, not here.
    """

    l1_norm: float
    moment: float
    max_abs: float
    sum: float = field(default=0.0)


def mask_constants(mask: Mask) -> MaskConstants:
    a = np.abs(mask.array)
    idx = np.abs(mask.indices)
    return MaskConstants(
        l1_norm=float(a.sum()),
        moment=float((a * idx).sum()),
        max_abs=float(a.max()),
        sum=mask.sum(),
    )
