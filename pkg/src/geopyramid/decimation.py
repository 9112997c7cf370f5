"""Decimation masks as convolutional inverses.

A refinement mask ``alpha`` determines a downsampling counterpart ``gamma``
through the convolutional equation ``gamma * (alpha downsampled by 2) =
delta``.  The solution generally has infinite support with geometrically
decaying coefficients; this module computes it on a finite window, certifies
the decay, and derives the truncated and normalized masks actually used by
the transforms.

The solver works on the Laurent symbol of ``alpha downsampled by 2``: it
factors the symbol into roots, splits them across the unit circle, and
expands the reciprocal by partial fractions into one-sided geometric series
(causal for roots outside the circle, anticausal for roots inside).  A banded
linear system on a window at least four times the support radius provides an
independent cross-check, available as ``method="linear"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.linalg import solve_banded

from .errors import (
    EmptyTruncationError,
    MaskError,
    NumericalError,
    SymbolRootError,
)
from .masks import Mask, convolve, downsample_mask

__all__ = [
    "DecimationSolution",
    "solve_decimation",
    "truncate",
    "normalize",
    "tail_mass",
]

#: roots closer than this to the unit circle make the inverse ill-defined
UNIT_CIRCLE_TOL = 1e-8

#: coefficients are computed until the decay bound drops below this
COEFF_FLOOR = 1e-15

#: max residual of gamma * symbol - delta accepted on the computed window
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class DecimationSolution:
    """Windowed solution of ``gamma * symbol = delta``.

    ``decay_c`` and ``decay_lambda`` certify ``|gamma[k]| <= decay_c *
    decay_lambda ** |k|`` on the computed support, and the same bound governs
    the uncomputed tail, so tail sums can be estimated analytically.
    """

    gamma: Mask
    decay_c: float
    decay_lambda: float
    residual: float
    symbol: Mask
    roots: tuple[complex, ...]

    @property
    def support_radius(self) -> int:
        return max(-self.gamma.first_index, self.gamma.last_index)

    def truncated(self, eps: float) -> Mask:
        return truncate(self.gamma, eps)

    def normalized(self, eps: float) -> Mask:
        return normalize(truncate(self.gamma, eps))

    def tail_mass(self, omega: Iterable[int]) -> float:
        """Sum of ``|gamma[k]|`` outside the index set ``omega``.

        Adds the geometric bound for the tail beyond the computed window, so
        the result is an upper estimate of the true infinite sum.
        """
        eta = tail_mass(self.gamma, omega)
        lam = self.decay_lambda
        analytic_tail = 2.0 * self.decay_c * lam ** (self.support_radius + 1) / (1.0 - lam)
        return eta + analytic_tail


def solve_decimation(
    alpha: Mask,
    support_radius: int | None = None,
    method: str = "symbol",
) -> DecimationSolution:
    """Solve ``gamma * (alpha downsampled by 2) = delta`` on a finite window.

    Parameters
    ----------
    alpha : Mask
        Refinement mask; must have unit even and odd coefficient sums.
    support_radius : int, optional
        Largest absolute index of the computed window.  Defaults to the
        smallest radius at which the certified decay bound falls below
        ``1e-15``.
    method : {"symbol", "linear"}
        "symbol" expands the reciprocal Laurent symbol by partial fractions;
        "linear" solves the banded convolution system on a window four times
        the support radius.  Both agree to roundoff and the second exists as
        an independent check on the first.
    """
    alpha.require_refinement()
    symbol = downsample_mask(alpha)
    coeffs = symbol.array
    f = symbol.first_index
    w = len(coeffs)

    if w == 1:
        # symbol is a monomial: gamma is a scaled Kronecker delta
        gamma = Mask((1.0 / coeffs[0],), -f)
        return DecimationSolution(gamma, abs(1.0 / coeffs[0]), 0.0, 0.0, symbol, ())

    # polynomial part p(z) with p(0) != 0: symbol(z) = z**f * p(z)
    p_highfirst = coeffs[::-1]
    roots = np.roots(p_highfirst)
    moduli = np.abs(roots)
    if np.any(np.abs(moduli - 1.0) < UNIT_CIRCLE_TOL):
        raise SymbolRootError(
            "symbol root on the unit circle: the convolutional inverse does "
            "not decay and no summable decimation mask exists"
        )

    decay_lambda = float(np.max(np.minimum(moduli, 1.0 / moduli)))
    simple = _roots_are_simple(roots, p_highfirst)

    if simple:
        residues = 1.0 / np.polyval(np.polyder(p_highfirst), roots)
        apriori_c = float(np.sum(np.abs(residues) * np.maximum(1.0, 1.0 / moduli)))
    else:
        apriori_c = 1.0 / np.min(np.abs(np.polyval(p_highfirst, [0.0, 1.0, -1.0])))

    if support_radius is None:
        if decay_lambda == 0.0:
            support_radius = w + 1
        else:
            support_radius = (
                math.ceil(math.log(COEFF_FLOOR / max(apriori_c, 1.0)) / math.log(decay_lambda))
                + w
                + 2
            )
    support_radius = int(support_radius)
    if support_radius < 1:
        raise MaskError("support_radius must be a positive integer")

    if method == "symbol" and simple:
        values = _expand_partial_fractions(roots, residues, f, support_radius)
    elif method in ("symbol", "linear"):
        values = _solve_window_system(coeffs, f, support_radius)
    else:
        raise MaskError(f"unknown method {method!r}")

    gamma = Mask(tuple(values), -support_radius)
    residual = _residual(gamma, symbol, support_radius)
    if residual > RESIDUAL_TOL:
        raise NumericalError(
            f"decimation residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}; "
            "increase support_radius"
        )

    k = np.abs(np.arange(-support_radius, support_radius + 1))
    nonzero = np.abs(values) > 0
    if decay_lambda > 0 and np.any(nonzero):
        decay_c = float(np.max(np.abs(values[nonzero]) / decay_lambda ** k[nonzero]))
    else:
        decay_c = float(np.max(np.abs(values)))
    return DecimationSolution(
        gamma, decay_c, decay_lambda, residual, symbol, tuple(roots.tolist())
    )


def _roots_are_simple(roots: np.ndarray, p_highfirst: np.ndarray) -> bool:
    if len(roots) < 2:
        return True
    dist = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(dist, np.inf)
    if dist.min() < 1e-7:
        return False
    return bool(np.min(np.abs(np.polyval(np.polyder(p_highfirst), roots))) > 1e-12)


def _expand_partial_fractions(roots, residues, f, radius):
    """Coefficients of ``z**-f / p(z)`` for indices ``-radius .. radius``.

    Each simple root contributes a one-sided geometric series:
    ``1/(z - r) = -sum z**n / r**(n+1)`` outside the circle (causal) and
    ``1/(z - r) = sum r**n z**-(n+1)`` inside (anticausal).
    """
    idx = np.arange(-radius, radius + 1)
    shifted = idx + f  # coefficient of z**shifted in 1/p
    values = np.zeros(len(idx), dtype=complex)
    for r, a in zip(roots, residues):
        if abs(r) > 1.0:
            n = shifted
            mask = n >= 0
            values[mask] += -a * r ** (-(n[mask] + 1.0))
        else:
            n = -shifted - 1
            mask = n >= 0
            values[mask] += a * r ** n[mask].astype(float)
    imag = float(np.max(np.abs(values.imag)))
    if imag > 1e-12 * max(1.0, float(np.max(np.abs(values.real)))):
        raise NumericalError(f"partial fraction expansion left imaginary residue {imag:.3e}")
    return values.real


def _solve_window_system(coeffs, f, radius):
    """Solve the banded system ``sum_j b[k-j] g[j] = delta[k]`` on a window
    four times the radius, then restrict to the requested window."""
    w = len(coeffs)
    window = max(4 * radius, radius + 4 * w)
    n = 2 * window + 1
    l = max(0, f + w - 1)
    u = max(0, -f)
    ab = np.zeros((l + u + 1, n))
    for j in range(w):
        d = f + j  # diagonal index: row - col
        cols = np.arange(max(0, -d), n - max(0, d))
        ab[u + d, cols] = coeffs[j]
    rhs = np.zeros(n)
    rhs[window] = 1.0
    sol = solve_banded((l, u), ab, rhs)
    return sol[window - radius : window + radius + 1]


def _residual(gamma: Mask, symbol: Mask, radius: int) -> float:
    conv = convolve(gamma, symbol)
    err = 0.0
    for k in range(-radius, radius + 1):
        target = 1.0 if k == 0 else 0.0
        err = max(err, abs(conv[k] - target))
    return err


def truncate(gamma: Mask, eps: float) -> Mask:
    """Zero every coefficient with ``|gamma[k]| <= eps`` (strict keep)."""
    if eps < 0:
        raise MaskError("truncation threshold must be nonnegative")
    values = np.where(np.abs(gamma.array) > eps, gamma.array, 0.0)
    if not np.any(values):
        raise EmptyTruncationError(
            f"threshold {eps:g} removed every coefficient of the mask"
        )
    return Mask(tuple(values), gamma.first_index)


def normalize(mask: Mask, tol: float = 1e-8) -> Mask:
    """Rescale so the coefficients sum to exactly 1."""
    return mask.normalized(tol)


def tail_mass(gamma: Mask, omega: Iterable[int]) -> float:
    """Sum of ``|gamma[k]|`` over the computed support outside ``omega``."""
    keep = set(int(k) for k in omega)
    return float(sum(abs(c) for k, c in gamma.items() if k not in keep))
