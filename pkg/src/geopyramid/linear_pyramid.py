"""Multiscale pyramid transform for periodic real-valued sequences.

Analysis peels a sequence level by level: decimate to the next-coarser
sequence, predict back up by subdivision, and store the residual as that
level's detail layer.  Synthesis replays the prediction and adds the details
back, which makes the transform a bijection up to roundoff.

All sequences are periodic; convolutions wrap, and masks wider than one
period simply wrap multiple times (the periodization of the bi-infinite
formula).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import MaskError, ValidationError
from .masks import Mask, MaskConstants, mask_constants

__all__ = [
    "PeriodicSequence",
    "LinearPyramid",
    "subdivide",
    "decimate",
    "analyze",
    "synthesize",
    "decimation_cascade",
    "BoundConstants",
    "bound_constants",
]


@dataclass(frozen=True)
class PeriodicSequence:
    """One period of a periodic sequence of scalars or small vectors.

    ``values`` has shape ``(n,)`` or ``(n, d)``.  ``level`` is a dyadic
    resolution label: subdivision raises it, decimation lowers it.
    """

    values: np.ndarray
    level: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim not in (1, 2) or v.shape[0] == 0:
            raise ValidationError(f"sequence values must be (n,) or (n, d), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("sequence contains non-finite values")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]

    def delta(self) -> float:
        """Max norm of consecutive differences, wraparound pair included."""
        d = np.roll(self.values, -1, axis=0) - self.values
        return float(np.max(_entry_norms(d)))

    def sup_norm(self) -> float:
        return float(np.max(_entry_norms(self.values)))

    def sup_distance(self, other: "PeriodicSequence") -> float:
        if len(self) != len(other):
            raise ValidationError("sequences have different lengths")
        return float(np.max(_entry_norms(self.values - other.values)))


def _entry_norms(v: np.ndarray) -> np.ndarray:
    if v.ndim == 1:
        return np.abs(v)
    return np.linalg.norm(v, axis=-1)


def _periodic_convolve(mask: Mask, values: np.ndarray) -> np.ndarray:
    # out[k] = sum_m mask[m] * values[(k - m) mod n]; np.roll realizes the
    # index shift, and masks wider than the period wrap correctly through it
    out = np.zeros_like(values)
    for m, c in mask.items():
        out += c * np.roll(values, m, axis=0)
    return out


def subdivide(alpha: Mask, c: PeriodicSequence) -> PeriodicSequence:
    """Refine by the subdivision rule ``out[k] = sum_i alpha[k - 2i] c[i]``."""
    alpha.require_refinement()
    n = len(c)
    up = np.zeros((2 * n,) + c.values.shape[1:])
    up[::2] = c.values
    return PeriodicSequence(_periodic_convolve(alpha, up), c.level + 1)


def decimate(gamma: Mask, c: PeriodicSequence) -> PeriodicSequence:
    """Downsample by the decimation rule ``out[k] = sum_i gamma[k - i] c[2i]``."""
    if len(c) % 2 != 0:
        raise ValidationError(f"decimation needs an even length, got {len(c)}")
    even = c.values[::2]
    return PeriodicSequence(_periodic_convolve(gamma, even), c.level - 1)


@dataclass(frozen=True)
class LinearPyramid:
    """Coarse sequence plus detail layers ordered coarse to fine.

    Layer ``l`` (1-based) holds the residual at level ``l`` and has
    ``len(coarse) * 2**l`` entries.
    """

    coarse: PeriodicSequence
    details: tuple[np.ndarray, ...]

    def __post_init__(self):
        details = tuple(np.asarray(d, dtype=float) for d in self.details)
        expected = len(self.coarse)
        for i, d in enumerate(details):
            expected *= 2
            if d.shape[0] != expected:
                raise ValidationError(
                    f"detail layer {i + 1} has {d.shape[0]} entries, expected {expected}"
                )
        object.__setattr__(self, "details", details)

    @property
    def levels(self) -> int:
        return len(self.details)

    def detail_norms(self) -> list[np.ndarray]:
        return [_entry_norms(d) for d in self.details]

    def per_level_max(self) -> list[float]:
        return [float(np.max(n)) for n in self.detail_norms()]

    def to_dict(self) -> dict:
        return {
            "coarse": self.coarse.values.tolist(),
            "details": [d.tolist() for d in self.details],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LinearPyramid":
        try:
            coarse = PeriodicSequence(np.asarray(data["coarse"], dtype=float))
            details = tuple(np.asarray(d, dtype=float) for d in data["details"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad pyramid data: {exc}") from exc
        return cls(coarse, details)


def decimation_cascade(
    zeta: Mask, c: PeriodicSequence, levels: int
) -> list[PeriodicSequence]:
    """Successive decimations ``[c, D c, D^2 c, ...]``, finest first."""
    if levels < 1:
        raise ValidationError("levels must be >= 1")
    if len(c) % 2**levels != 0:
        raise ValidationError(
            f"length {len(c)} is not divisible by 2**{levels}"
        )
    out = [c]
    for _ in range(levels):
        out.append(decimate(zeta, out[-1]))
    return out


def analyze(alpha: Mask, zeta: Mask, c: PeriodicSequence, levels: int) -> LinearPyramid:
    """Decompose ``c`` into a coarse sequence and ``levels`` detail layers.

    The decimation mask selects the transform variant: a Kronecker delta
    gives the interpolating transform, a truncated convolutional inverse the
    truncated one, and its normalization the normalized one.
    """
    cascade = decimation_cascade(zeta, c, levels)
    details = []
    for fine, coarse in zip(cascade[:-1], cascade[1:]):
        details.append(fine.values - subdivide(alpha, coarse).values)
    coarse = replace(cascade[-1], level=0)
    return LinearPyramid(coarse, tuple(reversed(details)))


def synthesize(alpha: Mask, pyramid: LinearPyramid) -> PeriodicSequence:
    """Invert :func:`analyze`: refine and add details, coarse to fine."""
    c = pyramid.coarse
    for d in pyramid.details:
        pred = subdivide(alpha, c)
        if d.shape != pred.values.shape:
            raise ValidationError(
                f"detail layer shape {d.shape} does not match prediction {pred.values.shape}"
            )
        c = PeriodicSequence(pred.values + d, pred.level)
    return c


@dataclass(frozen=True)
class BoundConstants:
    """Constants of the detail-decay bounds.

    The detail bound reads ``max detail norm <= k_combined * delta(c) +
    floor_term * sup_norm(c)``; for an exactly summing decimation mask the
    floor term vanishes.  ``delta_growth`` bounds how much one decimation can
    grow the consecutive-difference bound: ``delta(D c) <= delta_growth *
    delta(c)``.
    """

    alpha: MaskConstants
    dec: MaskConstants
    eta: float
    k_combined: float = field(init=False)
    floor_term: float = field(init=False)
    delta_growth: float = field(init=False)

    def __post_init__(self):
        # the decimation-side moment enters the bound doubled because the
        # decimation stencil steps by one while subdivision steps by two
        object.__setattr__(
            self,
            "k_combined",
            2.0 * self.dec.moment * self.alpha.l1_norm + self.dec.l1_norm * self.alpha.moment,
        )
        object.__setattr__(self, "floor_term", self.eta * self.alpha.l1_norm)
        object.__setattr__(self, "delta_growth", 2.0 * self.dec.l1_norm)


def bound_constants(alpha: Mask, dec_mask: Mask, eta: float = 0.0) -> BoundConstants:
    """Assemble decay-bound constants for a refinement/decimation mask pair.

    ``eta`` is the absolute mass a truncation dropped from the exact
    convolutional inverse; pass 0 for exact or normalized masks.
    """
    if eta < 0:
        raise MaskError("eta must be nonnegative")
    return BoundConstants(mask_constants(alpha), mask_constants(dec_mask), eta)
