"""The pyramid transform for manifold-valued periodic sequences.

The linear rules translate verbatim once "weighted sum" is replaced by
"weighted Riemannian center of mass": refinement applies the even/odd
sub-masks of alpha as mean weights, decimation applies the normalized
decimation mask to the even-indexed entries, and the detail at each index is
the logarithm of the sample at the prediction — a tangent vector whose norm
is the geodesic prediction error.

Details are stored together with their base points (the prediction), so a
pyramid is self-contained.  If a pyramid is edited (thresholding) the stored
bases go stale; synthesis detects that and parallel-transports the detail
vectors onto the freshly computed predictions before applying exp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InjectivityRadiusError,
    MaskError,
    NumericalError,
    ValidationError,
)
from .masks import Mask
from .manifolds import Manifold, MeanOptions, weighted_mean

__all__ = [
    "ManifoldSequence",
    "DetailLayer",
    "ManifoldPyramid",
    "t_subdivide",
    "y_decimate",
    "m_analyze",
    "m_synthesize",
    "manifold_cascade",
    "SafetyConstants",
    "safety_constants",
]


@dataclass(frozen=True)
class ManifoldSequence:
    """One period of a manifold-valued sequence.

    ``points`` has shape ``(n, *point_shape)``.  ``level`` is a dyadic
    resolution label maintained by the transforms; generators usually leave
    it at 0 and analysis treats its input as the finest level.
    """

    manifold: Manifold
    points: np.ndarray
    level: int = 0
    validate: bool = True

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != self.manifold.point_ndim + 1 or pts.shape[0] == 0:
            raise ValidationError(
                f"points must be (n, *point_shape), got {pts.shape} on {self.manifold!r}"
            )
        if self.validate:
            self.manifold.check_point(pts)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def delta(self) -> float:
        """Largest geodesic distance between consecutive points (with wrap)."""
        return float(
            np.max(self.manifold.distance(self.points, np.roll(self.points, -1, axis=0)))
        )

    def sup_distance(self, other: "ManifoldSequence") -> float:
        """mu(c, other): largest pointwise geodesic distance."""
        if len(self) != len(other):
            raise ValidationError("sequences have different lengths")
        return float(np.max(self.manifold.distance(self.points, other.points)))

    def even_subsample(self) -> "ManifoldSequence":
        if len(self) % 2 != 0:
            raise ValidationError(f"even subsampling needs even length, got {len(self)}")
        return ManifoldSequence(self.manifold, self.points[::2], self.level - 1, validate=False)


@dataclass(frozen=True)
class DetailLayer:
    """Detail vectors of one level, stored with their base points."""

    bases: np.ndarray
    vectors: np.ndarray
    level: int

    def __post_init__(self):
        b = np.asarray(self.bases, dtype=float)
        v = np.asarray(self.vectors, dtype=float)
        if b.shape != v.shape:
            raise ValidationError(
                f"bases shape {b.shape} does not match vectors shape {v.shape}"
            )
        object.__setattr__(self, "bases", b)
        object.__setattr__(self, "vectors", v)

    def __len__(self) -> int:
        return self.bases.shape[0]

    def norms(self, manifold: Manifold) -> np.ndarray:
        return np.asarray(manifold.norm(self.bases, self.vectors))

    def with_vectors(self, vectors: np.ndarray) -> "DetailLayer":
        return DetailLayer(self.bases, vectors, self.level)


@dataclass(frozen=True)
class ManifoldPyramid:
    """Coarse manifold sequence plus detail layers ordered coarse to fine."""

    manifold: Manifold
    coarse: ManifoldSequence
    details: tuple[DetailLayer, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "details", tuple(self.details))
        expected = len(self.coarse)
        for layer in self.details:
            expected *= 2
            if len(layer) != expected:
                raise ValidationError(
                    f"detail layer {layer.level} has {len(layer)} entries, expected {expected}"
                )

    @property
    def levels(self) -> int:
        return len(self.details)

    def detail_norms(self) -> list[np.ndarray]:
        return [layer.norms(self.manifold) for layer in self.details]

    def per_level_max(self) -> list[float]:
        return [float(np.max(n)) for n in self.detail_norms()]


def _window_mean(
    manifold: Manifold,
    points: np.ndarray,
    offsets: np.ndarray,
    weights: np.ndarray,
    opts: MeanOptions | None,
) -> np.ndarray:
    """Weighted means of the windows ``points[(k - offsets) mod n]`` for all k."""
    n = points.shape[0]
    idx = (np.arange(n)[:, None] - offsets[None, :]) % n
    return weighted_mean(manifold, points[idx], weights, opts)


def t_subdivide(
    alpha: Mask, c: ManifoldSequence, opts: MeanOptions | None = None
) -> ManifoldSequence:
    """Riemannian subdivision: each output is the weighted mean of its
    stencil, with the even/odd sub-mask of ``alpha`` as weights."""
    alpha.require_refinement()
    n = len(c)
    out = np.empty((2 * n,) + c.points.shape[1:])
    for parity in (0, 1):
        sub = alpha.parity_part(parity)
        try:
            out[parity::2] = _window_mean(
                c.manifold, c.points, sub.indices, sub.array, opts
            )
        except NumericalError as exc:
            raise type(exc)(f"subdivision parity {parity}: {exc}") from exc
    return ManifoldSequence(c.manifold, out, c.level + 1, validate=False)


def y_decimate(
    zeta: Mask, c: ManifoldSequence, opts: MeanOptions | None = None
) -> ManifoldSequence:
    """Riemannian decimation: output k is the weighted mean of the
    even-indexed points with weights ``zeta[k - i]``."""
    if not zeta.is_decimation_mask():
        raise MaskError(
            f"decimation mask must sum to 1 (got {zeta.sum():.12f}); "
            "normalize a truncated mask before manifold use"
        )
    if len(c) % 2 != 0:
        raise ValidationError(f"decimation needs an even length, got {len(c)}")
    even = c.points[::2]
    pts = _window_mean(c.manifold, even, zeta.indices, zeta.array, opts)
    return ManifoldSequence(c.manifold, pts, c.level - 1, validate=False)


def manifold_cascade(
    zeta: Mask, c: ManifoldSequence, levels: int, opts: MeanOptions | None = None
) -> list[ManifoldSequence]:
    """Successive decimations ``[c, Y c, Y^2 c, ...]``, finest first."""
    if levels < 1:
        raise ValidationError("levels must be >= 1")
    if len(c) % 2**levels != 0:
        raise ValidationError(f"length {len(c)} is not divisible by 2**{levels}")
    out = [c]
    for i in range(levels):
        try:
            out.append(y_decimate(zeta, out[-1], opts))
        except NumericalError as exc:
            raise type(exc)(f"decimation to level {levels - i - 1}: {exc}") from exc
    return out


def m_analyze(
    alpha: Mask,
    zeta: Mask,
    c: ManifoldSequence,
    levels: int,
    opts: MeanOptions | None = None,
) -> ManifoldPyramid:
    """Decompose a manifold sequence into ``levels`` detail layers.

    The input is treated as the finest level ``levels`` and the coarse
    output is level 0.  Each detail vector is ``log(prediction, sample)``
    stored at its prediction base point.
    """
    cascade = manifold_cascade(zeta, c, levels, opts)
    manifold = c.manifold
    layers = []
    for i in range(levels):
        fine = cascade[i]
        coarse = cascade[i + 1]
        level = levels - i
        try:
            pred = t_subdivide(alpha, coarse, opts)
            vectors = manifold.log(pred.points, fine.points)
        except NumericalError as exc:
            raise type(exc)(f"level {level}: {exc}") from exc
        layers.append(DetailLayer(pred.points, vectors, level))
    coarse = ManifoldSequence(manifold, cascade[-1].points, 0, validate=False)
    return ManifoldPyramid(manifold, coarse, tuple(reversed(layers)))


#: stored bases farther than this from the recomputed prediction trigger
#: re-basing by parallel transport
STALE_BASE_TOL = 1e-12


def m_synthesize(
    alpha: Mask, pyramid: ManifoldPyramid, opts: MeanOptions | None = None
) -> ManifoldSequence:
    """Invert :func:`m_analyze`: subdivide, re-base details if stale, apply exp."""
    manifold = pyramid.manifold
    c = pyramid.coarse
    for layer in pyramid.details:
        try:
            pred = t_subdivide(alpha, c, opts)
            vectors = layer.vectors
            stale = float(np.max(manifold.distance(layer.bases, pred.points)))
            if stale > STALE_BASE_TOL:
                vectors = manifold.transport(vectors, layer.bases, pred.points)
            points = manifold.exp(pred.points, vectors)
        except InjectivityRadiusError as exc:
            raise InjectivityRadiusError(
                f"level {layer.level}: detail exceeds injectivity radius ({exc})"
            ) from exc
        except NumericalError as exc:
            raise type(exc)(f"level {layer.level}: {exc}") from exc
        c = ManifoldSequence(manifold, points, layer.level, validate=False)
    return c


@dataclass(frozen=True)
class SafetyConstants:
    """Observed safety ratios of the operator pair on a given sequence.

    ``e_t`` measures how far subdivision moves the even grid points,
    ``f_y`` how far decimation strays from plain even subsampling, ``q_obs``
    how the consecutive-distance bound contracts under subdivision, and
    ``s_t_est`` the subdivision's Lipschitz constant estimated from random
    perturbations.  ``degenerate`` flags a constant input, where the ratios
    are all 0/0 and reported as zero.
    """

    e_t: float
    f_y: float
    q_obs: float
    s_t_est: float
    degenerate: bool = False

    @property
    def k_theorem(self) -> float:
        """Detail-decay constant: ``1 + 2 E_T + Q + S_T F_Y``."""
        return 1.0 + 2.0 * self.e_t + self.q_obs + self.s_t_est * self.f_y

    @property
    def p_bound(self) -> float:
        """Per-level growth constant of the coarsening contraction."""
        return 1.0 + self.f_y

    def asdict(self) -> dict:
        return {
            "e_t": self.e_t,
            "f_y": self.f_y,
            "q_obs": self.q_obs,
            "s_t_est": self.s_t_est,
            "k_theorem": self.k_theorem,
            "p_bound": self.p_bound,
            "degenerate": self.degenerate,
        }


def safety_constants(
    alpha: Mask,
    zeta: Mask,
    c: ManifoldSequence,
    opts: MeanOptions | None = None,
    perturbation_scales: tuple[float, ...] = (0.1, 0.3),
    trials_per_scale: int = 2,
    seed: int = 0,
) -> SafetyConstants:
    """Measure the safety ratios of (T_alpha, Y_zeta) on the sequence ``c``.

    The Lipschitz estimate perturbs every point by a random tangent vector
    of magnitude ``scale * delta(c)`` and takes the worst observed ratio
    ``mu(T c, T c~) / mu(c, c~)``; it is an empirical lower estimate of the
    true stability constant.
    """
    if len(c) % 2 != 0:
        raise ValidationError("safety constants need an even-length sequence")
    delta = c.delta()
    if delta < 1e-14:
        return SafetyConstants(0.0, 0.0, 0.0, 0.0, degenerate=True)

    manifold = c.manifold
    refined = t_subdivide(alpha, c, opts)
    even_of_refined = ManifoldSequence(
        manifold, refined.points[::2], c.level, validate=False
    )
    e_t = c.sup_distance(even_of_refined) / delta

    decimated = y_decimate(zeta, c, opts)
    f_y = decimated.sup_distance(c.even_subsample()) / delta

    q_obs = refined.delta() / delta

    rng = np.random.default_rng(seed)
    s_t_est = 0.0
    for scale in perturbation_scales:
        for _ in range(trials_per_scale):
            tangent = manifold.random_tangent(rng, c.points, scale * delta)
            perturbed = ManifoldSequence(
                manifold, manifold.exp(c.points, tangent), c.level, validate=False
            )
            moved = c.sup_distance(perturbed)
            if moved < 1e-15:
                continue
            ratio = t_subdivide(alpha, perturbed, opts).sup_distance(refined) / moved
            s_t_est = max(s_t_est, ratio)
    return SafetyConstants(e_t, f_y, q_obs, s_t_est)
