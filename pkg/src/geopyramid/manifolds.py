"""Riemannian geometry primitives: Euclidean space, the unit sphere, and
symmetric positive-definite matrices with the affine-invariant metric.

Every operation accepts stacked inputs: a point argument of shape
``(..., *point_shape)`` is treated as an array of points and the operation
broadcasts over the leading axes.  This is what makes the pyramid transforms
fast — each level runs all of its weighted means simultaneously.

The weighted Riemannian center of mass accepts signed weights (the masks
derived from cubic refinement have negative entries); it runs the fixed-step
gradient iteration ``x <- exp(x, step * sum_i w_i log(x, p_i))`` from the
point with the largest absolute weight.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (
    CutLocusError,
    InjectivityRadiusError,
    MeanConvergenceError,
    SpreadError,
    ValidationError,
)

__all__ = [
    "Manifold",
    "Euclidean",
    "Sphere",
    "SPD",
    "MeanOptions",
    "weighted_mean",
    "geodesic",
    "get_manifold",
]

#: inner products this close to -1 count as antipodal on the sphere
ANTIPODAL_TOL = 1e-12


class Manifold(ABC):
    """Common interface of the three geometries.

    Attributes
    ----------
    name : str
        Serialization tag ("euclidean", "s2", "spd3").
    point_ndim : int
        Number of trailing axes that make up one point (1 for vectors,
        2 for matrices); everything before them is batch.
    injectivity_radius : float
        Largest tangent norm for which ``exp`` stays invertible.
    default_spread_guard : float
        Default cap on pairwise distances inside one weighted-mean window.
    """

    name: str = ""
    point_ndim: int = 1
    injectivity_radius: float = np.inf
    default_spread_guard: float = np.inf

    # -- metric ------------------------------------------------------------

    @abstractmethod
    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Geodesic distance, batched over leading axes."""

    @abstractmethod
    def exp(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Follow the geodesic from ``p`` with initial velocity ``v`` for unit time."""

    @abstractmethod
    def log(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Initial velocity of the geodesic from ``p`` reaching ``q`` at unit time."""

    @abstractmethod
    def transport(self, v: np.ndarray, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Parallel transport of ``v`` from ``T_p M`` to ``T_q M`` along the geodesic."""

    @abstractmethod
    def inner(self, p: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Riemannian inner product at ``p``."""

    def norm(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(self.inner(p, v, v), 0.0))

    # -- validation and sampling --------------------------------------------

    @abstractmethod
    def check_point(self, x: np.ndarray):
        """Raise :class:`ValidationError` unless every entry is a valid point."""

    @abstractmethod
    def project_tangent(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Project an ambient vector onto the tangent space at ``p``."""

    @abstractmethod
    def random_point(self, rng: np.random.Generator, size: tuple = ()) -> np.ndarray:
        """Draw random points, for tests and perturbation estimates."""

    @abstractmethod
    def random_tangent(
        self, rng: np.random.Generator, p: np.ndarray, sigma: float
    ) -> np.ndarray:
        """Draw Gaussian tangent vectors at ``p``, isotropic with standard
        deviation ``sigma`` per component under the Riemannian inner product
        at ``p``."""

    def zero_tangent(self, p: np.ndarray) -> np.ndarray:
        return np.zeros_like(p)

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class Euclidean(Manifold):
    """Flat ℝ^d: all maps are affine and every formula is closed-form."""

    point_ndim = 1

    def __init__(self, dim: int = 1):
        if dim < 1:
            raise ValidationError("dimension must be >= 1")
        self.dim = int(dim)
        self.name = "euclidean"

    def distance(self, x, y):
        return np.linalg.norm(np.asarray(x) - np.asarray(y), axis=-1)

    def exp(self, p, v):
        return np.asarray(p) + np.asarray(v)

    def log(self, p, q):
        return np.asarray(q) - np.asarray(p)

    def transport(self, v, p, q):
        return np.asarray(v) + 0.0 * (np.asarray(q) - np.asarray(p))

    def inner(self, p, u, v):
        return np.sum(np.asarray(u) * np.asarray(v), axis=-1)

    def check_point(self, x):
        x = np.asarray(x)
        if x.shape[-1] != self.dim:
            raise ValidationError(f"expected points in R^{self.dim}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValidationError("non-finite coordinates")

    def project_tangent(self, p, v):
        return np.asarray(v)

    def random_point(self, rng, size=()):
        return rng.standard_normal(tuple(size) + (self.dim,))

    def random_tangent(self, rng, p, sigma):
        return sigma * rng.standard_normal(np.shape(p))

    def __repr__(self):
        return f"Euclidean(dim={self.dim})"


class Sphere(Manifold):
    """Unit sphere S² in ℝ³ with the induced round metric.

    Geodesics are great circles, the injectivity radius is π, and the
    logarithm is undefined between antipodal points.
    """

    point_ndim = 1
    injectivity_radius = np.pi
    # permissive by default: coarse pyramid levels legitimately feed windows
    # whose points spread across most of a closed curve, and the dominant
    # center weight keeps the mean iteration anchored there
    default_spread_guard = 0.9 * np.pi

    def __init__(self):
        self.name = "s2"

    def _dot(self, x, y):
        return np.clip(np.sum(x * y, axis=-1), -1.0, 1.0)

    def distance(self, x, y):
        # atan2 of (sine, cosine) of the angle: same value as arccos of the
        # inner product but well-conditioned at both ends of [0, pi]
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        sine = np.linalg.norm(np.cross(x, y), axis=-1)
        return np.arctan2(sine, np.sum(x * y, axis=-1))

    def exp(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        n = np.linalg.norm(v, axis=-1)
        if np.any(n >= np.pi):
            raise InjectivityRadiusError(
                f"tangent norm {float(np.max(n)):.6f} >= pi: beyond injectivity radius"
            )
        scale = np.where(n > 1e-9, np.sin(n) / np.where(n > 1e-9, n, 1.0), 1.0)
        out = np.cos(n)[..., None] * p + scale[..., None] * v
        return out / np.linalg.norm(out, axis=-1, keepdims=True)

    def log(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        dot = self._dot(p, q)
        if np.any(dot <= -1.0 + ANTIPODAL_TOL):
            raise CutLocusError("log undefined at cut locus (antipodal points)")
        d = np.arccos(dot)
        u = q - dot[..., None] * p
        un = np.linalg.norm(u, axis=-1)
        scale = np.where(un > 1e-9, d / np.where(un > 1e-9, un, 1.0), 1.0)
        return scale[..., None] * u

    def transport(self, v, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        w = self.log(p, q)
        d = np.linalg.norm(w, axis=-1)
        safe = np.where(d > 1e-12, d, 1.0)
        e = w / safe[..., None]
        ve = np.sum(v * e, axis=-1)
        rotated = v + ve[..., None] * (
            (np.cos(d) - 1.0)[..., None] * e - np.sin(d)[..., None] * p
        )
        out = np.where(d[..., None] > 1e-12, rotated, v)
        # remove the normal component that roundoff leaks in
        return out - np.sum(out * q, axis=-1, keepdims=True) * q

    def inner(self, p, u, v):
        return np.sum(np.asarray(u) * np.asarray(v), axis=-1)

    def check_point(self, x, tol: float = 1e-10):
        x = np.asarray(x)
        if x.shape[-1] != 3:
            raise ValidationError(f"sphere points are 3-vectors, got shape {x.shape}")
        err = np.abs(np.linalg.norm(x, axis=-1) - 1.0)
        if np.any(err > tol):
            raise ValidationError(
                f"point norm deviates from 1 by {float(np.max(err)):.2e} (tol {tol:g})"
            )

    def project_tangent(self, p, v):
        p = np.asarray(p)
        v = np.asarray(v)
        return v - np.sum(v * p, axis=-1, keepdims=True) * p

    def random_point(self, rng, size=()):
        x = rng.standard_normal(tuple(size) + (3,))
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    def random_tangent(self, rng, p, sigma):
        # ambient isotropic Gaussian projected to the tangent plane is the
        # isotropic 2D Gaussian in that plane
        return self.project_tangent(p, sigma * rng.standard_normal(np.shape(p)))


def _sym(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + np.swapaxes(x, -1, -2))


class SPD(Manifold):
    """Symmetric positive-definite 3x3 matrices, affine-invariant metric.

    All matrix functions go through the symmetric eigendecomposition, which
    is exact to machine precision at this size.  The manifold has
    nonpositive curvature: geodesics are globally unique and the injectivity
    radius is infinite.
    """

    point_ndim = 2

    def __init__(self, dim: int = 3):
        if dim < 1:
            raise ValidationError("dimension must be >= 1")
        self.dim = int(dim)
        self.name = "spd3" if dim == 3 else f"spd{dim}"

    # -- symmetric matrix functions -----------------------------------------

    @staticmethod
    def _apply(fn, x):
        w, v = np.linalg.eigh(x)
        return _sym((v * fn(w)[..., None, :]) @ np.swapaxes(v, -1, -2))

    def _sqrt_pair(self, p):
        """(p^{1/2}, p^{-1/2}) from one eigendecomposition."""
        w, v = np.linalg.eigh(p)
        if np.any(w <= 0):
            raise ValidationError(
                f"matrix is not positive definite (min eigenvalue {float(np.min(w)):.3e})"
            )
        s = np.sqrt(w)
        vt = np.swapaxes(v, -1, -2)
        return _sym((v * s[..., None, :]) @ vt), _sym((v / s[..., None, :]) @ vt)

    # -- metric --------------------------------------------------------------

    def distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        _, isq = self._sqrt_pair(x)
        m = _sym(isq @ y @ isq)
        w = np.linalg.eigvalsh(m)
        if np.any(w <= 0):
            raise ValidationError("second argument is not positive definite")
        return np.linalg.norm(np.log(w), axis=-1)

    def exp(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        sq, isq = self._sqrt_pair(p)
        return _sym(sq @ self._apply(np.exp, _sym(isq @ v @ isq)) @ sq)

    def log(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        sq, isq = self._sqrt_pair(p)
        m = _sym(isq @ q @ isq)
        w, vec = np.linalg.eigh(m)
        if np.any(w <= 0):
            raise ValidationError("log target is not positive definite")
        lm = _sym((vec * np.log(w)[..., None, :]) @ np.swapaxes(vec, -1, -2))
        return _sym(sq @ lm @ sq)

    def transport(self, v, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        sq, isq = self._sqrt_pair(p)
        half = self._apply(np.sqrt, _sym(isq @ q @ isq))
        e = sq @ half @ isq  # (q p^{-1})^{1/2}, not symmetric
        return _sym(e @ v @ np.swapaxes(e, -1, -2))

    def inner(self, p, u, v):
        _, isq = self._sqrt_pair(np.asarray(p, dtype=float))
        a = isq @ np.asarray(u, dtype=float) @ isq
        b = isq @ np.asarray(v, dtype=float) @ isq
        return np.sum(a * b, axis=(-2, -1))

    def check_point(self, x, sym_tol: float = 1e-10, eig_floor: float = 1e-12):
        x = np.asarray(x)
        if x.shape[-2:] != (self.dim, self.dim):
            raise ValidationError(
                f"expected {self.dim}x{self.dim} matrices, got shape {x.shape}"
            )
        asym = np.max(np.abs(x - np.swapaxes(x, -1, -2)))
        if asym > sym_tol:
            raise ValidationError(f"matrix asymmetry {float(asym):.2e} exceeds {sym_tol:g}")
        w = np.linalg.eigvalsh(_sym(x))
        if np.any(w <= eig_floor):
            raise ValidationError(
                f"matrix not positive definite (min eigenvalue {float(np.min(w)):.3e})"
            )

    def project_tangent(self, p, v):
        return _sym(np.asarray(v))

    def random_point(self, rng, size=()):
        a = rng.standard_normal(tuple(size) + (self.dim, self.dim))
        return self._apply(np.exp, _sym(a) * 0.5)

    def random_tangent(self, rng, p, sigma):
        # a symmetrized iid Gaussian is isotropic in the Frobenius sense at
        # the identity; conjugating by sqrt(p) moves it to p isometrically
        sq, _ = self._sqrt_pair(np.asarray(p, dtype=float))
        s = _sym(rng.standard_normal(np.shape(p)))
        return sigma * (sq @ s @ sq)

    def __repr__(self):
        return f"SPD(dim={self.dim})"


_REGISTRY = {
    "euclidean": Euclidean,
    "s2": Sphere,
    "spd3": SPD,
}


def get_manifold(tag: str, dim: int | None = None) -> Manifold:
    """Instantiate a manifold from its serialization tag."""
    try:
        cls = _REGISTRY[tag]
    except KeyError:
        raise ValidationError(
            f"unknown manifold {tag!r}; expected one of {sorted(_REGISTRY)}"
        ) from None
    if cls is Euclidean:
        return Euclidean(dim if dim is not None else 1)
    return cls()


@dataclass(frozen=True)
class MeanOptions:
    """Settings of the weighted-mean gradient iteration.

    ``spread_guard`` of None means the manifold's default; ``numpy.inf``
    disables the guard entirely.
    """

    step: float = 1.0
    tol: float = 1e-10
    max_iter: int = 200
    spread_guard: float | None = None

    def asdict(self) -> dict:
        return asdict(self)


def weighted_mean(
    manifold: Manifold,
    points: np.ndarray,
    weights: np.ndarray,
    opts: MeanOptions | None = None,
    init: np.ndarray | None = None,
) -> np.ndarray:
    """Weighted Riemannian center of mass with possibly signed weights.

    Parameters
    ----------
    manifold : Manifold
    points : ndarray, shape (..., m, *point_shape)
        Windows of m points each; leading axes are independent problems
        solved simultaneously.
    weights : ndarray, shape (m,)
        Must sum to 1 within 1e-10.  Negative entries are allowed.
    opts : MeanOptions, optional
    init : ndarray, shape (..., *point_shape), optional
        Start point; defaults to the window point with the largest
        absolute weight.

    Returns
    -------
    ndarray of shape (..., *point_shape) satisfying first-order
    stationarity: the norm of ``sum_i w_i log(x, p_i)`` is at most ``tol``.

    Raises
    ------
    SpreadError
        If pairwise distances inside a window exceed the spread guard.
    MeanConvergenceError
        If the iteration does not reach ``tol`` within ``max_iter`` steps.
    """
    opts = opts or MeanOptions()
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1:
        raise ValidationError("weights must be one-dimensional")
    m_axis = -manifold.point_ndim - 1
    if points.shape[m_axis] != len(weights):
        raise ValidationError(
            f"window size {points.shape[m_axis]} does not match {len(weights)} weights"
        )
    if abs(float(weights.sum()) - 1.0) > 1e-10:
        raise ValidationError(f"weights sum to {float(weights.sum()):.12f}, expected 1")

    guard = opts.spread_guard
    if guard is None:
        guard = manifold.default_spread_guard
    if np.isfinite(guard):
        _check_spread(manifold, points, weights, guard)

    if isinstance(manifold, Euclidean):
        # flat case: the center of mass is the affine combination, reached
        # in a single exact step
        w = weights.reshape((-1,) + (1,) * manifold.point_ndim)
        return np.sum(w * points, axis=m_axis)

    w = weights.reshape((-1,) + (1,) * manifold.point_ndim)
    if init is None:
        x = np.take(points, int(np.argmax(np.abs(weights))), axis=m_axis)
    else:
        x = np.array(init, dtype=float)

    residual = np.inf
    for _ in range(opts.max_iter):
        logs = manifold.log(np.expand_dims(x, m_axis), points)
        grad = np.sum(w * logs, axis=m_axis)
        residual = float(np.max(manifold.norm(x, grad)))
        if residual <= opts.tol:
            return x
        x = manifold.exp(x, opts.step * grad)
    raise MeanConvergenceError(
        f"weighted mean: no convergence after {opts.max_iter} iterations "
        f"(residual {residual:.3e}, tol {opts.tol:g})"
    )


def _check_spread(manifold, points, weights, guard):
    active = np.flatnonzero(weights != 0.0)
    m_axis = -manifold.point_ndim - 1
    sub = np.take(points, active, axis=m_axis)
    a = np.expand_dims(sub, m_axis)
    b = np.expand_dims(sub, m_axis - 1)
    spread = float(np.max(manifold.distance(a, b)))
    if spread > guard:
        raise SpreadError(
            f"window spread {spread:.4f} exceeds safe radius {guard:.4f}"
        )


def geodesic(manifold: Manifold, p: np.ndarray, q: np.ndarray, t: float) -> np.ndarray:
    """Point at parameter ``t`` on the geodesic from ``p`` to ``q``."""
    return manifold.exp(p, t * manifold.log(p, q))
