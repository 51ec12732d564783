"""Homogeneous-coordinate arithmetic on real projective space P^{n+1}.

Points are stored by a canonical representative: unit Euclidean norm and
first non-negligible coordinate positive.  Hyperplanes are stored as the
point orthogonal to them, so duality maps one type to itself.

Chart and coordinate indices in the public API are 1-based, matching the
usual ``xi_i`` notation for affine charts; arrays are indexed from 0.
"""
from dataclasses import dataclass

import numpy as np

from ._kernels import nearest_sq
from .errors import OutsideChart, RetractionUndefined, ZeroVector

EPS_ZERO = 1e-12
EPS_INCIDENCE = 1e-9


def _canonical_rows(x, eps_zero):
    """Row-wise canonicalization; returns (rows, norms)."""
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(x, axis=-1)
    # already-unit rows are left bit-identical so canonicalization is idempotent
    scale = np.where((norms > 0) & (np.abs(norms - 1.0) > 8 * np.finfo(float).eps), norms, 1.0)
    y = x / scale[..., None]
    # sign of the first coordinate exceeding the zero threshold
    big = np.abs(y) > eps_zero
    first = np.argmax(big, axis=-1)
    lead = np.take_along_axis(y, first[..., None], axis=-1)[..., 0]
    sign = np.where(lead < 0, -1.0, 1.0)
    return y * sign[..., None], norms


def canonicalize_rows(x, eps_zero=EPS_ZERO):
    """Vectorised :func:`canonicalize` over the last axis of ``x``."""
    y, norms = _canonical_rows(x, eps_zero)
    if np.any(norms <= eps_zero):
        bad = int(np.argmax(norms <= eps_zero))
        raise ZeroVector(f"row {bad} has norm {norms.flat[bad]:.3g}")
    return y


@dataclass(frozen=True, eq=False)
class ProjPoint:
    """A point of P^{n+1} held by its canonical homogeneous coordinates."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def ambient_dim(self):
        return len(self.coords) - 1

    def __eq__(self, other):
        if not isinstance(other, ProjPoint):
            return NotImplemented
        return self.coords.shape == other.coords.shape and bool(np.all(self.coords == other.coords))

    def __hash__(self):
        return hash(self.coords.tobytes())

    def __repr__(self):
        return f"ProjPoint({np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True)
class Hyperplane:
    """The hyperplane P(sigma^perp) represented by its orthogonal point sigma."""

    normal_point: ProjPoint


def canonicalize(raw, eps_zero=EPS_ZERO):
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1:
        raise ValueError("canonicalize expects a single vector")
    norm = np.linalg.norm(raw)
    if not norm > eps_zero:
        raise ZeroVector(f"cannot projectivize a vector of norm {norm:.3g}")
    return ProjPoint(canonicalize_rows(raw, eps_zero))


def as_coords(p):
    return p.coords if isinstance(p, ProjPoint) else np.asarray(p, dtype=float)


def embed_affine(x):
    """The injection x -> [x, 1]."""
    x = np.asarray(x, dtype=float)
    return canonicalize(np.append(x, 1.0))


def chart(p, c, eps_zero=EPS_ZERO):
    """Affine chart xi_c: divide by coordinate ``c`` (1-based) and drop it."""
    u = as_coords(p)
    if not 1 <= c <= len(u):
        raise ValueError(f"chart index {c} outside 1..{len(u)}")
    uc = u[c - 1]
    if abs(uc) <= eps_zero:
        raise OutsideChart(f"coordinate {c} is {uc:.3g}; point lies at infinity of chart {c}")
    return np.delete(u, c - 1) / uc


def inverse_chart(y, c):
    """Homogeneous point whose chart-``c`` image is ``y`` (canonicalized)."""
    y = np.asarray(y, dtype=float)
    return canonicalize(np.insert(y, c - 1, 1.0))


def best_chart(p):
    """1-based index of the largest-magnitude coordinate (first on ties)."""
    return int(np.argmax(np.abs(as_coords(p)))) + 1


def orth_complement_contains(h, p, eps_incidence=EPS_INCIDENCE):
    """Incidence test of ``p`` with hyperplane ``h``; returns (flag, residual)."""
    normal = h.normal_point if isinstance(h, Hyperplane) else h
    residual = float(np.dot(as_coords(normal), as_coords(p)))
    return abs(residual) <= eps_incidence, residual


def hyperplane_from_affine(v, c, eps_zero=EPS_ZERO):
    """Point of P^{n+1} orthogonal to the closure of the affine plane <v, x> = c.

    The plane lifts to the linear subspace {(y, t) : <v, y> - c t = 0}, whose
    orthogonal complement is spanned by (v, -c).
    """
    v = np.asarray(v, dtype=float)
    if not np.linalg.norm(v) > eps_zero:
        raise ZeroVector("affine hyperplane normal must be nonzero")
    return canonicalize(np.append(v, -float(c)))


def retract(sigma, p, eps_zero=EPS_ZERO):
    """Orthogonal retraction of P^{n+1} minus {sigma} onto P(sigma^perp)."""
    s = as_coords(sigma)
    s = s / np.linalg.norm(s)
    x = as_coords(p)
    y = x - np.dot(x, s) * s
    y = y - np.dot(y, s) * s  # second pass removes the cancellation error
    if np.linalg.norm(y) <= eps_zero * max(1.0, np.linalg.norm(x)):
        raise RetractionUndefined("the retraction centre has no image")
    return canonicalize(y)


def projective_distance(a, b):
    """min(|a - b|, |a + b|) on unit representatives."""
    a = as_coords(a)
    b = as_coords(b)
    return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def directed_hausdorff(a, b, projective=True):
    """max over rows of ``a`` of the distance to the nearest row of ``b``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if len(a) == 0:
        return 0.0
    if len(b) == 0:
        return float("inf")
    return float(np.sqrt(nearest_sq(a, b, projective).max()))


def hausdorff(a, b, projective=True):
    """Symmetric Hausdorff distance between two finite point sets."""
    return max(directed_hausdorff(a, b, projective), directed_hausdorff(b, a, projective))
