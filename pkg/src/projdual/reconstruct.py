"""Dualizing dual clouds back to surfaces, projective equivariance and homothety detection."""
import math
from dataclasses import dataclass

import numpy as np

from ._kernels import knn, knn_grouped
from .duality import DualCloud, dual_cloud
from .errors import (EmptyOutline, IllConditionedNeighborhood, InsufficientDirections,
                     ProjDualError, SingularMatrix, TooFewPoints)
from .outlines import outline_dual
from .projective import EPS_ZERO, canonicalize_rows, hausdorff, projective_distance
from .surfaces import sample_grid

PCA_GAP = 10.0


def default_k(param_dim):
    return 12 if param_dim == 2 else 4


@dataclass(frozen=True, eq=False)
class ProjectiveMap:
    matrix: np.ndarray

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("projective map needs a square matrix")
        if not abs(np.linalg.det(a)) > EPS_ZERO:
            raise SingularMatrix("matrix is not invertible")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    def same_as(self, other, tol=1e-12):
        """True if the matrices agree up to a positive scale."""
        a = self.matrix / np.linalg.norm(self.matrix)
        b = other.matrix / np.linalg.norm(other.matrix)
        return bool(np.max(np.abs(a - b)) <= tol)


@dataclass
class ReconstructionReport:
    recovered_points: np.ndarray
    residuals: np.ndarray
    directions_used: int
    hausdorff_to_truth: float = None
    skipped: int = 0
    source_index: np.ndarray = None


def assemble_dual_from_outlines(outlines, min_directions=3):
    """Union of the outline duals of all directions, admissible points only."""
    outlines = list(outlines)
    if len(outlines) < min_directions:
        raise InsufficientDirections(f"got {len(outlines)} directions, need at least "
                                     f"{min_directions}")
    parts = []
    for o in outlines:
        if len(o) == 0:
            raise EmptyOutline("outline has no points")
        parts.append(outline_dual(o, drop_inadmissible=True))
    return DualCloud.concatenate(parts)


def _chart_coords(coords, c):
    """Affine coordinates in 0-based chart ``c``."""
    return np.delete(coords, c, axis=-1) / coords[..., c:c + 1]


def _fit_plane(pts):
    centre = pts.mean(axis=0)
    _, sv, vt = np.linalg.svd(pts - centre, full_matrices=False)
    var = np.zeros(pts.shape[1])
    var[:len(sv)] = sv ** 2
    return centre, vt[-1] if len(vt) == pts.shape[1] else None, var


def estimate_tangent_hyperplane(cloud, index, k, neighbors=None):
    """Least-squares tangent hyperplane of the cloud near one of its points.

    Returns (centroid, unit normal, chart) with the 1-based chart index;
    the centroid and normal are affine coordinates in that chart.
    """
    coords = cloud.coords
    n = coords.shape[1] - 2
    if not (len(coords) > k >= n + 2):
        raise TooFewPoints(f"need cloud size > k >= {n + 2}; got size {len(coords)}, k={k}")
    if neighbors is None:
        d = np.minimum(np.linalg.norm(coords - coords[index], axis=1),
                       np.linalg.norm(coords + coords[index], axis=1))
        neighbors = np.lexsort((np.arange(len(coords)), d))[:k]
    c = int(np.argmax(np.abs(coords[index])))
    pts = _chart_coords(coords[neighbors], c)
    centre, normal, var = _fit_plane(pts)
    # variances sorted descending; need a clear gap below the n-th
    # the floor catches neighbourhoods of lower dimension, where var[n] is round-off
    if normal is None or not (var[n - 1] > PCA_GAP * var[n] and var[n - 1] > 1e-20 * var[0]):
        raise IllConditionedNeighborhood(
            f"principal values {var[n - 1]:.3g} and {var[n]:.3g} are not separated by "
            f"{PCA_GAP:g}x")
    return centre, normal, c + 1


def _quadratic_terms(a):
    """Design matrix [1, a_i, a_i a_j (i <= j)] for local graph fits."""
    n = a.shape[1]
    cols = [np.ones(len(a))] + [a[:, i] for i in range(n)]
    cols += [a[:, i] * a[:, j] for i in range(n) for j in range(i, n)]
    return np.stack(cols, axis=1)


def refine_tangent_hyperplane(pts, query, normal):
    """Tangent hyperplane at ``query`` from a quadratic graph fit.

    The neighbourhood is written as a graph over the plane orthogonal to
    ``normal`` (the PCA estimate) and fitted by a quadratic polynomial; the
    returned plane touches the fitted graph above the query point.  Falls
    back to the input when the fit is underdetermined.
    """
    dim = len(normal)
    basis = np.linalg.svd(np.eye(dim) - np.outer(normal, normal))[0][:, :dim - 1].T
    rel = pts - query
    a = rel @ basis.T
    z = rel @ normal
    design = _quadratic_terms(a)
    if len(pts) < design.shape[1] or np.linalg.matrix_rank(design) < design.shape[1]:
        return query, normal
    coef = np.linalg.lstsq(design, z, rcond=None)[0]
    grad = coef[1:dim]
    nrm = normal - grad @ basis
    return query + coef[0] * normal, nrm / np.linalg.norm(nrm)


def direction_labels(cloud):
    """Integer label per point from the ``direction`` provenance, or None."""
    if cloud.provenance is None or "direction" not in cloud.provenance:
        return None
    _, labels = np.unique(np.asarray(cloud.provenance["direction"]), axis=0, return_inverse=True)
    return labels.ravel()


def neighbourhoods(cloud, k, per_direction=None):
    """k nearest neighbours in projective distance.

    Clouds assembled from outlines are unions of densely sampled curves, one
    per direction; there at most ``per_direction`` neighbours (default k/4)
    are taken from any single curve so the neighbourhood spans the surface.
    """
    labels = direction_labels(cloud)
    if labels is None or len(np.unique(labels)) < 2:
        return knn(cloud.coords, k, True)
    cap = max(1, k // 4) if per_direction is None else per_direction
    return knn_grouped(cloud.coords, labels, k, cap, True)


def _widen(coords, index, nb, n, k, max_factor=16, flat=1e-12):
    """Grow a neighbourhood that is exactly coplanar in the query's chart.

    Such neighbourhoods lie on one curve whose tangent planes share a point
    (e.g. one latitude ring of a surface of revolution); their PCA plane is
    the dual of that point, not the tangent plane of the cloud.
    """
    c = int(np.argmax(np.abs(coords[index])))
    size = k
    while True:
        _, _, var = _fit_plane(_chart_coords(coords[nb], c))
        if var[n] > flat * var[0] or size >= max_factor * k or size >= len(coords) - 1:
            return nb
        size = min(2 * size, len(coords) - 1)
        d = np.minimum(np.linalg.norm(coords - coords[index], axis=1),
                       np.linalg.norm(coords + coords[index], axis=1))
        nb = np.lexsort((np.arange(len(coords)), d))[:size]


def envelope(cloud, k=None, truth=None, per_direction=None, refine=True, outlier_factor=10.0):
    """Recover the surface as the dual of the dual cloud.

    For every point the tangent hyperplane of the cloud is estimated (PCA,
    then a quadratic graph fit at the point unless ``refine`` is off) and its
    orthogonal point is read in the last chart.  The residual is the RMS
    distance of the recovered point to the neighbours' own hyperplanes;
    points whose residual exceeds ``outlier_factor`` times the median are
    treated as failed estimates and skipped (pass None to keep all).
    """
    coords = cloud.coords
    n = coords.shape[1] - 2
    k = default_k(n) if k is None else k
    if not (len(coords) > k >= n + 2):
        raise TooFewPoints(f"need cloud size > k >= {n + 2}; got size {len(coords)}, k={k}")
    nbrs = neighbourhoods(cloud, k, per_direction)
    grouped = direction_labels(cloud) is not None
    out, res, src = [], [], []
    skipped = 0
    for i in range(len(coords)):
        nb = nbrs[i][nbrs[i] >= 0]
        if len(nb) < n + 2:
            skipped += 1
            continue
        if not grouped:
            nb = _widen(coords, i, nb, n, k)
        try:
            centre, normal, c = estimate_tangent_hyperplane(cloud, i, len(nb), nb)
        except ProjDualError:
            skipped += 1
            continue
        if refine:
            centre, normal = refine_tangent_hyperplane(
                _chart_coords(coords[nb], c - 1), _chart_coords(coords[i], c - 1), normal)
        w = np.insert(normal, c - 1, -float(normal @ centre))
        if abs(w[-1]) <= EPS_ZERO * np.linalg.norm(w):
            skipped += 1
            continue
        x = w[:-1] / w[-1]
        planes = coords[nb]
        dist = (planes[:, :-1] @ x + planes[:, -1]) / np.linalg.norm(planes[:, :-1], axis=1)
        out.append(x)
        res.append(float(np.sqrt(np.mean(dist ** 2))))
        src.append(i)
    if not out:
        raise IllConditionedNeighborhood("no point of the cloud admitted a tangent estimate")
    pts, res, src = np.array(out), np.array(res), np.array(src)
    if outlier_factor is not None:
        keep = res <= outlier_factor * np.median(res)
        skipped += int(np.sum(~keep))
        pts, res, src = pts[keep], res[keep], src[keep]
    directions = 0
    if cloud.provenance is not None and "direction" in cloud.provenance:
        directions = len(np.unique(np.asarray(cloud.provenance["direction"]), axis=0))
    h = None
    if truth is not None:
        h = hausdorff(pts, np.asarray(truth, dtype=float), projective=False)
    return ReconstructionReport(pts, res, directions, h, skipped, src)


# ---------------------------------------------------------------------------
# projective maps


def apply_map(alpha, cloud):
    """[p] -> [A p] pointwise, provenance preserved."""
    a = alpha.matrix
    if a.shape[0] != cloud.coords.shape[1]:
        raise ValueError("map and cloud dimensions differ")
    return DualCloud(canonicalize_rows(cloud.coords @ a.T), cloud.provenance)


def dual_transform(alpha):
    """The map (A^T)^-1 acting on hyperplanes."""
    a = alpha.matrix
    if np.linalg.cond(a) > 1.0 / np.finfo(float).eps:
        raise SingularMatrix("matrix is numerically singular")
    return ProjectiveMap(np.linalg.inv(a).T)


def random_rotation(rng, dim):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_conditioned(rng, dim, cond=10.0):
    """Q1 diag(s) Q2 with singular values spanning [1, cond]."""
    s = np.sort(rng.uniform(1.0, cond, dim))
    s[0], s[-1] = 1.0, cond
    return random_rotation(rng, dim) @ np.diag(s) @ random_rotation(rng, dim)


def transformed_dual(samples, alpha):
    """Tangent hyperplanes of alpha(M) from the transformed tangent spaces.

    The lifted tangent space of alpha(M) at alpha(m) is spanned by A (f, 1)
    and A (df/du_i, 0); its orthogonal complement is the dual point.
    """
    a = alpha.matrix
    m = len(samples)
    n = samples.param_dim
    rows = np.empty((m, n + 1, n + 2))
    rows[:, 0, :] = np.concatenate([samples.position, np.ones((m, 1))], 1) @ a.T
    rows[:, 1:, :] = np.concatenate([samples.tangents, np.zeros((m, n, 1))], 2) @ a.T
    rows /= np.linalg.norm(rows, axis=2, keepdims=True)
    _, _, vt = np.linalg.svd(rows)
    return DualCloud(canonicalize_rows(vt[:, -1, :]))


def equivariance_residual(s, alpha, resolution):
    """Hausdorff distance between alpha*(dual(M)) and dual(alpha(M))."""
    samples = sample_grid(s, resolution)
    cloud_a = apply_map(dual_transform(alpha), dual_cloud(s, samples))
    cloud_b = transformed_dual(samples, alpha)
    return hausdorff(cloud_a.coords, cloud_b.coords)


# ---------------------------------------------------------------------------
# homothety


@dataclass
class HomothetyResult:
    lam: float
    max_deviation: float
    homothetic: bool
    per_direction: np.ndarray
    shape_errors: np.ndarray


def _segments(o):
    pts = o.outline_points
    segs = []
    for comp, closed in zip(o.components, o.closed):
        idx = list(comp)
        if len(idx) == 1:
            segs.append(np.stack([pts[idx[0]], pts[idx[0]]]))
            continue
        pairs = list(zip(idx[:-1], idx[1:]))
        if closed:
            pairs.append((idx[-1], idx[0]))
        segs.extend(np.stack([pts[a], pts[b]]) for a, b in pairs)
    return np.array(segs)


def _point_to_segments(p, segs):
    a, b = segs[None, :, 0, :], segs[None, :, 1, :]
    d = b - a
    dd = np.einsum("...i,...i->...", d, d)
    t = np.where(dd > 0, np.einsum("...i,...i->...", p[:, None, :] - a, d) / np.where(dd > 0, dd, 1),
                 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(p[:, None, :] - (a + t[..., None] * d), axis=-1).min(axis=1)


def _polyline_hausdorff(pa, sa, pb, sb):
    return max(_point_to_segments(pa, sb).max(), _point_to_segments(pb, sa).max())


def homothety_fit(outlines_m, outlines_n, tol_fit=1e-2):
    """Fit N = lambda M from outlines along a shared list of directions.

    Per direction, lambda_v is the ratio of RMS radii of the outlines in
    v^perp; shape agreement is the polyline Hausdorff distance between the
    scaled M-outline and the N-outline relative to the N RMS radius.
    """
    outlines_m, outlines_n = list(outlines_m), list(outlines_n)
    if len(outlines_m) != len(outlines_n) or not outlines_m:
        raise ValueError("both families need the same nonempty list of directions")
    lams, errs = [], []
    for om, on in zip(outlines_m, outlines_n):
        if projective_distance(om.direction, on.direction) > 1e-12:
            raise ValueError("outline families use different directions")
        if len(om) == 0 or len(on) == 0:
            raise EmptyOutline("outline has no points")
        rm = np.sqrt(np.mean(np.sum(om.outline_points ** 2, axis=1)))
        rn = np.sqrt(np.mean(np.sum(on.outline_points ** 2, axis=1)))
        if rm == 0:
            raise EmptyOutline("outline collapses to the origin")
        lam = rn / rm
        sm = _segments(om) * lam
        sn = _segments(on)
        err = _polyline_hausdorff(om.outline_points * lam, sm, on.outline_points, sn) / rn
        lams.append(lam)
        errs.append(err)
    lams, errs = np.array(lams), np.array(errs)
    mean = math.fsum(lams) / len(lams)
    return HomothetyResult(mean, float(np.max(np.abs(lams - mean))), bool(np.all(errs < tol_fit)),
                           lams, errs)
