"""Silhouettes of parametric shapes, their duals, and slices of dual clouds.

The critical set of the projection along v is the zero set of
h(u) = <N(u), v>.  For surfaces it is extracted with marching squares on
the parameter grid and every vertex is polished along its grid edge.
"""
from dataclasses import dataclass, field

import numpy as np

from ._kernels import ms_segments
from .duality import DualCloud
from .errors import NoCriticalPoints, TooFewPoints
from .projective import ProjPoint, canonicalize, canonicalize_rows
from .surfaces import EPS_ISO, TAU_RANK, _evaluate_samples, _normals, grid_axes

EPS_CRIT = 1e-10
DEFAULT_RES = 128
GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


def _unit(v):
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if not norm > 0:
        raise ValueError("direction must be nonzero")
    return v / norm


def canonical_direction(v):
    """Unit representative of [v] with the canonical sign."""
    return canonicalize(_unit(v)).coords.copy()


def frame(v):
    """Orthonormal basis of v^perp as rows, with det[frame..., v] = +1."""
    v = _unit(v)
    if len(v) == 2:
        return np.array([[v[1], -v[0]]])
    e = np.zeros(3)
    e[int(np.argmin(np.abs(v)))] = 1.0
    f1 = e - np.dot(e, v) * v
    f1 /= np.linalg.norm(f1)
    return np.array([f1, np.cross(v, f1)])


def project_direction(v, x):
    """Orthogonal projection of ``x`` onto v^perp."""
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    return x - np.dot(x, v) * v


def fibonacci_directions(k, dim=3):
    """``k`` quasi-uniform projective directions.

    Directions are classes [v] = [-v], so points are spread over a half
    sphere (upper hemisphere, or upper half circle for ``dim=2``).
    """
    k = int(k)
    if k < 1:
        raise ValueError("need at least one direction")
    i = np.arange(k) + 0.5
    if dim == 2:
        t = np.pi * i / k
        return np.stack([np.cos(t), np.sin(t)], -1)
    z = i / k
    r = np.sqrt(1.0 - z * z)
    phi = GOLDEN_ANGLE * np.arange(k)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], -1)


# ---------------------------------------------------------------------------
# critical sets


@dataclass
class CriticalSet:
    params: np.ndarray              # (m, n)
    patch: np.ndarray               # (m,) 0 main patch, 1 pole patch
    components: list                # index arrays into params, in polyline order
    closed: list
    h_residuals: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.params)

    def __iter__(self):
        return iter(self.params)


def _h(s, u, v):
    with np.errstate(all="ignore"):
        _, df, _ = s.evaluator(u)
        return _normals(df) @ v


def _polish(s, a, b, fa, fb, v, eps, max_iter=200):
    """Vectorised Illinois regula falsi on bracketing segments [a, b] in parameter space."""
    a, b = a.copy(), b.copy()
    fa, fb = fa.copy(), fb.copy()
    # return the endpoint itself when it is already a root
    swap = np.abs(fa) < np.abs(fb)
    a[swap], b[swap] = b[swap].copy(), a[swap].copy()
    fa[swap], fb[swap] = fb[swap].copy(), fa[swap].copy()
    best, fbest = b.copy(), fb.copy()
    active = np.abs(fb) >= eps
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.where(active)[0]
        den = fb[idx] - fa[idx]
        t = np.where(den != 0, fb[idx] / np.where(den != 0, den, 1.0), 0.5)
        x = b[idx] - t[:, None] * (b[idx] - a[idx])
        fx = _h(s, x, v)
        cross = fx * fb[idx] < 0
        a[idx[cross]] = b[idx[cross]]
        fa[idx[cross]] = fb[idx[cross]]
        fa[idx[~cross]] *= 0.5
        b[idx] = x
        fb[idx] = fx
        better = np.abs(fx) < np.abs(fbest[idx])
        best[idx[better]] = x[better]
        fbest[idx[better]] = fx[better]
        width = np.max(np.abs(b[idx] - a[idx]), axis=1)
        active[idx] = (np.abs(fx) >= eps) & (width > 1e-15)
    return best, fbest


def _extended_axes(s, resolution):
    """Grid axes for zero-curve extraction; pole axes include their end rows."""
    axes = grid_axes(s, resolution)
    if s.pole_axis is not None:
        k = s.pole_axis
        lo, hi = s.domain[k]
        axes[k] = np.concatenate([[lo], axes[k], [hi]])
    return axes


def _grid_h(s, axes, v):
    mesh = np.meshgrid(*axes, indexing="ij")
    u = np.stack([m.ravel() for m in mesh], -1)
    h = _h(s, u, v).reshape(mesh[0].shape)
    if s.pole_axis is not None:
        # pole rows: the normal there is the pole patch normal (constant along the row)
        _, pdf, _ = s.pole_patch.evaluator(np.asarray(s.pole_params, dtype=float))
        hp = _normals(pdf) @ v
        sl = [slice(None)] * len(axes)
        sl[s.pole_axis] = 0
        h[tuple(sl)] = hp[1]
        sl[s.pole_axis] = -1
        h[tuple(sl)] = hp[0]
    return h


def _trace(segments):
    """Join segment pairs into polylines; returns list of (vertex list, closed)."""
    adj = {}
    for a, b in segments:
        adj.setdefault(int(a), []).append(int(b))
        adj.setdefault(int(b), []).append(int(a))
    for key in adj:
        adj[key].sort()
    seen = set()
    out = []

    def walk(start, nxt):
        path = [start]
        seen.add(start)
        prev, cur = start, nxt
        while cur is not None and cur not in seen:
            path.append(cur)
            seen.add(cur)
            nbrs = [w for w in adj[cur] if w != prev]
            prev, cur = cur, (nbrs[0] if nbrs else None)
        return path, cur == start

    ends = sorted(k for k, nb in adj.items() if len(nb) == 1)
    for e in ends:
        if e not in seen:
            out.append(walk(e, adj[e][0]))
    for k in sorted(adj):
        if k not in seen:
            out.append(walk(k, adj[k][0]))
    return out


def _critical_curve(s, v, resolution, eps_crit):
    axes = _extended_axes(s, resolution)
    n0, n1 = len(axes[0]), len(axes[1])
    h = _grid_h(s, axes, v)
    pos = h >= 0
    p0, p1 = s.periodic
    c0 = n0 if p0 else n0 - 1
    c1 = n1 if p1 else n1 - 1
    ii, jj = np.meshgrid(np.arange(c0), np.arange(c1), indexing="ij")
    centre = (h[ii, jj] + h[(ii + 1) % n0, jj] + h[(ii + 1) % n0, (jj + 1) % n1]
              + h[ii, (jj + 1) % n1]) >= 0
    segs = ms_segments(pos, centre, p0, p1)
    if len(segs) == 0:
        raise NoCriticalPoints("h = <N, v> has constant sign on the parameter grid")
    eids = np.unique(segs)
    node = eids // 2
    axis = eids % 2
    i, j = node // n1, node % n1
    periods = [hi - lo for lo, hi in s.domain]
    ua = np.stack([axes[0][i], axes[1][j]], -1)
    i2 = np.where(axis == 0, i + 1, i)
    j2 = np.where(axis == 1, j + 1, j)
    ub = np.stack([np.where(i2 >= n0, axes[0][i2 % n0] + periods[0], axes[0][i2 % n0]),
                   np.where(j2 >= n1, axes[1][j2 % n1] + periods[1], axes[1][j2 % n1])], -1)
    ha, hb = h[i, j], h[i2 % n0, j2 % n1]
    roots, hr = _polish(s, ua, ub, ha, hb, v, eps_crit)
    patch = np.zeros(len(eids), dtype=int)
    if s.pole_axis is not None:
        k = s.pole_axis
        lo, hi = s.domain[k]
        at_pole = (np.abs(roots[:, k] - lo) < 1e-14) | (np.abs(roots[:, k] - hi) < 1e-14)
        north = at_pole & (roots[:, k] > 0)
        patch[at_pole] = 1
        roots[north] = s.pole_params[0]
        roots[at_pole & ~north] = s.pole_params[1]
        hr[at_pole] = np.where(north[at_pole], h[0, -1] if k == 1 else h[-1, 0],
                               h[0, 0])
    for k, per in enumerate(s.periodic):
        if per:
            lo, hi = s.domain[k]
            roots[:, k] = lo + np.mod(roots[:, k] - lo, hi - lo)
    lookup = {int(e): n for n, e in enumerate(eids)}
    params, patches, comps, closed, hres = [], [], [], [], []
    count = 0
    for path, is_closed in _trace(segs):
        idx = [lookup[e] for e in path]
        keep = [idx[0]]
        for q in idx[1:]:
            if not _same_vertex(roots, patch, keep[-1], q):
                keep.append(q)
        if is_closed and len(keep) > 1 and _same_vertex(roots, patch, keep[-1], keep[0]):
            keep.pop()
        params.append(roots[keep])
        patches.append(patch[keep])
        hres.append(hr[keep])
        comps.append(np.arange(count, count + len(keep)))
        closed.append(bool(is_closed))
        count += len(keep)
    return CriticalSet(np.concatenate(params), np.concatenate(patches), comps, closed,
                       np.abs(np.concatenate(hres)))


def _same_vertex(roots, patch, a, b):
    return patch[a] == patch[b] and np.all(np.abs(roots[a] - roots[b]) < 1e-12)


def _critical_points_1d(s, v, resolution, eps_crit):
    t = grid_axes(s, resolution)[0]
    h = _h(s, t[:, None], v)
    pos = h >= 0
    nxt = np.roll(np.arange(len(t)), -1)
    if not s.periodic[0]:
        nxt = nxt[:-1]
    k = np.arange(len(nxt))
    change = pos[k] != pos[nxt]
    if not change.any():
        raise NoCriticalPoints("h = <N, v> has constant sign on the parameter grid")
    k = k[change]
    period = s.domain[0][1] - s.domain[0][0]
    tb = t[nxt[k]] + np.where(nxt[k] < k, period, 0.0)
    roots, hr = _polish(s, t[k][:, None], tb[:, None], h[k], h[nxt[k]], v, eps_crit)
    lo = s.domain[0][0]
    if s.periodic[0]:
        roots = lo + np.mod(roots - lo, period)
    order = np.argsort(roots[:, 0], kind="stable")
    roots, hr = roots[order], hr[order]
    return CriticalSet(roots, np.zeros(len(roots), dtype=int),
                       [np.array([q]) for q in range(len(roots))], [False] * len(roots),
                       np.abs(hr))


def critical_set(s, v, resolution=DEFAULT_RES, eps_crit=EPS_CRIT):
    """Parameters where the normal is orthogonal to ``v``, grouped into polylines."""
    v = _unit(v)
    if len(v) != s.ambient_dim:
        raise ValueError(f"direction has {len(v)} components, shape lives in R^{s.ambient_dim}")
    if s.param_dim == 1:
        return _critical_points_1d(s, v, resolution, eps_crit)
    return _critical_curve(s, v, resolution, eps_crit)


# ---------------------------------------------------------------------------
# outlines


@dataclass(frozen=True, eq=False)
class OutlineSet:
    direction: ProjPoint
    frame: np.ndarray
    critical_params: np.ndarray
    outline_points: np.ndarray
    admissible_flags: np.ndarray
    margins: np.ndarray
    positions: np.ndarray
    normals: np.ndarray
    patch: np.ndarray
    components: list
    closed: list

    def __len__(self):
        return len(self.critical_params)


def _slice_margins(tangents, second, normal, v):
    """Conditioning of the restricted second fundamental form at critical points.

    Along the contour generator the tangent t satisfies II(t, v) = 0.  With
    w = N x v and the entries a = II(v, v), b = II(v, w), c = II(w, w), that
    direction is t = b v - a w and II(t, t) = a (a c - b^2).  The margin is
    |II(t, t)| / (|t|^2 |II|), zero when t is an asymptotic direction.
    """
    m = len(normal)
    vt = v[None, :] - (normal @ v)[:, None] * normal
    vt /= np.linalg.norm(vt, axis=1, keepdims=True)
    w = np.cross(normal, vt)
    first = np.einsum("mik,mjk->mij", tangents, tangents)

    def coeffs(x):
        return np.linalg.solve(first, np.einsum("mik,mk->mi", tangents, x)[..., None])[..., 0]

    av, aw = coeffs(vt), coeffs(w)
    a = np.einsum("mi,mij,mj->m", av, second, av)
    b = np.einsum("mi,mij,mj->m", av, second, aw)
    c = np.einsum("mi,mij,mj->m", aw, second, aw)
    norm_ii = np.sqrt(a * a + 2 * b * b + c * c)
    t2 = a * a + b * b
    margin = np.zeros(m)
    ok = (t2 > 0) & (norm_ii > 0)
    margin[ok] = np.abs(a[ok] * (a[ok] * c[ok] - b[ok] ** 2)) / (t2[ok] * norm_ii[ok])
    tdir = np.where(ok[:, None], b[:, None] * vt - a[:, None] * w, vt)
    tdir /= np.linalg.norm(tdir, axis=1, keepdims=True)
    return margin, tdir


def _geometry_for(s, params, patch):
    """Positions, tangents, normals, second forms for parameters on either patch."""
    n = s.param_dim
    pos = np.empty((len(params), n + 1))
    tan = np.empty((len(params), n, n + 1))
    nor = np.empty((len(params), n + 1))
    sec = np.empty((len(params), n, n))
    for p in (0, 1):
        sel = patch == p
        if not sel.any():
            continue
        f, df, _, geo = _evaluate_samples(s.patch(p), params[sel], TAU_RANK)
        pos[sel], tan[sel], nor[sel], sec[sel] = f, df, geo.normal, geo.second_form
    return pos, tan, nor, sec


def slice_admissible(s, u, v, eps_iso=EPS_ISO, patch=0):
    """(verdict, margin) for the restricted second form at a critical parameter."""
    if s.param_dim == 1:
        return True, float("inf")
    u = np.atleast_2d(np.asarray(u, dtype=float))
    _, tan, nor, sec = _geometry_for(s, u, np.array([patch]))
    margin, _ = _slice_margins(tan, sec, nor, _unit(v))
    return bool(margin[0] > eps_iso), float(margin[0])


def contour_tangents(s, u, v, patch=0):
    """Unit tangent of the contour generator at critical parameters (surfaces)."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    patch = np.broadcast_to(np.asarray(patch), (len(u),))
    _, tan, nor, sec = _geometry_for(s, u, patch)
    return _slice_margins(tan, sec, nor, _unit(v))[1]


def outline(s, v, resolution=DEFAULT_RES, eps_crit=EPS_CRIT, eps_iso=EPS_ISO):
    """The silhouette of ``s`` seen along ``v``, in frame coordinates of v^perp."""
    vc = canonical_direction(v)
    crit = critical_set(s, vc, resolution, eps_crit)
    pos, tan, nor, sec = _geometry_for(s, crit.params, crit.patch)
    fr = frame(vc)
    if s.param_dim == 1:
        margins = np.full(len(pos), np.inf)
    else:
        margins, _ = _slice_margins(tan, sec, nor, vc)
    return OutlineSet(
        direction=ProjPoint(vc), frame=fr, critical_params=crit.params,
        outline_points=pos @ fr.T, admissible_flags=margins > eps_iso, margins=margins,
        positions=pos, normals=nor, patch=crit.patch, components=crit.components,
        closed=crit.closed)


def slice_dual(cloud, v, eps_slice):
    """Sub-cloud of points incident to P([v, 0]^perp) within ``eps_slice``."""
    sigma = canonicalize(np.append(_unit(v), 0.0)).coords
    mask = np.abs(cloud.coords @ sigma) <= eps_slice
    return cloud.subset(mask)


def _polyline_tangents(pts, closed, half_window=3):
    """Unit tangents of a sampled planar curve by local polynomial interpolation.

    Around each vertex, the window of 2m+1 neighbours is written as a graph
    over its chord and interpolated by a polynomial; the slope at the vertex
    gives the tangent.
    """
    k = len(pts)
    m = min(half_window, (k - 1) // 2)
    out = np.empty_like(pts)
    for i in range(k):
        if closed:
            win = np.arange(i - m, i + m + 1) % k
        else:
            lo = min(max(i - m, 0), k - 1 - 2 * m)
            win = np.arange(lo, lo + 2 * m + 1)
        q = pts[win]
        chord = q[-1] - q[0]
        norm = np.linalg.norm(chord)
        if norm == 0:
            chord = q[min(len(q) - 1, m + 1)] - q[max(0, m - 1)]
            norm = np.linalg.norm(chord)
        d = chord / norm
        e = np.array([-d[1], d[0]])
        rel = q - pts[i]
        x, y = rel @ d, rel @ e
        try:
            coef = np.polynomial.polynomial.polyfit(x, y, len(q) - 1)
            slope = coef[1] if len(coef) > 1 else 0.0
        except np.linalg.LinAlgError:
            slope = 0.0
        t = d + slope * e
        out[i] = t / np.linalg.norm(t)
    return out


def outline_dual(o, drop_inadmissible=False):
    """Tangent hyperplanes of M that contain the direction v, one per outline point.

    Each outline tangent line (inside v^perp) together with v spans an affine
    plane of R^{n+1}; its projective point lies on P([v, 0]^perp).
    """
    v = o.direction.coords
    n = len(v) - 1
    pts = o.outline_points
    if n == 1:
        normals = np.repeat(o.frame, len(pts), axis=0)
        offsets = pts[:, 0]
    else:
        normals = np.empty((len(pts), n + 1))
        offsets = np.empty(len(pts))
        for comp, closed in zip(o.components, o.closed):
            if len(comp) < 3:
                raise TooFewPoints(f"outline component has {len(comp)} points; need at least 3")
            tang = _polyline_tangents(pts[comp], closed)
            n2 = np.stack([-tang[:, 1], tang[:, 0]], -1)
            normals[comp] = n2 @ o.frame
            offsets[comp] = np.einsum("ij,ij->i", n2, pts[comp])
    coords = canonicalize_rows(np.concatenate([normals, -offsets[:, None]], axis=1))
    prov = {"u": o.critical_params, "direction": np.repeat(v[None, :], len(pts), axis=0),
            "admissible": o.admissible_flags, "patch": o.patch}
    cloud = DualCloud(coords, prov)
    if drop_inadmissible:
        cloud = cloud.subset(o.admissible_flags)
    return cloud
