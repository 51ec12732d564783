"""Affine Gauss map, dual clouds and the bidual linear solve."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import OriginOnTangent, SingularSystem
from .projective import ProjPoint, canonicalize, canonicalize_rows
from .surfaces import TAU_RANK, SampleSet, _evaluate_samples


@dataclass(frozen=True, eq=False)
class DualCloud:
    """Canonical homogeneous points in P^{n+1} with optional per-point provenance.

    ``coords`` is an (m, n+2) array; ``provenance`` maps field names
    (``u``, ``normal``, ``rank``, ``direction``, ...) to arrays of length m.
    """

    coords: np.ndarray
    provenance: Optional[dict] = None

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim != 2:
            raise ValueError("DualCloud coordinates must be a 2-d array")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        if self.provenance is not None:
            for key, val in self.provenance.items():
                if len(val) != len(c):
                    raise ValueError(f"provenance field {key!r} has length {len(val)}, "
                                     f"expected {len(c)}")

    @property
    def ambient_dim(self):
        return self.coords.shape[1] - 1

    @property
    def points(self):
        return [ProjPoint(row) for row in self.coords]

    def __len__(self):
        return len(self.coords)

    def subset(self, mask):
        prov = None
        if self.provenance is not None:
            prov = {k: np.asarray(v)[mask] for k, v in self.provenance.items()}
        return DualCloud(self.coords[mask], prov)

    def chart_points(self, c=None):
        """Affine coordinates in chart ``c`` (default: the last coordinate)."""
        c = self.coords.shape[1] if c is None else c
        return np.delete(self.coords, c - 1, axis=1) / self.coords[:, c - 1:c]

    @staticmethod
    def concatenate(clouds):
        clouds = list(clouds)
        coords = np.concatenate([c.coords for c in clouds])
        keys = set.intersection(*[set(c.provenance or {}) for c in clouds]) if clouds else set()
        prov = {k: np.concatenate([np.asarray(c.provenance[k]) for c in clouds]) for k in keys}
        return DualCloud(coords, prov or None)


def _dual_rows(position, normal):
    position = np.asarray(position, dtype=float)
    normal = np.asarray(normal, dtype=float)
    support = np.einsum("...i,...i->...", normal, position)
    return np.concatenate([normal, -support[..., None]], axis=-1)


def dual_point(position, normal):
    """The tangent hyperplane at ``position`` as a point of P^{n+1}.

    The lifted tangent space {(x, t) : <N, x> = <N, m> t} has orthogonal
    complement spanned by (N, -<N, m>).
    """
    normal = np.asarray(normal, dtype=float)
    if abs(np.linalg.norm(normal) - 1.0) > 1e-9:
        raise ValueError("normal must be a unit vector")
    return canonicalize(_dual_rows(position, normal))


def dual_cloud(s, samples):
    """Dualize every sample, flagged ones included, preserving order."""
    samples = SampleSet.from_samples(samples)
    if len(samples) == 0:
        raise ValueError("dual_cloud needs at least one sample")
    coords = canonicalize_rows(_dual_rows(samples.position, samples.normal))
    prov = {"u": samples.u, "normal": samples.normal, "rank": samples.gauss_rank,
            "patch": samples.patch}
    return DualCloud(coords, prov)


# ---------------------------------------------------------------------------
# bidual


def _condition(m):
    with np.errstate(all="ignore"):
        c = np.linalg.cond(m)
    return np.where(np.isfinite(c), c, np.inf)


def bidual_solve(g, dg, tau_rank=TAU_RANK):
    """Solve [g; dg] X = e_1 for the point whose tangent plane family is (g, dg).

    The system is rejected when its condition number reaches 1 / tau_rank:
    a vanishing derivative row means the dual map drops rank there.
    """
    m = np.vstack([np.asarray(g, dtype=float)[None, :], np.asarray(dg, dtype=float)])
    if m.shape[0] != m.shape[1]:
        raise ValueError("need n derivative rows for a point in R^{n+1}")
    if np.any(np.linalg.norm(m, axis=1) == 0) or not _condition(m) < 1.0 / tau_rank:
        raise SingularSystem("bidual system is singular (parabolic point or degenerate dual)")
    rhs = np.zeros(len(m))
    rhs[0] = 1.0
    return np.linalg.solve(m, rhs)


def dual_parametrization(f, df, normal, shape_operator, shift):
    """g = N / <N, f - shift> and its parameter derivatives by the quotient rule."""
    ft = f - shift
    c = np.einsum("mi,mi->m", normal, ft)
    dn = -np.einsum("mji,mjk->mik", shape_operator, df)
    dc = np.einsum("mik,mk->mi", dn, ft)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = normal / c[:, None]
        dg = (dn * c[:, None, None] - normal[:, None, :] * dc[:, :, None]) / (c[:, None, None] ** 2)
    return g, dg, c, ft


def default_eps_origin(s):
    return 1e-2 * s.diameter


def involution_residual(s, u, origin_shift=None, eps_origin=None, tau_rank=TAU_RANK):
    """|X - f(u)| where X is recovered from the dual parametrization at u."""
    shift = np.asarray(s.center if origin_shift is None else origin_shift, dtype=float)
    eps_origin = default_eps_origin(s) if eps_origin is None else eps_origin
    u = np.atleast_2d(np.asarray(u, dtype=float))
    f, df, d2f, geo = _evaluate_samples(s, u, tau_rank)
    if geo.gauss_rank[0] < s.param_dim:
        raise SingularSystem("shape operator is rank deficient at this parameter")
    g, dg, c, ft = dual_parametrization(f, df, geo.normal, geo.shape_operator, shift)
    if abs(c[0]) <= eps_origin:
        raise OriginOnTangent(f"tangent plane passes within {abs(c[0]):.3g} of the origin shift")
    x = bidual_solve(g[0], dg[0], tau_rank)
    return float(np.linalg.norm(x - ft[0]))


@dataclass
class InvolutionResult:
    residuals: np.ndarray   # NaN where the sample was skipped
    singular: np.ndarray    # bool: SingularSystem at this sample
    skipped_rank: np.ndarray  # bool: gauss_rank < n

    @property
    def max_residual(self):
        ok = ~np.isnan(self.residuals)
        return float(self.residuals[ok].max()) if ok.any() else float("nan")


def involution_residuals(samples, center=None, diameter=None, tau_rank=TAU_RANK, reshift=0.1):
    """Vectorised involution residual over a sample set.

    The origin shift is the shape centre; where the tangent plane passes
    within ``reshift * diameter`` of it, the shift is moved half a diameter
    inward along the normal so the dual chart stays well defined.
    Rank-deficient samples are skipped; near-singular systems are marked.
    """
    s = samples.surface
    center = np.asarray(s.center if center is None else center, dtype=float)
    diameter = s.diameter if diameter is None else diameter
    n = samples.param_dim
    m = len(samples)
    shift = np.broadcast_to(center, samples.position.shape).copy()
    c0 = np.einsum("mi,mi->m", samples.normal, samples.position - shift)
    near = np.abs(c0) < reshift * diameter
    shift[near] -= 0.5 * diameter * samples.normal[near]
    g, dg, c, ft = dual_parametrization(samples.position, samples.tangents, samples.normal,
                                         samples.shape_operator, shift)
    full = samples.gauss_rank == n
    mat = np.concatenate([g[:, None, :], dg], axis=1)
    res = np.full(m, np.nan)
    singular = np.zeros(m, dtype=bool)
    idx = np.where(full)[0]
    if len(idx):
        cond = _condition(mat[idx])
        good = cond < 1.0 / tau_rank
        singular[idx[~good]] = True
        gi = idx[good]
        rhs = np.zeros((len(gi), n + 1, 1))
        rhs[:, 0, 0] = 1.0
        x = np.linalg.solve(mat[gi], rhs)[..., 0]
        res[gi] = np.linalg.norm(x - ft[gi], axis=1)
    return InvolutionResult(res, singular, ~full)


# ---------------------------------------------------------------------------
# admissibility


@dataclass
class AdmissibilityReport:
    fraction: float
    gaps: tuple
    gap_bound: tuple
    deficient_params: np.ndarray
    admissible: bool


def _axis_gap(values, period):
    values = np.sort(values)
    if len(values) == 0:
        return 0.0
    gaps = np.diff(values)
    if period is not None:
        gaps = np.append(gaps, period - (values[-1] - values[0]))
    return float(gaps.max()) if len(gaps) else 0.0


def admissibility_report(samples, gap_factor=4.0):
    """Density check of the full-rank samples on a parameter grid.

    Per axis, the gap is the largest parameter distance between consecutive
    full-rank samples along any grid line that contains at least one.
    Verdict: fraction > 0 and every gap below ``gap_factor`` grid spacings.
    """
    samples = SampleSet.from_samples(samples)
    n = samples.param_dim
    full = samples.gauss_rank == n
    fraction = float(full.mean()) if len(samples) else 0.0
    deficient = samples.u[~full]
    s = samples.surface
    grid = samples.grid_index[:, 0] >= 0
    gaps, bounds = [], []
    if samples.axes is not None and s is not None:
        shape = samples.grid_shape
        rank_grid = np.zeros(shape, dtype=bool)
        rank_grid[tuple(samples.grid_index[grid].T)] = full[grid]
        for k in range(n):
            axis_vals = samples.axes[k]
            lo, hi = s.domain[k]
            period = (hi - lo) if s.periodic[k] else None
            spacing = (hi - lo) / (len(axis_vals) if s.periodic[k] else
                                   len(axis_vals) + 1 if s.pole_axis == k else len(axis_vals) - 1)
            lines = np.moveaxis(rank_grid, k, -1).reshape(-1, shape[k])
            gap = 0.0
            for line in lines:
                if line.any():
                    gap = max(gap, _axis_gap(axis_vals[line], period))
            gaps.append(gap)
            bounds.append(gap_factor * spacing)
    verdict = fraction > 0 and all(g < b for g, b in zip(gaps, bounds))
    return AdmissibilityReport(fraction, tuple(gaps), tuple(bounds), deficient, bool(verdict))
