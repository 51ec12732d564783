"""Explicit parametric hypersurface patches (plane curves and surfaces in R^3).

Evaluators are vectorised: they take parameters of shape (m, n) and return
``(f, df, d2f)`` with shapes (m, n+1), (m, n, n+1) and (m, n(n+1)/2, n+1).
Second derivatives are ordered (uu,) for curves and (uu, uv, vv) for surfaces.

Normals are oriented so that det[N, df/du_1, ..., df/du_n] > 0, which makes
every built-in closed shape outward-oriented.  With that orientation convex
shapes have negative-definite second fundamental form.
"""
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateParametrization, ShapeSpecError

EPS_RANK = 1e-8      # first-derivative independence (relative singular value)
TAU_RANK = 1e-6      # shape-operator rank threshold (relative)
EPS_ISO = 1e-8       # isotropic-direction threshold (relative to |II|)

TWO_PI = 2.0 * np.pi
_PERM = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


@dataclass(frozen=True, eq=False)
class ParametricSurface:
    name: str
    param_dim: int
    evaluator: Callable
    domain: tuple
    periodic: tuple
    diameter: float
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    # Axis whose two end rows are parametrization singularities (sphere poles);
    # those rows are replaced by points evaluated on ``pole_patch``.
    pole_axis: Optional[int] = None
    pole_patch: Optional["ParametricSurface"] = None
    pole_params: Optional[np.ndarray] = None
    spec: str = ""

    @property
    def ambient_dim(self):
        return self.param_dim + 1

    def evaluate(self, u):
        """Evaluate position and derivatives at one parameter or a batch."""
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        f, df, d2f = self.evaluator(np.atleast_2d(u).reshape(-1, self.param_dim))
        if single:
            return f[0], df[0], d2f[0]
        return f, df, d2f

    def patch(self, index):
        return self if index == 0 else self.pole_patch


# ---------------------------------------------------------------------------
# local differential geometry


def _sym_from_packed(packed, n):
    """(m, n(n+1)/2) packed upper triangle -> (m, n, n) symmetric."""
    m = packed.shape[0]
    out = np.empty((m, n, n))
    k = 0
    for i in range(n):
        for j in range(i, n):
            out[:, i, j] = packed[:, k]
            out[:, j, i] = packed[:, k]
            k += 1
    return out


def _normals(df):
    n = df.shape[1]
    if n == 1:
        t = df[:, 0, :]
        raw = np.stack([t[:, 1], -t[:, 0]], axis=-1)
    elif n == 2:
        raw = np.cross(df[:, 0, :], df[:, 1, :])
    else:
        raise ValueError("only curves (n=1) and surfaces (n=2) are supported")
    return raw / np.linalg.norm(raw, axis=-1, keepdims=True)


@dataclass
class LocalGeometry:
    normal: np.ndarray        # (m, n+1)
    first_form: np.ndarray    # (m, n, n)
    second_form: np.ndarray   # (m, n, n)
    shape_operator: np.ndarray  # (m, n, n), first_form^-1 @ second_form
    gauss_rank: np.ndarray    # (m,)
    det_II: np.ndarray        # (m,)

    def normal_derivatives(self, df):
        """Weingarten map: dN/du_i = -sum_j S_ji df/du_j."""
        return -np.einsum("mji,mjk->mik", self.shape_operator, df)


def local_geometry(df, d2f, tau_rank=TAU_RANK, eps_rank=EPS_RANK, u=None, curvature_floor=0.0):
    """Normals, fundamental forms and Gauss rank for batched derivatives."""
    n = df.shape[1]
    first = np.einsum("mik,mjk->mij", df, df)
    ev = np.linalg.eigvalsh(first)
    ok = ev[:, 0] > (eps_rank ** 2) * ev[:, -1]
    if not np.all(ok):
        bad = int(np.argmin(ok))
        raise DegenerateParametrization("first derivatives are rank deficient",
                                        None if u is None else u[bad])
    normal = _normals(df)
    second = _sym_from_packed(np.einsum("mkd,md->mk", d2f, normal), n)
    shape = np.linalg.solve(first, second)
    sv = np.linalg.svd(shape, compute_uv=False)
    thresh = np.maximum(tau_rank * sv[:, :1], curvature_floor)
    rank = np.sum(sv > thresh, axis=1)
    return LocalGeometry(normal, first, second, shape, rank, np.linalg.det(second))


def _curvature_floor(s):
    return 1e-10 / max(s.diameter, 1e-300)


def _geometry_at(s, u, tau_rank=TAU_RANK):
    u = np.atleast_2d(np.asarray(u, dtype=float))
    f, df, d2f = s.evaluator(u)
    return f, df, local_geometry(df, d2f, tau_rank, u=u, curvature_floor=_curvature_floor(s))


def normal(s, u):
    """Unit normal at parameter ``u`` (outward for built-in closed shapes)."""
    return _geometry_at(s, u)[2].normal[0]


def second_form(s, u):
    """Second fundamental form <d2f/du_i du_j, N> as a symmetric n x n matrix."""
    return _geometry_at(s, u)[2].second_form[0]


def gauss_rank(s, u, tau_rank=TAU_RANK):
    """Rank of the shape operator at ``u`` by relative singular-value threshold."""
    return int(_geometry_at(s, u, tau_rank)[2].gauss_rank[0])


# ---------------------------------------------------------------------------
# samples


@dataclass(frozen=True, eq=False)
class SurfaceSample:
    u: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    second_form: np.ndarray
    gauss_rank: int
    det_II: float
    tangents: np.ndarray
    patch: int = 0
    grid_index: Optional[tuple] = None

    @property
    def flagged(self):
        return self.gauss_rank < len(self.u)


class SampleSet(Sequence):
    """Grid of surface samples stored as stacked arrays.

    Behaves as a read-only sequence of :class:`SurfaceSample`; the array
    attributes are what the vectorised pipelines use.
    """

    def __init__(self, u, position, normal, second_form, gauss_rank, det_II, tangents,
                 d2f, patch, grid_index, grid_shape=None, surface=None, shape_operator=None,
                 axes=None):
        self.u = u
        self.position = position
        self.normal = normal
        self.second_form = second_form
        self.gauss_rank = gauss_rank
        self.det_II = det_II
        self.tangents = tangents
        self.d2f = d2f
        self.patch = patch
        self.grid_index = grid_index
        self.grid_shape = grid_shape
        self.surface = surface
        self.shape_operator = shape_operator
        self.axes = axes

    @property
    def param_dim(self):
        return self.u.shape[1]

    @property
    def flagged(self):
        return self.gauss_rank < self.param_dim

    def __len__(self):
        return len(self.u)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        gi = self.grid_index[i]
        return SurfaceSample(
            u=self.u[i], position=self.position[i], normal=self.normal[i],
            second_form=self.second_form[i], gauss_rank=int(self.gauss_rank[i]),
            det_II=float(self.det_II[i]), tangents=self.tangents[i], patch=int(self.patch[i]),
            grid_index=None if gi[0] < 0 else tuple(int(g) for g in gi))

    @classmethod
    def from_samples(cls, samples):
        """Stack a list of :class:`SurfaceSample` (derivative data is dropped)."""
        if isinstance(samples, SampleSet):
            return samples
        samples = list(samples)
        n = len(samples[0].u)
        gi = np.array([s.grid_index if s.grid_index is not None else (-1,) * n for s in samples])
        return cls(
            u=np.array([s.u for s in samples]), position=np.array([s.position for s in samples]),
            normal=np.array([s.normal for s in samples]),
            second_form=np.array([s.second_form for s in samples]),
            gauss_rank=np.array([s.gauss_rank for s in samples]),
            det_II=np.array([s.det_II for s in samples]),
            tangents=np.array([s.tangents for s in samples]), d2f=None,
            patch=np.array([s.patch for s in samples]), grid_index=gi)


def _evaluate_samples(s, u, tau_rank):
    f, df, d2f = s.evaluator(u)
    geo = local_geometry(df, d2f, tau_rank, u=u, curvature_floor=_curvature_floor(s))
    return f, df, d2f, geo


def sample_at(s, u, patch=0, tau_rank=TAU_RANK):
    """A single :class:`SurfaceSample` at parameter ``u`` of the given patch."""
    surf = s.patch(patch)
    u = np.atleast_2d(np.asarray(u, dtype=float))
    f, df, _, geo = _evaluate_samples(surf, u, tau_rank)
    return SurfaceSample(u=u[0], position=f[0], normal=geo.normal[0],
                         second_form=geo.second_form[0], gauss_rank=int(geo.gauss_rank[0]),
                         det_II=float(geo.det_II[0]), tangents=df[0], patch=patch)


def grid_axes(s, resolution):
    """Parameter values per axis following the periodic and pole conventions."""
    res = (resolution,) * s.param_dim if np.isscalar(resolution) else tuple(resolution)
    axes = []
    for k, ((lo, hi), per, r) in enumerate(zip(s.domain, s.periodic, res)):
        r = int(r)
        if r < 2:
            raise ValueError("resolution must be at least 2 per axis")
        if per:
            axes.append(lo + (hi - lo) * np.arange(r) / r)
        elif s.pole_axis == k:
            axes.append(lo + (hi - lo) * np.arange(1, r) / r)
        else:
            axes.append(np.linspace(lo, hi, r))
    return axes


def sample_grid(s, resolution, tau_rank=TAU_RANK):
    """Uniform parameter grid over the domain.

    Periodic axes omit the duplicate endpoint.  For shapes with a pole axis
    the polar rows are dropped (the axis gets ``resolution`` intervals and only
    interior rows are kept) and the poles are appended from ``s.pole_patch``,
    so a sphere at 8 x 8 has 8*7 + 2 samples.  Rank-deficient samples are kept
    and flagged.
    """
    axes = grid_axes(s, resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    u = np.stack([m.ravel() for m in mesh], axis=-1)
    idx = np.stack([m.ravel() for m in np.meshgrid(*[np.arange(len(a)) for a in axes],
                                                      indexing="ij")], axis=-1)
    f, df, d2f, geo = _evaluate_samples(s, u, tau_rank)
    patch = np.zeros(len(u), dtype=int)
    parts = [(u, f, df, d2f, geo, patch, idx)]
    if s.pole_patch is not None:
        pu = np.asarray(s.pole_params, dtype=float)
        pf, pdf, pd2f, pgeo = _evaluate_samples(s.pole_patch, pu, tau_rank)
        parts.append((pu, pf, pdf, pd2f, pgeo, np.ones(len(pu), dtype=int),
                      -np.ones((len(pu), s.param_dim), dtype=int)))

    def cat(getter):
        return np.concatenate([getter(p) for p in parts])

    return SampleSet(
        u=cat(lambda p: p[0]), position=cat(lambda p: p[1]), tangents=cat(lambda p: p[2]),
        d2f=cat(lambda p: p[3]), normal=cat(lambda p: p[4].normal),
        second_form=cat(lambda p: p[4].second_form), gauss_rank=cat(lambda p: p[4].gauss_rank),
        det_II=cat(lambda p: p[4].det_II), shape_operator=cat(lambda p: p[4].shape_operator),
        patch=cat(lambda p: p[5]), grid_index=cat(lambda p: p[6]),
        grid_shape=tuple(len(a) for a in axes), surface=s, axes=axes)


def _orthonormal_tangent_basis(tangents):
    """Gram-Schmidt on the rows of ``tangents`` (n, n+1); returns (E, A) with E = A @ tangents."""
    first = tangents @ tangents.T
    chol = np.linalg.cholesky(first)
    a = np.linalg.inv(chol)
    return a @ tangents, a


def isotropic_directions(sample, eps_iso=EPS_ISO):
    """Unit tangent vectors x with II(x, x) = 0.

    Returns a list of 0, 1 or 2 vectors in R^3, or the string ``"all"`` when
    the second fundamental form vanishes.  For curves the answer is ``[]`` or
    ``"all"``.
    """
    tangents = np.asarray(sample.tangents)
    ii = np.asarray(sample.second_form)
    basis, a = _orthonormal_tangent_basis(tangents)
    ii_e = a @ ii @ a.T
    scale = np.linalg.norm(ii_e)
    if scale <= 1e-12:
        return "all"
    if ii_e.shape[0] == 1:
        return []
    k, q = np.linalg.eigh(ii_e)
    small = np.abs(k) <= eps_iso * scale
    if small.all():
        return "all"
    if small.any():
        dirs = [q[:, int(np.argmax(small))]]
    elif k[0] * k[1] > 0:
        return []
    else:
        alpha = np.arctan(np.sqrt(-k[0] / k[1]))
        dirs = [np.cos(alpha) * q[:, 0] + s * np.sin(alpha) * q[:, 1] for s in (1.0, -1.0)]
    out = []
    for c in dirs:
        x = c @ basis
        x = x / np.linalg.norm(x)
        if x[np.argmax(np.abs(x) > 1e-12)] < 0:
            x = -x
        out.append(x)
    return out


def second_form_on(tangents, second, x, y=None):
    """II(x, y) for ambient tangent vectors, given param-coordinate II."""
    y = x if y is None else y
    first = tangents @ tangents.T
    ax = np.linalg.solve(first, tangents @ x)
    ay = np.linalg.solve(first, tangents @ y)
    return float(ax @ second @ ay)


# ---------------------------------------------------------------------------
# built-in shapes


def _unit_sphere(u):
    phi, th = u[:, 0], u[:, 1]
    cp, sp, ct, st = np.cos(phi), np.sin(phi), np.cos(th), np.sin(th)
    z = np.zeros_like(phi)
    f = np.stack([ct * cp, ct * sp, st], -1)
    df = np.stack([np.stack([-ct * sp, ct * cp, z], -1),
                   np.stack([-st * cp, -st * sp, ct], -1)], 1)
    d2f = np.stack([np.stack([-ct * cp, -ct * sp, z], -1),
                    np.stack([st * sp, -st * cp, z], -1),
                    np.stack([-ct * cp, -ct * sp, -st], -1)], 1)
    return f, df, d2f


def _linear_sphere_evaluator(lin):
    lin = np.asarray(lin, dtype=float)

    def ev(u):
        f, df, d2f = _unit_sphere(u)
        return f @ lin.T, df @ lin.T, d2f @ lin.T
    return ev


def _fmt(x):
    return f"{x:g}"


def circle(r=1.0):
    return ellipse(r, r, _name="circle", _spec=f"circle:r={_fmt(r)}")


def ellipse(a=2.0, b=1.0, _name="ellipse", _spec=None):
    a, b = float(a), float(b)

    def ev(u):
        t = u[:, 0]
        c, s = np.cos(t), np.sin(t)
        f = np.stack([a * c, b * s], -1)
        df = np.stack([-a * s, b * c], -1)[:, None, :]
        d2f = np.stack([-a * c, -b * s], -1)[:, None, :]
        return f, df, d2f

    return ParametricSurface(_name, 1, ev, ((0.0, TWO_PI),), (True,), 2 * max(a, b),
                             np.zeros(2), spec=_spec or f"ellipse:a={_fmt(a)},b={_fmt(b)}")


def ellipsoid(a=3.0, b=2.0, c=1.0, _name="ellipsoid", _spec=None):
    """Ellipsoid with semi-axes a, b, c; parameters (longitude, latitude)."""
    a, b, c = float(a), float(b), float(c)
    diag = np.diag([a, b, c])
    spec = _spec or f"ellipsoid:a={_fmt(a)},b={_fmt(b)},c={_fmt(c)}"
    domain = ((0.0, TWO_PI), (-np.pi / 2, np.pi / 2))
    # second patch: the same ellipsoid with its latitude-longitude poles on the x axis
    pole = ParametricSurface(_name + "-pole-patch", 2, _linear_sphere_evaluator(diag @ _PERM),
                             domain, (True, False), 2 * max(a, b, c), spec=spec)
    # P @ (0, +-1, 0) = (0, 0, +-1): north and south pole
    pole_params = np.array([[np.pi / 2, 0.0], [3 * np.pi / 2, 0.0]])
    return ParametricSurface(_name, 2, _linear_sphere_evaluator(diag), domain, (True, False),
                             2 * max(a, b, c), pole_axis=1, pole_patch=pole,
                             pole_params=pole_params, spec=spec)


def sphere(r=1.0):
    r = float(r)
    return ellipsoid(r, r, r, _name="sphere", _spec=f"sphere:r={_fmt(r)}")


def torus(R=2.0, r=0.5):
    """Torus of revolution about z; parameters (phi around z, theta around the tube)."""
    R, r = float(R), float(r)
    if not R > r > 0:
        raise ShapeSpecError("torus needs R > r > 0")

    def ev(u):
        phi, th = u[:, 0], u[:, 1]
        cp, sp, ct, st = np.cos(phi), np.sin(phi), np.cos(th), np.sin(th)
        rho = R + r * ct
        z = np.zeros_like(phi)
        f = np.stack([rho * cp, rho * sp, r * st], -1)
        df = np.stack([np.stack([-rho * sp, rho * cp, z], -1),
                       np.stack([-r * st * cp, -r * st * sp, r * ct], -1)], 1)
        d2f = np.stack([np.stack([-rho * cp, -rho * sp, z], -1),
                        np.stack([r * st * sp, -r * st * cp, z], -1),
                        np.stack([-r * ct * cp, -r * ct * sp, -r * st], -1)], 1)
        return f, df, d2f

    return ParametricSurface("torus", 2, ev, ((0.0, TWO_PI), (0.0, TWO_PI)), (True, True),
                             2 * (R + r), spec=f"torus:R={_fmt(R)},r={_fmt(r)}")


def graph_patch(coeffs, half_width=1.0):
    """Graph (u, v, h(u, v)) of the polynomial h = sum c_ij u^i v^j over [-w, w]^2."""
    coeffs = {(int(i), int(j)): float(c) for (i, j), c in dict(coeffs).items()}
    w = float(half_width)

    def h_and_derivs(u, v):
        out = np.zeros((6,) + u.shape)  # h, hu, hv, huu, huv, hvv
        for (i, j), c in coeffs.items():
            def mono(p, q, x=u, y=v):
                if p < 0 or q < 0:
                    return 0.0
                return x ** p * y ** q
            out[0] += c * mono(i, j)
            out[1] += c * i * mono(i - 1, j)
            out[2] += c * j * mono(i, j - 1)
            out[3] += c * i * (i - 1) * mono(i - 2, j)
            out[4] += c * i * j * mono(i - 1, j - 1)
            out[5] += c * j * (j - 1) * mono(i, j - 2)
        return out

    def ev(uv):
        u, v = uv[:, 0], uv[:, 1]
        h, hu, hv, huu, huv, hvv = h_and_derivs(u, v)
        z, o = np.zeros_like(u), np.ones_like(u)
        f = np.stack([u, v, h], -1)
        df = np.stack([np.stack([o, z, hu], -1), np.stack([z, o, hv], -1)], 1)
        d2f = np.stack([np.stack([z, z, huu], -1), np.stack([z, z, huv], -1),
                        np.stack([z, z, hvv], -1)], 1)
        return f, df, d2f

    corners = np.array([[x, y] for x in (-w, 0.0, w) for y in (-w, 0.0, w)])
    pts = ev(corners)[0]
    diam = float(np.max(np.linalg.norm(pts[:, None] - pts[None], axis=-1)))
    spec = "graph:" + ",".join(f"c{i}{j}={_fmt(c)}" for (i, j), c in sorted(coeffs.items()))
    if not coeffs:
        spec = "plane"
    return ParametricSurface("graph", 2, ev, ((-w, w), (-w, w)), (False, False), diam,
                             center=ev(np.zeros((1, 2)))[0][0], spec=spec)


def plane_patch(half_width=1.0):
    return graph_patch({}, half_width)


def linear_image(s, matrix, name=None):
    """The shape x -> A x for an invertible (n+1) x (n+1) matrix A."""
    a = np.asarray(matrix, dtype=float)
    if a.shape != (s.ambient_dim, s.ambient_dim) or abs(np.linalg.det(a)) < 1e-12:
        raise ShapeSpecError("linear image needs an invertible square matrix of the ambient size")
    base = s.evaluator

    def ev(u):
        f, df, d2f = base(u)
        return f @ a.T, df @ a.T, d2f @ a.T

    pole = None if s.pole_patch is None else linear_image(s.pole_patch, a)
    # with det A < 0 the normal rule yields inward normals; duals are unaffected
    diam = s.diameter * float(np.linalg.norm(a, 2))
    out = ParametricSurface(name or f"{s.name}-image", s.param_dim, ev, s.domain, s.periodic, diam,
                            center=a @ np.asarray(s.center, dtype=float), pole_axis=s.pole_axis,
                            pole_patch=pole, pole_params=s.pole_params, spec=s.spec)
    return out


_SHAPES = {
    "circle": (circle, ("r",)),
    "ellipse": (ellipse, ("a", "b")),
    "sphere": (sphere, ("r",)),
    "ellipsoid": (ellipsoid, ("a", "b", "c")),
    "torus": (torus, ("R", "r")),
}


def parse_shape(text):
    """Build a shape from the CLI mini-language, e.g. ``"torus:R=2,r=0.5"``.

    ``plane`` and ``graph:c20=1,c02=-1[,w=1]`` give polynomial graph patches.
    """
    name, _, rest = text.strip().partition(":")
    kv = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ShapeSpecError(f"expected key=value in shape spec, got {item!r}")
        try:
            kv[key.strip()] = float(val)
        except ValueError:
            raise ShapeSpecError(f"shape parameter {key!r} is not a number: {val!r}") from None
    if name in ("plane", "graph"):
        w = kv.pop("w", 1.0)
        coeffs = {}
        for key, val in kv.items():
            if len(key) != 3 or key[0] != "c" or not key[1:].isdigit():
                raise ShapeSpecError(f"graph coefficients are named cIJ, got {key!r}")
            coeffs[(int(key[1]), int(key[2]))] = val
        return graph_patch(coeffs, w)
    if name not in _SHAPES:
        raise ShapeSpecError(f"unknown shape {name!r}; expected one of "
                             f"{', '.join(sorted(_SHAPES))}, plane, graph")
    ctor, keys = _SHAPES[name]
    unknown = set(kv) - set(keys)
    if unknown:
        raise ShapeSpecError(f"unknown parameter(s) {sorted(unknown)} for {name}")
    for key, val in kv.items():
        if not val > 0:
            raise ShapeSpecError(f"shape parameter {key} must be positive, got {val}")
    return ctor(**kv)
