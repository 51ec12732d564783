"""Independent reference computations used by the verification suite.

Nothing here is used by the pipelines themselves; these are the
ground-truth routines the checks compare against.
"""
import numpy as np

from .surfaces import sample_grid


def central_differences(s, u, step=1e-5):
    """(df, d2f) at parameter ``u`` by central differences of the position."""
    u = np.asarray(u, dtype=float)
    n = len(u)
    f = lambda x: s.evaluate(x)[0]
    eye = np.eye(n) * step
    df = np.array([(f(u + eye[i]) - f(u - eye[i])) / (2 * step) for i in range(n)])
    d2 = []
    for i in range(n):
        for j in range(i, n):
            if i == j:
                d2.append((f(u + eye[i]) - 2 * f(u) + f(u - eye[i])) / step ** 2)
            else:
                d2.append((f(u + eye[i] + eye[j]) - f(u + eye[i] - eye[j])
                           - f(u - eye[i] + eye[j]) + f(u - eye[i] - eye[j])) / (4 * step ** 2))
    return df, np.array(d2)


def _newton_project(s, u, p, iters=30):
    n = s.param_dim
    for _ in range(iters):
        f, df, d2f = s.evaluator(u)
        r = f - p
        grad = np.einsum("mik,mk->mi", df, r)
        hess = np.einsum("mik,mjk->mij", df, df)
        k = 0
        for i in range(n):
            for j in range(i, n):
                term = np.einsum("mk,mk->m", d2f[:, k], r)
                hess[:, i, j] += term
                if i != j:
                    hess[:, j, i] += term
                k += 1
        # fall back to Gauss-Newton where the Hessian is not positive definite
        gn = np.einsum("mik,mjk->mij", df, df)
        ok = np.linalg.eigvalsh(hess)[:, 0] > 0
        hess[~ok] = gn[~ok]
        step = np.linalg.solve(hess, grad[..., None])[..., 0]
        u = u - step
        if np.max(np.abs(step)) < 1e-14:
            break
    return u


def distance_to_surface(s, points, seed_resolution=128):
    """Euclidean distance from each point to the shape, by Newton projection.

    Seeds are the nearest samples of a parameter grid (both patches for
    shapes with poles); the minimum over patches is returned.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    grid = sample_grid(s, seed_resolution)
    best = np.full(len(points), np.inf)
    for patch in (0, 1):
        surf = s.patch(patch)
        if surf is None:
            continue
        if patch == 0:
            seeds_u, seeds_f = grid.u[grid.patch == 0], grid.position[grid.patch == 0]
        else:
            # the second patch is only needed near its equator, where the poles of the first lie
            phi = 2 * np.pi * np.arange(seed_resolution) / seed_resolution
            theta = np.linspace(-0.5, 0.5, seed_resolution // 4 + 1)
            mesh = np.meshgrid(phi, theta, indexing="ij")
            seeds_u = np.stack([m.ravel() for m in mesh], -1)
            seeds_f = surf.evaluator(seeds_u)[0]
        idx = np.empty(len(points), dtype=int)
        for start in range(0, len(points), 512):
            chunk = points[start:start + 512]
            d2 = np.sum((chunk[:, None, :] - seeds_f[None]) ** 2, axis=-1)
            idx[start:start + 512] = np.argmin(d2, axis=1)
        u = _newton_project(surf, seeds_u[idx].copy(), points)
        d = np.linalg.norm(surf.evaluator(u)[0] - points, axis=1)
        # Newton may wander off the patch domain on non-periodic axes; clamp to seeds then
        d = np.minimum(d, np.linalg.norm(seeds_f[idx] - points, axis=1))
        best = np.minimum(best, d)
    return best


def dense_truth(s, resolution=512):
    """Dense sample of the shape's points."""
    return sample_grid(s, resolution).position
