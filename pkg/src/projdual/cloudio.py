"""CloudFile: JSON/CSV/SVG serialization of projective point clouds."""
import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .duality import DualCloud
from .errors import UnsupportedFormat
from .projective import canonicalize_rows

FORMATS = ("json", "csv", "svg")


@dataclass
class CloudFile:
    ambient_dim: int
    points: np.ndarray
    provenance: Optional[list] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, self.ambient_dim + 1)
        self.points = pts
        self.meta = {str(k): str(v) for k, v in self.meta.items()}
        if self.provenance is not None and len(self.provenance) != len(pts):
            raise ValueError("provenance must be parallel to points")

    def validate(self):
        """Schema checks: lengths, canonical points, mandatory meta keys."""
        if self.points.shape[1] != self.ambient_dim + 1:
            raise ValueError("point arrays must have length ambient_dim + 1")
        if len(self.points) and np.max(np.abs(canonicalize_rows(self.points) - self.points)) > 1e-12:
            raise ValueError("points are not in canonical form")
        for key in ("tool_version", "created_by_command"):
            if key not in self.meta:
                raise ValueError(f"meta lacks {key!r}")
        return True

    def to_cloud(self):
        prov = None
        if self.provenance:
            keys = set.intersection(*[set(r) for r in self.provenance])
            prov = {k: np.array([r[k] for r in self.provenance]) for k in sorted(keys)}
        return DualCloud(self.points, prov)


def _record(prov, i):
    rec = {}
    for key in ("u", "direction", "rank", "component"):
        if key in prov:
            val = np.asarray(prov[key][i])
            rec[key] = val.tolist() if val.ndim else (int(val) if key in ("rank", "component")
                                                       else float(val))
    return rec


def from_cloud(cloud, command, meta=None, timestamp=False):
    """Wrap a DualCloud into a CloudFile with the mandatory meta keys."""
    info = {"tool_version": __version__, "created_by_command": command}
    info.update(meta or {})
    if timestamp:
        import datetime
        info["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    prov = None
    if cloud.provenance:
        prov = [_record(cloud.provenance, i) for i in range(len(cloud))]
    return CloudFile(cloud.ambient_dim, np.array(cloud.coords), prov, info)


def to_json(cf):
    doc = {"ambient_dim": int(cf.ambient_dim),
           "points": [[float(x) for x in row] for row in cf.points],
           "provenance": cf.provenance,
           "meta": dict(sorted(cf.meta.items()))}
    # repr of floats is the shortest string that round-trips exactly
    return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"


def from_json(text):
    doc = json.loads(text)
    dim = int(doc["ambient_dim"])
    pts = np.array(doc["points"], dtype=float).reshape(-1, dim + 1)
    return CloudFile(dim, pts, doc.get("provenance"), doc.get("meta", {}))


def to_csv(cf):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(cf.ambient_dim + 1)])
    for row in cf.points:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def _svg_path(xy, closed):
    cmds = " ".join(f"{'M' if i == 0 else 'L'}{x:.3f},{y:.3f}" for i, (x, y) in enumerate(xy))
    return cmds + (" Z" if closed else "")


def polylines_to_svg(polylines, size=1000.0, pad=0.05):
    """SVG with one path per polyline; ``polylines`` is a list of (points (m, 2), closed)."""
    allpts = np.concatenate([p for p, _ in polylines]) if polylines else np.zeros((0, 2))
    if len(allpts):
        lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    else:
        lo, hi = np.zeros(2), np.ones(2)
    span = float(max(np.max(hi - lo), 1e-300))
    inner = size * (1 - 2 * pad)
    scale = inner / span
    offset = size * pad + (inner - (hi - lo) * scale) / 2

    def tr(p):
        q = (p - lo) * scale + offset
        q[:, 1] = size - q[:, 1]  # y axis up
        return q

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size:g} {size:g}" '
             f'width="{size:g}" height="{size:g}">']
    for pts, closed in polylines:
        if len(pts) == 1:
            x, y = tr(np.asarray(pts, dtype=float))[0]
            lines.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="3" fill="black"/>')
        else:
            lines.append(f'<path d="{_svg_path(tr(np.asarray(pts, dtype=float)), closed)}" '
                         'fill="none" stroke="black" stroke-width="2"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def to_svg(cf):
    """Planar content only: points of P^2 drawn in the chart x3 = 1."""
    if cf.ambient_dim != 2:
        raise UnsupportedFormat(f"svg export needs planar content (ambient_dim 2), got "
                                f"{cf.ambient_dim}")
    pts = cf.points
    ok = np.abs(pts[:, 2]) > 1e-12
    xy = pts[ok, :2] / pts[ok, 2:3]
    comp = np.zeros(len(pts), dtype=int)
    if cf.provenance and all("component" in r for r in cf.provenance):
        comp = np.array([r["component"] for r in cf.provenance])
    comp = comp[ok]
    polylines = []
    for c in sorted(set(comp.tolist())):
        sel = xy[comp == c]
        closed = False
        if len(sel) > 2:
            step = np.max(np.linalg.norm(np.diff(sel, axis=0), axis=1))
            closed = bool(np.linalg.norm(sel[-1] - sel[0]) <= 2 * step)
        polylines.append((sel, closed))
    return polylines_to_svg(polylines)


def export(cf, fmt):
    if fmt == "json":
        return to_json(cf)
    if fmt == "csv":
        return to_csv(cf)
    if fmt == "svg":
        return to_svg(cf)
    raise UnsupportedFormat(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def read_cloudfile(path):
    with open(path, encoding="utf-8") as fh:
        return from_json(fh.read())
