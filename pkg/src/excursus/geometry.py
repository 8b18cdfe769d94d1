"""Continuous-domain sets on planar triangulations.

Nodal excursion functions are extended to the plane by log-linear
interpolation inside each triangle, so ``log F`` is linear there and the
``1 - alpha`` level set of ``F`` is cut out by straight segments. The same
clipping machinery builds level-set regions of a linearly interpolated
field; marching triangles produces its contour curves.

Clipped pieces are stitched into polygons through canonical point keys:
a mesh vertex is ``("v", i)``, a crossing on mesh edge ``(a, b)`` with
``a < b`` is ``("e", a, b, j)`` and is computed from the edge's two nodal
values in that orientation, so neighbouring triangles produce bit-identical
points. Shared edges then cancel and the remaining directed edges chain
into rings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

LOG_EPS = 1e-12
PERTURB = 1e-12


# -- meshes -----------------------------------------------------------------


class TriMesh:
    """Planar triangulation.

    Triangles are stored counter-clockwise; clockwise input triangles are
    reoriented on construction.
    """

    def __init__(self, vertices, triangles):
        V = np.array(vertices, dtype=np.float64).reshape(-1, 2)
        T = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(V)):
            raise ValueError("mesh vertices must be finite")
        if T.size and (T.min() < 0 or T.max() >= len(V)):
            raise ValueError("triangle refers to a missing vertex")
        area2 = _cross(V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]) if T.size else np.empty(0)
        if np.any(area2 == 0):
            raise ValueError(f"triangle {int(np.flatnonzero(area2 == 0)[0])} has zero area")
        if len(np.unique(np.sort(T, axis=1), axis=0)) != len(T):
            raise ValueError("mesh contains duplicate triangles")
        flip = area2 < 0
        T[flip] = T[flip][:, [0, 2, 1]]
        V.flags.writeable = False
        T.flags.writeable = False
        self.vertices = V
        self.triangles = T

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def area(self) -> float:
        V, T = self.vertices, self.triangles
        return float(0.5 * _cross(V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]).sum())

    @classmethod
    def from_json(cls, text: str) -> "TriMesh":
        obj = json.loads(text)
        return cls(obj["vertices"], obj["triangles"])

    def to_json(self) -> str:
        return json.dumps({"vertices": self.vertices.tolist(), "triangles": self.triangles.tolist()})

    def __repr__(self):
        return f"TriMesh({self.n_vertices} vertices, {self.n_triangles} triangles)"


def _cross(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def lattice_to_mesh(x=None, y=None, *, loc=None, dims=None, mask=None):
    """Triangulate a regular lattice.

    The lattice is given either by axis coordinates ``x`` (length nx) and
    ``y`` (length ny), or by ``loc`` (nx*ny rows of coordinates) with
    ``dims = (nx, ny)``. Lattice node ``(i, j)`` has index ``i + nx * j``.
    Each cell is split along its ``(i, j)``--``(i+1, j+1)`` diagonal. Cells
    with any masked corner (``mask`` False) are dropped, and so are
    vertices no kept cell uses.

    Returns
    -------
    mesh : TriMesh
    node_map : ndarray
        Lattice index of each mesh vertex.
    """
    if loc is not None:
        if dims is None:
            raise ValueError("loc requires dims")
        nx, ny = (int(v) for v in dims)
        loc = np.asarray(loc, dtype=np.float64).reshape(-1, 2)
        if len(loc) != nx * ny:
            raise ValueError(f"loc has {len(loc)} rows, dims give {nx * ny}")
    else:
        if x is None or y is None:
            raise ValueError("give x and y, or loc and dims")
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        nx, ny = x.size, y.size
        X, Y = np.meshgrid(x, y)
        loc = np.column_stack([X.ravel(), Y.ravel()])
    if nx < 1 or ny < 1:
        raise ValueError("lattice dimensions must be positive")
    keep = np.ones(nx * ny, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).reshape(-1)
    if keep.size != nx * ny:
        raise ValueError(f"mask has {keep.size} entries, lattice has {nx * ny}")
    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1))
    v00 = (i + nx * j).ravel()
    v10, v01, v11 = v00 + 1, v00 + nx, v00 + nx + 1
    ok = keep[v00] & keep[v10] & keep[v01] & keep[v11]
    v00, v10, v01, v11 = v00[ok], v10[ok], v01[ok], v11[ok]
    tri = np.stack([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])], axis=1).reshape(-1, 3)
    node_map = np.unique(tri)
    local = np.full(nx * ny, -1, dtype=np.int64)
    local[node_map] = np.arange(node_map.size)
    return TriMesh(loc[node_map], local[tri]), node_map


# -- point location and interpolation -----------------------------------------


def locate(mesh: TriMesh, points, tol: float = 1e-12):
    """Containing triangle and barycentric weights for each query point.

    Points on a shared edge go to the lowest-numbered triangle. Points
    outside the mesh get triangle ``-1`` and NaN weights.
    """
    P = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    V, T = mesh.vertices, mesh.triangles
    n = len(P)
    tri = np.full(n, -1, dtype=np.int64)
    W = np.full((n, 3), np.nan)
    if not len(T) or not n:
        return tri, W
    xs = np.argsort(P[:, 0], kind="stable")
    px = P[xs, 0]
    A, B, C = V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]
    xmin = np.minimum(np.minimum(A[:, 0], B[:, 0]), C[:, 0])
    xmax = np.maximum(np.maximum(A[:, 0], B[:, 0]), C[:, 0])
    ymin = np.minimum(np.minimum(A[:, 1], B[:, 1]), C[:, 1])
    ymax = np.maximum(np.maximum(A[:, 1], B[:, 1]), C[:, 1])
    det = _cross(A, B, C)
    pad = tol * (1.0 + np.abs(V).max())
    lo = np.searchsorted(px, xmin - pad, side="left")
    hi = np.searchsorted(px, xmax + pad, side="right")
    for t in range(len(T)):
        if lo[t] == hi[t]:
            continue
        cand = xs[lo[t]:hi[t]]
        cand = cand[(tri[cand] < 0) & (P[cand, 1] >= ymin[t] - pad) & (P[cand, 1] <= ymax[t] + pad)]
        if not cand.size:
            continue
        q = P[cand]
        w1 = _cross(q, B[t], C[t]) / det[t]
        w2 = _cross(A[t], q, C[t]) / det[t]
        w3 = _cross(A[t], B[t], q) / det[t]
        inside = (w1 >= -tol) & (w2 >= -tol) & (w3 >= -tol)
        hit = cand[inside]
        tri[hit] = t
        W[hit] = np.column_stack([w1[inside], w2[inside], w3[inside]])
    return tri, W


def _log_clamped(F):
    return np.log(np.maximum(F, LOG_EPS))


def interpolate_F(F_nodes, mesh: TriMesh, points) -> np.ndarray:
    """Log-linear interpolation of nodal probabilities.

    Inside a triangle with corner values ``F_k`` and barycentric weights
    ``w_k`` the value is ``exp(sum_k w_k log F_k)``. Corners below
    ``1e-12`` (including 0 and NaN, read as 0) are clamped to ``1e-12``
    before taking logs. A query that coincides with a mesh vertex returns
    the nodal value itself. Points outside the mesh give NaN.
    """
    F = np.nan_to_num(np.asarray(F_nodes, dtype=np.float64).reshape(-1), nan=0.0)
    if F.size != mesh.n_vertices:
        raise ValueError(f"F has {F.size} values, mesh has {mesh.n_vertices} vertices")
    if np.any(F < 0) or np.any(F > 1):
        raise ValueError("F values must lie in [0, 1]")
    P = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    tri, W = locate(mesh, P)
    out = np.full(len(P), np.nan)
    ok = tri >= 0
    corners = mesh.triangles[tri[ok]]
    Fc = F[corners]
    L = _log_clamped(Fc)
    Lmax = L.max(axis=1, keepdims=True)
    # factor out the largest corner so a corner weight of 1 is exact
    val = np.exp(Lmax[:, 0] + np.sum(W[ok] * (L - Lmax), axis=1))
    val = np.clip(val, Fc.min(axis=1), Fc.max(axis=1))
    Vc = mesh.vertices[corners]
    same = np.all(Vc == P[ok][:, None, :], axis=2)
    hit = same.any(axis=1)
    val[hit] = Fc[hit, np.argmax(same[hit], axis=1)]
    out[ok] = val
    return out


def interpolate_linear(z_nodes, mesh: TriMesh, points) -> np.ndarray:
    z = np.asarray(z_nodes, dtype=np.float64).reshape(-1)
    tri, W = locate(mesh, points)
    out = np.full(len(tri), np.nan)
    ok = tri >= 0
    out[ok] = np.sum(W[ok] * z[mesh.triangles[tri[ok]]], axis=1)
    return out


# -- planar sets -------------------------------------------------------------


@dataclass
class Polygon:
    """Closed outer ring (counter-clockwise) with clockwise holes."""

    exterior: np.ndarray
    holes: list = field(default_factory=list)

    def area(self) -> float:
        return _ring_area(self.exterior) + sum(_ring_area(h) for h in self.holes)


@dataclass
class PlanarSets:
    """Polygons and polylines grouped by set label.

    ``levels`` maps a label to the contour level it belongs to, when there
    is one.
    """

    polygons: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)
    levels: dict = field(default_factory=dict)

    def area(self, label=None) -> float:
        labels = self.polygons if label is None else [label]
        return float(sum(p.area() for lab in labels for p in self.polygons.get(lab, [])))

    def is_empty(self) -> bool:
        return not any(self.polygons.values()) and not any(self.lines.values())

    def to_geojson(self) -> dict:
        feats = []
        for label, polys in self.polygons.items():
            for poly in polys:
                rings = [poly.exterior.tolist()] + [h.tolist() for h in poly.holes]
                feats.append(_feature("Polygon", rings, label, self.levels.get(label)))
        for label, lines in self.lines.items():
            for line in lines:
                feats.append(_feature("LineString", line.tolist(), label, self.levels.get(label)))
        return {"type": "FeatureCollection", "features": feats}


def _feature(kind, coords, label, level):
    return {
        "type": "Feature",
        "geometry": {"type": kind, "coordinates": coords},
        "properties": {"set": str(label), "level": None if level is None else float(level)},
    }


def _ring_area(ring) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1]))


# -- clipping ----------------------------------------------------------------


class _Pt:
    """Clip-polygon vertex: canonical key, position, constraint values, the
    mesh edges it lies on and the constraint lines through it."""

    __slots__ = ("key", "xy", "g", "edges", "lines")

    def __init__(self, key, xy, g, edges, lines=frozenset()):
        self.key = key
        self.xy = xy
        self.g = g
        self.edges = edges
        self.lines = lines


def _edge_point(mesh, G, a, b, j):
    """Canonical zero of constraint ``j`` on mesh edge ``(a, b)``."""
    a, b = (a, b) if a < b else (b, a)
    ga, gb = G[a, j], G[b, j]
    t = ga / (ga - gb)
    if t <= 0.0:
        return _vertex_point(mesh, G, a)
    if t >= 1.0:
        return _vertex_point(mesh, G, b)
    V = mesh.vertices
    return _Pt(("e", a, b, j), V[a] + t * (V[b] - V[a]), G[a] + t * (G[b] - G[a]),
               frozenset([(a, b)]), frozenset([j]))


def _vertex_point(mesh, G, a, tri=None):
    edges = frozenset() if tri is None else frozenset(
        (min(a, o), max(a, o)) for o in tri if o != a
    )
    return _Pt(("v", a), mesh.vertices[a], G[a], edges, frozenset(np.flatnonzero(G[a] == 0).tolist()))


def _clip(mesh, G, t, constraints):
    """Clip triangle ``t`` by ``g_j >= 0`` for each ``j`` in ``constraints``."""
    tri = [int(v) for v in mesh.triangles[t]]
    poly = [_vertex_point(mesh, G, v, tri) for v in tri]
    for j in constraints:
        out = []
        n = len(poly)
        for i in range(n):
            cur, nxt = poly[i], poly[(i + 1) % n]
            cin, nin = cur.g[j] >= 0, nxt.g[j] >= 0
            if cin:
                out.append(cur)
            if cin != nin:
                shared = cur.edges & nxt.edges
                if shared:
                    a, b = next(iter(shared))
                    x = _edge_point(mesh, G, a, b, j)
                    if x.key[0] == "v":
                        x.edges = frozenset(e for e in _tri_edges(tri) if x.key[1] in e)
                else:
                    s = cur.g[j] / (cur.g[j] - nxt.g[j])
                    common = cur.lines & nxt.lines
                    other = min(common) if common else -1
                    x = _Pt(("x", t) + tuple(sorted((j, other))), cur.xy + s * (nxt.xy - cur.xy),
                            cur.g + s * (nxt.g - cur.g), frozenset(), frozenset([j, other]))
                out.append(x)
        poly = out
        if len(poly) < 3:
            return []
    keys = [p.key for p in poly]
    dedup = [p for i, p in enumerate(poly) if keys[i] != keys[i - 1]] if len(poly) > 1 else poly
    if len({p.key for p in dedup}) < 3:
        return []
    return dedup


def _tri_edges(tri):
    a, b, c = tri
    return [(min(a, b), max(a, b)), (min(b, c), max(b, c)), (min(a, c), max(a, c))]


def _regions(mesh: TriMesh, G: np.ndarray, constraints: Sequence[int]) -> list:
    """Polygons of ``{g_j >= 0 for all j}`` under linear interpolation of G."""
    T = mesh.triangles
    cols = list(constraints)
    Gt = G[T][:, :, cols] if cols else np.zeros((len(T), 3, 0))
    inside = np.all(Gt >= 0, axis=(1, 2))
    outside = np.any(np.all(Gt < 0, axis=1), axis=1)
    edges = []
    xy = {}
    for t in np.flatnonzero(inside):
        tri = [int(v) for v in T[t]]
        for k in range(3):
            a, b = tri[k], tri[(k + 1) % 3]
            edges.append((("v", a), ("v", b)))
            xy[("v", a)] = mesh.vertices[a]
    for t in np.flatnonzero(~inside & ~outside):
        poly = _clip(mesh, G, int(t), cols)
        n = len(poly)
        for k in range(n):
            p, q = poly[k], poly[(k + 1) % n]
            edges.append((p.key, q.key))
            xy[p.key] = p.xy
    return _assemble(_cancel(edges), xy)


def _cancel(edges):
    count: dict = {}
    for e in edges:
        count[e] = count.get(e, 0) + 1
    out = []
    for (p, q), c in count.items():
        r = count.get((q, p), 0)
        if c > r:
            out.extend([(p, q)] * (c - r))
    return out


def _assemble(edges, xy) -> list:
    out_edges: dict = {}
    for p, q in edges:
        out_edges.setdefault(p, []).append(q)
    rings = []
    for start in list(out_edges):
        while out_edges.get(start):
            ring = [start]
            prev, cur = start, out_edges[start].pop(0)
            while cur != start:
                ring.append(cur)
                nxt = out_edges.get(cur)
                if not nxt:
                    break
                if len(nxt) == 1:
                    choice = 0
                else:
                    choice = _pick_cw(xy[prev], xy[cur], [xy[n] for n in nxt])
                prev, cur = cur, nxt.pop(choice)
            if len(ring) >= 3:
                pts = np.array([xy[k] for k in ring] + [xy[ring[0]]])
                if _ring_area(pts) != 0:
                    rings.append(pts)
    outers = [r for r in rings if _ring_area(r) > 0]
    holes = [r for r in rings if _ring_area(r) < 0]
    polys = [Polygon(r) for r in outers]
    areas = [_ring_area(r) for r in outers]
    for h in holes:
        best = None
        for i, r in enumerate(outers):
            if areas[i] > -_ring_area(h) and all(_in_ring(p, r) for p in h[:-1]):
                if best is None or areas[i] < areas[best]:
                    best = i
        if best is None:
            polys.append(Polygon(h[::-1].copy()))
        else:
            polys[best].holes.append(h)
    return polys


def _pick_cw(prev, cur, options) -> int:
    back = math.atan2(prev[1] - cur[1], prev[0] - cur[0])
    best, best_angle = 0, math.inf
    for i, o in enumerate(options):
        ang = (back - math.atan2(o[1] - cur[1], o[0] - cur[0])) % (2 * math.pi)
        if ang == 0:
            ang = 2 * math.pi
        if ang < best_angle:
            best, best_angle = i, ang
    return best


def _in_ring(p, ring) -> bool:
    """Point in closed ring, boundary counted as inside."""
    x, y = p
    inside = False
    for (x1, y1), (x2, y2) in zip(ring[:-1], ring[1:]):
        if min(x1, x2) <= x <= max(x1, x2) and min(y1, y2) <= y <= max(y1, y2):
            if (x2 - x1) * (y - y1) == (y2 - y1) * (x - x1):
                return True
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


# -- excursion sets on the continuous domain --------------------------------


@dataclass
class ContinuousResult:
    sets: PlanarSets
    mesh: TriMesh
    F: np.ndarray


def refine(mesh: TriMesh, F, levels: int = 1):
    """Split every triangle into four, filling midpoints with the
    log-linear interpolant (the clamped geometric mean of the two ends)."""
    V, T = mesh.vertices, mesh.triangles
    F = np.asarray(F, dtype=np.float64)
    for _ in range(levels):
        e = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
        e = np.sort(e, axis=1)
        uniq, inv = np.unique(e, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        mids = len(V) + inv.reshape(3, -1).T
        V = np.vstack([V, 0.5 * (V[uniq[:, 0]] + V[uniq[:, 1]])])
        Fm = np.exp(0.5 * (_log_clamped(F[uniq[:, 0]]) + _log_clamped(F[uniq[:, 1]])))
        Fm = np.where((F[uniq[:, 0]] == 0) & (F[uniq[:, 1]] == 0), 0.0, Fm)
        F = np.concatenate([F, Fm])
        a, b, c = T[:, 0], T[:, 1], T[:, 2]
        mab, mbc, mca = mids[:, 0], mids[:, 1], mids[:, 2]
        T = np.concatenate([
            np.column_stack([a, mab, mca]),
            np.column_stack([mab, b, mbc]),
            np.column_stack([mca, mbc, c]),
            np.column_stack([mab, mbc, mca]),
        ])
        mesh = TriMesh(V, T)
        V, T = mesh.vertices, mesh.triangles
    return mesh, F


def continuous(result, mesh: TriMesh, alpha: Optional[float] = None, node_map=None,
               refine_levels: int = 1) -> ContinuousResult:
    """Continuous excursion set ``{s : F(s) >= 1 - alpha}``.

    ``result`` is an excursion result; its ``F`` is taken at the mesh
    vertices (through ``node_map`` when the mesh came from a lattice).
    Not-computed nodes count as ``F = 0``. For the contour-avoidance kind
    the positive and negative groups are extracted separately, each with
    the other group's nodes set to 0; for the contour credibility kind the
    region is the mesh minus both avoidance regions.
    """
    alpha = result.spec.alpha if alpha is None else float(alpha)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    F = np.asarray(result.F, dtype=np.float64)
    idx = np.arange(F.size) if node_map is None else np.asarray(node_map)
    if idx.size != mesh.n_vertices or idx.max(initial=-1) >= F.size:
        raise ValueError(f"mesh has {mesh.n_vertices} vertices, result has {F.size} nodes")
    Fv = np.nan_to_num(F[idx], nan=0.0)
    kind = result.kind
    sign = None if result.sign is None else np.asarray(result.sign)[idx]
    log_target = math.log(1.0 - alpha)
    sets = PlanarSets()
    if kind in (">", "<"):
        G = (_log_clamped(Fv) - log_target)[:, None]
        sets.polygons[kind] = _regions(mesh, G, [0])
    else:
        # F of the credibility kind is 1 - avoidance probability
        Fa = 1.0 - Fv if kind == "=" else Fv
        if kind == "=":
            Fa = np.where(np.isnan(F[idx]), 0.0, Fa)
        cols = []
        for s in ("+", "-"):
            Fs = np.where(sign == s, Fa, 0.0)
            cols.append(_log_clamped(Fs) - log_target)
        G = np.column_stack(cols)
        if kind == "!=":
            sets.polygons["+"] = _regions(mesh, G, [0])
            sets.polygons["-"] = _regions(mesh, G, [1])
        else:
            sets.polygons["="] = _regions(mesh, -G, [0, 1])
    rmesh, rF = refine(mesh, Fv, refine_levels)
    return ContinuousResult(sets, rmesh, rF)


# -- contours of a linear field ---------------------------------------------


def _perturbed(z, level):
    span = float(z.max() - z.min())
    return np.where(z == level, z + PERTURB * (span if span > 0 else 1.0), z)


def tricontour(mesh: TriMesh, z, levels, mode: str = "curves") -> PlanarSets:
    """Contours of the linear interpolant of ``z``.

    ``mode='curves'`` returns polylines per level (labels are level
    indices); closed curves repeat their first point. ``mode='regions'``
    partitions the mesh into level sets ``0..K`` between consecutive
    levels; ``'both'`` returns both. Nodal values equal to a level are
    moved up by ``1e-12 * range(z)`` when deciding where the level
    crosses; crossing coordinates use the unperturbed values.
    """
    if mode not in ("curves", "regions", "both"):
        raise ValueError(f"unknown mode {mode!r}")
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.size != mesh.n_vertices:
        raise ValueError(f"z has {z.size} values, mesh has {mesh.n_vertices} vertices")
    if not np.all(np.isfinite(z)):
        raise ValueError("z must be finite")
    levels = np.atleast_1d(np.asarray(levels, dtype=np.float64))
    if np.any(np.diff(levels) <= 0):
        raise ValueError("levels must be strictly increasing")
    out = PlanarSets()
    if mode in ("curves", "both"):
        for k, u in enumerate(levels):
            out.lines[k] = _contour_lines(mesh, z, float(u))
            out.levels[k] = float(u)
    if mode in ("regions", "both"):
        cols = []
        for u in levels:
            zp = _perturbed(z, u)
            cols.append(zp - u)
        G = np.column_stack(cols + [-c for c in cols]) if cols else np.zeros((z.size, 0))
        K = levels.size
        for k in range(K + 1):
            cons = ([k - 1] if k > 0 else []) + ([K + k] if k < K else [])
            label = f"G{k}"
            out.polygons[label] = _regions(mesh, G, cons)
    return out


def _contour_lines(mesh: TriMesh, z, u):
    T, V = mesh.triangles, mesh.vertices
    above = _perturbed(z, u) > u
    cnt = above[T].sum(axis=1)
    segs = []
    xy = {}

    def crossing(a, b):
        a, b = (a, b) if a < b else (b, a)
        t = (u - z[a]) / (z[b] - z[a])
        t = min(max(t, 0.0), 1.0)
        if t == 0.0:
            key = ("v", a)
            p = V[a]
        elif t == 1.0:
            key = ("v", b)
            p = V[b]
        else:
            key = ("e", a, b)
            p = V[a] + t * (V[b] - V[a])
        xy[key] = p
        return key

    for t in np.flatnonzero((cnt == 1) | (cnt == 2)):
        tri = [int(v) for v in T[t]]
        ends = [crossing(tri[i], tri[(i + 1) % 3]) for i in range(3)
                if above[tri[i]] != above[tri[(i + 1) % 3]]]
        if ends[0] != ends[1]:
            segs.append((ends[0], ends[1]))
    return _chain(segs, xy)


def _chain(segs, xy):
    adj: dict = {}
    for i, (p, q) in enumerate(segs):
        adj.setdefault(p, []).append(i)
        adj.setdefault(q, []).append(i)
    used = np.zeros(len(segs), dtype=bool)

    def walk(start, first):
        path = [start]
        cur, i = start, first
        while True:
            used[i] = True
            p, q = segs[i]
            cur = q if p == cur else p
            path.append(cur)
            if cur == start:
                return path
            nxt = [j for j in adj[cur] if not used[j]]
            if not nxt:
                return path
            i = nxt[0]

    lines = []
    # open curves start at an endpoint of odd degree
    starts = [k for k, v in adj.items() if len(v) % 2 == 1] + list(adj)
    for s in starts:
        for i in adj[s]:
            if not used[i]:
                path = walk(s, i)
                lines.append(np.array([xy[k] for k in path]))
    return lines
