"""Polygonal meshes of planar domains.

A :class:`Mesh` stores vertices, faces (edges) and cells given as
counter-clockwise face lists, together with the geometric quantities the
discretisations need: face measures, midpoints and normals, cell areas,
centroids and diameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    """Base class for mesh construction failures."""


class MeshParseError(MeshError):
    pass


class MeshGeometryError(MeshError):
    pass


SQUARE = (-0.5, 0.5, -0.5, 0.5)


def _polygon_area_centroid(pts):
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area == 0.0:
        return 0.0, pts.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return area, np.array([cx, cy])


@dataclass(eq=False)
class Mesh:
    """Conforming polygonal mesh.

    Parameters
    ----------
    vertices : (NV, 2) array
    faces : (NF, 2) int array of vertex indices
    cell_faces : list of int arrays, faces of each cell in counter-clockwise order
    face_boundary : (NF,) bool array, ``True`` for faces on the domain boundary

    Everything else is derived and validated on construction.
    """

    vertices: np.ndarray
    faces: np.ndarray
    cell_faces: list
    face_boundary: np.ndarray

    cell_vertices: list = field(init=False, repr=False)
    face_cells: np.ndarray = field(init=False, repr=False)
    face_measure: np.ndarray = field(init=False, repr=False)
    face_center: np.ndarray = field(init=False, repr=False)
    face_normal: np.ndarray = field(init=False, repr=False)
    cell_face_sign: list = field(init=False, repr=False)
    cell_area: np.ndarray = field(init=False, repr=False)
    cell_center: np.ndarray = field(init=False, repr=False)
    cell_diameter: np.ndarray = field(init=False, repr=False)
    vertex_boundary: np.ndarray = field(init=False, repr=False)
    h: float = field(init=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        self.cell_faces = [np.asarray(cf, dtype=np.int64) for cf in self.cell_faces]
        self.face_boundary = np.asarray(self.face_boundary, dtype=bool)
        nv, nf = len(self.vertices), len(self.faces)
        if self.faces.ndim != 2 or self.faces.shape[1] != 2:
            raise MeshParseError("faces must be an (NF, 2) array")
        if len(self.face_boundary) != nf:
            raise MeshParseError("one boundary flag per face is required")
        if nf and (self.faces.min() < 0 or self.faces.max() >= nv):
            raise MeshParseError("face references a missing vertex")
        for cf in self.cell_faces:
            if len(cf) < 3 or cf.min() < 0 or cf.max() >= nf:
                raise MeshParseError("cell references a missing face or has fewer than 3 faces")
        self._build_geometry()
        self.vertices.setflags(write=False)
        self.faces.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_cells(self) -> int:
        return len(self.cell_faces)

    def _build_geometry(self):
        V, F = self.vertices, self.faces
        nf = len(F)
        tangent = V[F[:, 1]] - V[F[:, 0]]
        self.face_measure = np.hypot(tangent[:, 0], tangent[:, 1])
        if np.any(self.face_measure <= 0):
            raise MeshGeometryError("zero-length face")
        self.face_center = 0.5 * (V[F[:, 0]] + V[F[:, 1]])
        # fixed orientation: tangent rotated clockwise
        self.face_normal = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / self.face_measure[:, None]

        face_cells = np.full((nf, 2), -1, dtype=np.int64)
        count = np.zeros(nf, dtype=np.int64)
        self.cell_vertices, self.cell_face_sign = [], []
        areas, centers, diams = [], [], []
        for k, cf in enumerate(self.cell_faces):
            cycle, signs = self._walk_cycle(k, cf)
            pts = V[cycle]
            area, centroid = _polygon_area_centroid(pts)
            if area <= 0:
                raise MeshGeometryError(f"cell {k} has nonpositive measure {area:g}")
            for fi in cf:
                if count[fi] >= 2:
                    raise MeshGeometryError(f"face {fi} is shared by more than two cells")
                face_cells[fi, count[fi]] = k
                count[fi] += 1
            d = pts[:, None, :] - pts[None, :, :]
            diams.append(math.sqrt((d**2).sum(axis=2).max()))
            areas.append(area)
            centers.append(centroid)
            self.cell_vertices.append(cycle)
            self.cell_face_sign.append(signs)

        bad = np.flatnonzero((count == 1) != self.face_boundary)
        if len(bad):
            raise MeshGeometryError(
                f"face {bad[0]} has {count[bad[0]]} incident cells but boundary flag {self.face_boundary[bad[0]]}"
            )
        if np.any(count == 0):
            raise MeshGeometryError("face not attached to any cell")
        self.face_cells = face_cells
        self.cell_area = np.array(areas)
        self.cell_center = np.array(centers).reshape(-1, 2)
        self.cell_diameter = np.array(diams)
        self.h = float(self.cell_diameter.max())
        vb = np.zeros(len(V), dtype=bool)
        vb[F[self.face_boundary].ravel()] = True
        self.vertex_boundary = vb

    def _walk_cycle(self, k, cf):
        """Vertex cycle of cell ``k`` and the sign making each face normal outward."""
        F = self.faces
        first = F[cf[0]]
        second = F[cf[1]]
        if first[1] in second:
            start = first[0]
        elif first[0] in second:
            start = first[1]
        else:
            raise MeshGeometryError(f"cell {k}: consecutive faces do not share a vertex")
        cycle, signs = [], []
        cur = start
        for fi in cf:
            a, b = F[fi]
            if a == cur:
                signs.append(1.0)
                nxt = b
            elif b == cur:
                signs.append(-1.0)
                nxt = a
            else:
                raise MeshGeometryError(f"cell {k}: face list is not a closed chain")
            cycle.append(cur)
            cur = nxt
        if cur != start:
            raise MeshGeometryError(f"cell {k}: face list is not a closed chain")
        # walking a->b counter-clockwise, the clockwise-rotated tangent points outward
        return np.array(cycle, dtype=np.int64), np.array(signs)

    def outward_normals(self, k):
        """Unit outward normals n_{K,sigma} of the faces of cell ``k``."""
        return self.face_normal[self.cell_faces[k]] * self.cell_face_sign[k][:, None]

    def is_triangular(self) -> bool:
        return all(len(cf) == 3 for cf in self.cell_faces)

    # -- I/O ------------------------------------------------------------

    def save(self, path):
        """Write the mesh in the line-oriented text format read by :func:`load_mesh`."""
        lines = [f"{self.n_vertices} {self.n_faces} {self.n_cells}"]
        lines += [f"{x!r} {y!r}" for x, y in self.vertices.tolist()]
        lines += [f"{a} {b} {int(fb)}" for (a, b), fb in zip(self.faces.tolist(), self.face_boundary)]
        lines += [" ".join(map(str, [len(cf), *cf.tolist()])) for cf in self.cell_faces]
        Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path) -> Mesh:
    """Read a mesh file.

    Format: ``NV NF NC`` on the first line, then NV lines ``x y``, NF lines
    ``v0 v1 bflag`` and NC lines ``k f0 ... f(k-1)``. Indices are 0-based and
    ``#`` starts a comment.
    """
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    try:
        nv, nf, nc = (int(t) for t in rows[0])
        if len(rows) != 1 + nv + nf + nc:
            raise MeshParseError(f"expected {1 + nv + nf + nc} data lines, found {len(rows)}")
        verts = np.array([[float(t) for t in r] for r in rows[1 : 1 + nv]]).reshape(nv, 2)
        frows = rows[1 + nv : 1 + nv + nf]
        if any(len(r) != 3 for r in frows):
            raise MeshParseError("face lines must read 'v0 v1 bflag'")
        faces = np.array([[int(r[0]), int(r[1])] for r in frows], dtype=np.int64).reshape(nf, 2)
        flags = np.array([int(r[2]) != 0 for r in frows], dtype=bool)
        cells = []
        for r in rows[1 + nv + nf :]:
            k = int(r[0])
            if len(r) != k + 1:
                raise MeshParseError(f"cell line announces {k} faces but lists {len(r) - 1}")
            cells.append([int(t) for t in r[1:]])
    except MeshParseError:
        raise
    except (ValueError, IndexError) as exc:
        raise MeshParseError(f"malformed mesh file {path}: {exc}") from exc
    return Mesh(verts, faces, cells, flags)


def mesh_from_polygons(vertices, polygons) -> Mesh:
    """Build a mesh from counter-clockwise vertex cycles, creating faces and boundary flags."""
    vertices = np.asarray(vertices, dtype=float)
    face_index = {}
    faces, cell_faces = [], []
    for poly in polygons:
        cf = []
        for a, b in zip(poly, list(poly[1:]) + [poly[0]]):
            key = (min(a, b), max(a, b))
            if key not in face_index:
                face_index[key] = len(faces)
                faces.append((a, b))
            cf.append(face_index[key])
        cell_faces.append(cf)
    count = np.zeros(len(faces), dtype=int)
    for cf in cell_faces:
        count[cf] += 1
    return Mesh(vertices, np.array(faces, dtype=np.int64).reshape(-1, 2), cell_faces, count == 1)


def generate_triangular(n: int) -> Mesh:
    """Uniform ``n x n`` grid of (-0.5, 0.5)^2, each square cut along its diagonal."""
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.linspace(-0.5, 0.5, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    tris = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append([a, b, c])
            tris.append([a, c, d])
    mesh = mesh_from_polygons(verts, tris)
    # the diagonal length, free of coordinate rounding so that h(2n) = h(n) / 2 exactly
    mesh.h = math.sqrt(2.0) / n
    return mesh


def _clip_to_box(poly, box=SQUARE):
    """Sutherland-Hodgman clipping of a convex polygon against an axis-aligned box."""
    xmin, xmax, ymin, ymax = box
    planes = [(0, xmin, 1.0), (0, xmax, -1.0), (1, ymin, 1.0), (1, ymax, -1.0)]
    pts = [tuple(p) for p in poly]
    for axis, val, sgn in planes:
        if not pts:
            break
        out = []
        for i, cur in enumerate(pts):
            prev = pts[i - 1]
            cin = sgn * (cur[axis] - val) >= -1e-14
            pin = sgn * (prev[axis] - val) >= -1e-14
            if cin != pin:
                t = (val - prev[axis]) / (cur[axis] - prev[axis])
                q = [prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]
                q[axis] = val
                out.append(tuple(q))
            if cin:
                c = list(cur)
                if abs(c[axis] - val) < 1e-14:
                    c[axis] = val
                out.append(tuple(c))
        pts = out
    return pts


def hexagon_tiling(n: int):
    """Centres and vertex offsets of the pointy-top hexagon tiling used by :func:`generate_polygonal`.

    Even rows hold ``n`` hexagons whose side edges lie on x = +-0.5; odd rows are
    shifted by half a hexagon and cut in two by the vertical sides of the square.
    The first and last rows are centred on y = -0.5 and y = 0.5.
    """
    width = 1.0 / n
    radius = width / math.sqrt(3.0)
    rows = max(1, round(1.0 / (1.5 * radius)))
    dy = 1.0 / rows
    stretch = dy / (1.5 * radius)
    centers = []
    for j in range(rows + 1):
        y = -0.5 + j * dy
        if j % 2 == 0:
            xs = -0.5 + (np.arange(n) + 0.5) * width
        else:
            xs = -0.5 + np.arange(n + 1) * width
        centers += [(x, y) for x in xs]
    ang = np.deg2rad(30.0 + 60.0 * np.arange(6))
    offsets = np.column_stack([width / 2 / math.cos(math.pi / 6) * np.cos(ang), stretch * radius * np.sin(ang)])
    # exact half-width on the vertical sides
    offsets[:, 0] = np.round(offsets[:, 0] / (width / 2)) * (width / 2)
    return np.array(centers), offsets


def generate_polygonal(n: int) -> Mesh:
    """Hexagonal mesh of (-0.5, 0.5)^2 with ``n`` hexagons per even row, clipped at the boundary."""
    if n < 1:
        raise ValueError("n must be >= 1")
    centers, offsets = hexagon_tiling(n)
    scale = 1.0 / n
    key_of = {}
    verts, polys = [], []

    def vkey(p):
        return (round(p[0] / scale * 1e9), round(p[1] / scale * 1e9))

    for c in centers:
        pts = _clip_to_box(c + offsets)
        if len(pts) < 3:
            continue
        area, _ = _polygon_area_centroid(np.array(pts))
        if area < 1e-12 * scale**2:
            continue
        ids = []
        for p in pts:
            key = vkey(p)
            if key not in key_of:
                key_of[key] = len(verts)
                verts.append(p)
            if not ids or ids[-1] != key_of[key]:
                ids.append(key_of[key])
        if ids[0] == ids[-1]:
            ids.pop()
        polys.append(ids)
    return mesh_from_polygons(np.array(verts), polys)


def parse_mesh_spec(spec: str) -> Mesh:
    """Build a mesh from ``tri:n``, ``hex:n`` or ``file:path``."""
    kind, _, arg = spec.partition(":")
    if kind == "tri":
        return generate_triangular(int(arg))
    if kind == "hex":
        return generate_polygonal(int(arg))
    if kind == "file":
        return load_mesh(arg)
    raise ValueError(f"unknown mesh spec {spec!r}")
