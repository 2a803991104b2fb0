"""Structured triangulations of disks, sectors, annuli and squares.

Polar domains are built ring by ring; consecutive rings are stitched by
walking both node lists in angular order.  Sectors carry Dirichlet flags only
on the arc: the straight sides play the role of the interior of a cone and
get natural (Neumann) conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Disk:
    R: float = 1.0

    @property
    def area(self):
        return math.pi * self.R**2


@dataclass(frozen=True)
class Sector:
    R: float = 1.0
    theta: float = math.pi / 2

    @property
    def area(self):
        return 0.5 * self.theta * self.R**2


@dataclass(frozen=True)
class Square:
    L: float = 1.0

    @property
    def area(self):
        return self.L**2


@dataclass(frozen=True)
class Annulus:
    r: float = 0.5
    R: float = 1.0

    @property
    def area(self):
        return math.pi * (self.R**2 - self.r**2)


@dataclass(frozen=True, eq=False)
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    dirichlet: np.ndarray
    cell_areas: np.ndarray = field(init=False)
    shape_gradients: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        tri = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 2 or tri.ndim != 2 or tri.shape[1] != 3:
            raise ValueError("expected (n, 2) vertices and (m, 3) triangles")
        if tri.size and (tri.min() < 0 or tri.max() >= len(v)):
            raise ValueError("triangle index out of range")
        e1 = v[tri[:, 1]] - v[tri[:, 0]]
        e2 = v[tri[:, 2]] - v[tri[:, 0]]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        flip = det < 0
        if np.any(flip):
            tri = tri.copy()
            tri[flip, 1], tri[flip, 2] = tri[flip, 2].copy(), tri[flip, 1].copy()
            det = np.abs(det)
        span = np.ptp(v, axis=0).max() if len(v) else 1.0
        if np.any(0.5 * det <= 1e-14 * span**2):
            raise ValueError("degenerate triangle in mesh")
        # gradients of the three barycentric hat functions on every triangle
        x = v[tri]
        grads = np.empty((len(tri), 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            d = x[:, k] - x[:, j]
            grads[:, i, 0] = -d[:, 1] / det
            grads[:, i, 1] = d[:, 0] / det
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", tri)
        object.__setattr__(self, "dirichlet", np.asarray(self.dirichlet, dtype=bool))
        object.__setattr__(self, "cell_areas", 0.5 * det)
        object.__setattr__(self, "shape_gradients", grads)

    @property
    def area(self) -> float:
        return math.fsum(self.cell_areas.tolist())

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def edges(self) -> np.ndarray:
        e = np.concatenate([self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def max_edge(self) -> float:
        e = self.edges()
        return float(np.max(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)))

    def boundary_vertices(self) -> np.ndarray:
        e = np.sort(np.concatenate([self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]]), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        mask = np.zeros(len(self.vertices), dtype=bool)
        mask[uniq[counts == 1].ravel()] = True
        return mask

    def lumped_mass(self) -> np.ndarray:
        m = np.zeros(len(self.vertices))
        np.add.at(m, self.triangles.ravel(), np.repeat(self.cell_areas / 3.0, 3))
        return m


def _stitch(inner, inner_ang, outer, outer_ang, closed):
    """Triangulate the strip between two rings given in angular order."""
    if closed:
        inner = list(inner) + [inner[0]]
        outer = list(outer) + [outer[0]]
        inner_ang = list(inner_ang) + [inner_ang[0] + 2 * math.pi]
        outer_ang = list(outer_ang) + [outer_ang[0] + 2 * math.pi]
    tris = []
    i = j = 0
    ni, no = len(inner) - 1, len(outer) - 1
    while i < ni or j < no:
        if i == ni or (j < no and outer_ang[j + 1] <= inner_ang[i + 1]):
            tris.append((inner[i], outer[j], outer[j + 1]))
            j += 1
        else:
            tris.append((inner[i], outer[j], inner[i + 1]))
            i += 1
    return tris


def _polar(R: float, theta: float, target_h: float, r_in: float = 0.0):
    full = math.isclose(theta, 2 * math.pi)
    # stitched diagonals reach ~sqrt(3) dr; 1.2 keeps every edge under 1.5 target_h
    n_rad = max(1, math.ceil(1.2 * (R - r_in) / target_h - 1e-9))
    radii = r_in + (R - r_in) * np.arange(n_rad + 1) / n_rad
    verts = []
    rings = []
    for k, r in enumerate(radii):
        if r == 0.0:
            rings.append(([len(verts)], [0.0]))
            verts.append((0.0, 0.0))
            continue
        if r_in == 0.0:
            segs = max(1, math.ceil(k * theta / (math.pi / 3) - 1e-9))
        else:
            segs = max(3 if not full else 6, math.ceil(r * theta / target_h - 1e-9))
        if full:
            ang = 2 * math.pi * np.arange(segs) / segs
        else:
            ang = theta * np.arange(segs + 1) / segs
        idx = list(range(len(verts), len(verts) + len(ang)))
        verts.extend(zip((r * np.cos(ang)).tolist(), (r * np.sin(ang)).tolist()))
        rings.append((idx, ang.tolist()))
    tris = []
    for (a, aa), (b, bb) in zip(rings[:-1], rings[1:]):
        if len(a) == 1:
            # fan around the centre
            ring = b + [b[0]] if full else b
            tris.extend((a[0], ring[m], ring[m + 1]) for m in range(len(ring) - 1))
        else:
            tris.extend(_stitch(a, aa, b, bb, full))
    return np.array(verts), np.array(tris), rings


def generate_mesh(domain, target_h: float) -> TriMesh:
    """Quasi-uniform triangulation of a generator domain."""
    if not target_h > 0:
        raise ValueError("target_h must be positive")
    if isinstance(domain, Disk):
        if not domain.R > 0 or target_h > domain.R:
            raise ValueError("infeasible disk mesh: need 0 < target_h <= R")
        v, t, rings = _polar(domain.R, 2 * math.pi, target_h)
        bc = np.zeros(len(v), dtype=bool)
        bc[rings[-1][0]] = True
    elif isinstance(domain, Sector):
        if not domain.R > 0 or not 0 < domain.theta <= 2 * math.pi or target_h > domain.R:
            raise ValueError("infeasible sector mesh: need R > 0, 0 < theta <= 2 pi, target_h <= R")
        if math.isclose(domain.theta, 2 * math.pi):
            return generate_mesh(Disk(domain.R), target_h)
        v, t, rings = _polar(domain.R, domain.theta, target_h)
        bc = np.zeros(len(v), dtype=bool)
        bc[rings[-1][0]] = True
    elif isinstance(domain, Annulus):
        if not 0 < domain.r < domain.R or target_h > domain.R - domain.r:
            raise ValueError("infeasible annulus mesh: need 0 < r < R and target_h <= R - r")
        v, t, rings = _polar(domain.R, 2 * math.pi, target_h, r_in=domain.r)
        bc = np.zeros(len(v), dtype=bool)
        bc[rings[0][0]] = True
        bc[rings[-1][0]] = True
    elif isinstance(domain, Square):
        if not domain.L > 0 or target_h > domain.L:
            raise ValueError("infeasible square mesh: need 0 < target_h <= L")
        n = math.ceil(domain.L / target_h - 1e-9)
        n += n % 2  # keep the centre on a node
        x = domain.L * np.arange(n + 1) / n
        X, Y = np.meshgrid(x, x, indexing="xy")
        v = np.column_stack([X.ravel(), Y.ravel()])
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
        a = (j * (n + 1) + i).ravel()
        b, c, d = a + 1, a + n + 2, a + n + 1
        t = np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
        bc = (np.isclose(v[:, 0], 0) | np.isclose(v[:, 0], domain.L)
              | np.isclose(v[:, 1], 0) | np.isclose(v[:, 1], domain.L))
        # exact corner coordinates
        v[np.isclose(v, domain.L)] = domain.L
    else:
        raise TypeError(f"unsupported domain {domain!r}")
    return TriMesh(v, t, bc)


def read_off(path) -> TriMesh:
    """Read an OFF-style triangle mesh; every boundary vertex is Dirichlet."""
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.append(line.split())
    if tokens and tokens[0][0].upper() == "OFF":
        tokens[0] = tokens[0][1:]
        if not tokens[0]:
            tokens.pop(0)
    nv, nt = int(tokens[0][0]), int(tokens[0][1])
    verts = np.array([[float(a) for a in row[:2]] for row in tokens[1:1 + nv]])
    tris = []
    for row in tokens[1 + nv:1 + nv + nt]:
        ids = [int(a) for a in row]
        if len(ids) == 4:
            if ids[0] != 3:
                raise ValueError("only triangular faces are supported")
            ids = ids[1:]
        tris.append(ids)
    if len(verts) != nv or len(tris) != nt:
        raise ValueError("OFF file is truncated")
    mesh = TriMesh(verts, np.array(tris), np.zeros(nv, dtype=bool))
    return TriMesh(mesh.vertices, mesh.triangles, mesh.boundary_vertices())


def write_off(mesh: TriMesh, path) -> None:
    lines = ["OFF", f"{mesh.n_vertices} {len(mesh.triangles)} 0"]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in mesh.vertices.tolist()]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")
