"""Structured triangulations of rectangles with tagged boundary edges."""
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .errors import InvalidGeometryError, InvalidTaggingError, ValidationError


class Tag(IntEnum):
    MacroDirichlet = 0
    GammaR = 1
    GammaN = 2


@dataclass(frozen=True, eq=False)
class Mesh2D:
    """Conforming triangulation; arrays are treated as read-only.

    vertices : (nv, 2) float
    triangles : (nt, 3) int, counter-clockwise
    boundary_edges : (nb, 2) int
    tags : (nb,) int, values of :class:`Tag`
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    tags: np.ndarray

    def __post_init__(self):
        for name in ("vertices", "triangles", "boundary_edges", "tags"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def is_micro(self):
        return bool(np.any(self.tags != Tag.MacroDirichlet))

    def areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edges(self):
        """Unique undirected edges as a sorted (ne, 2) array."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def tagged_edges(self, tag):
        return self.boundary_edges[self.tags == int(tag)]

    def boundary_vertices(self, tag=None):
        edges = self.boundary_edges if tag is None else self.tagged_edges(tag)
        return np.unique(edges.ravel())

    def quality(self):
        """max side length over min inscribed-circle diameter."""
        p = self.vertices[self.triangles]
        sides = np.stack(
            [
                np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
                np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
                np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
            ],
            axis=1,
        )
        inradius = self.areas() / (0.5 * sides.sum(axis=1))
        return sides.max() / (2.0 * inradius.min())

    def check(self):
        """Raise on violated structural invariants; return self."""
        problems = []
        if np.any(self.areas() <= 0.0):
            problems.append("triangle with non-positive signed area")
        t = self.triangles
        e = np.sort(np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        if np.any(counts > 2):
            problems.append("edge shared by more than two triangles")
        on_bnd = {tuple(x) for x in uniq[counts == 1]}
        listed = {tuple(x) for x in np.sort(self.boundary_edges, axis=1)}
        if on_bnd != listed:
            problems.append("boundary edge list does not match single-triangle edges")
        if problems:
            raise InvalidGeometryError(problems)
        return self


def make_rect_mesh(lower_left, upper_right, nx, ny):
    """Uniform grid of ``2*nx*ny`` right triangles on a rectangle.

    Every cell is split along its (i, j)-(i+1, j+1) diagonal. Boundary edges
    are listed bottom, right, top, left and tagged ``MacroDirichlet``.
    """
    x0, y0 = map(float, lower_left)
    x1, y1 = map(float, upper_right)
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise InvalidGeometryError(f"nx, ny must be positive integers, got {nx}, {ny}")
    if not (x1 > x0 and y1 > y0):
        raise InvalidGeometryError(
            f"degenerate rectangle {tuple(lower_left)} -> {tuple(upper_right)}"
        )
    nx, ny = int(nx), int(ny)
    xs = x0 + (x1 - x0) * np.arange(nx + 1) / nx
    ys = y0 + (y1 - y0) * np.arange(ny + 1) / ny
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i + j * (nx + 1)

    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    I, J = I.ravel(), J.ravel()
    v00, v10, v11, v01 = vid(I, J), vid(I + 1, J), vid(I + 1, J + 1), vid(I, J + 1)
    tris = np.empty((2 * len(I), 3), dtype=np.int64)
    tris[0::2] = np.column_stack([v00, v10, v11])
    tris[1::2] = np.column_stack([v00, v11, v01])

    i = np.arange(nx)
    j = np.arange(ny)
    bottom = np.column_stack([vid(i, 0), vid(i + 1, 0)])
    right = np.column_stack([vid(nx, j), vid(nx, j + 1)])
    top = np.column_stack([vid(i[::-1] + 1, ny), vid(i[::-1], ny)])
    left = np.column_stack([vid(0, j[::-1] + 1), vid(0, j[::-1])])
    edges = np.vstack([bottom, right, top, left]).astype(np.int64)
    tags = np.full(len(edges), int(Tag.MacroDirichlet), dtype=np.int64)
    return Mesh2D(vertices, tris, edges, tags)


def tag_boundary(mesh, classifier):
    """Retag boundary edges by ``classifier(midpoints) -> tags``.

    ``classifier`` receives the (nb, 2) array of edge midpoints and returns
    one tag per edge (a :class:`Tag` or its integer value). A result mixing
    macro and micro tags, or a micro tagging without any ``GammaR`` edge, is
    rejected.
    """
    mid = 0.5 * (mesh.vertices[mesh.boundary_edges[:, 0]] + mesh.vertices[mesh.boundary_edges[:, 1]])
    raw = classifier(mid)
    try:
        tags = np.array([int(Tag(int(t))) for t in np.asarray(raw).ravel()], dtype=np.int64)
    except ValueError as exc:
        raise InvalidTaggingError(f"classifier returned an unknown tag: {exc}") from None
    if len(tags) != len(mid):
        raise InvalidTaggingError(
            f"classifier returned {len(tags)} tags for {len(mid)} boundary edges"
        )
    macro = tags == Tag.MacroDirichlet
    if macro.any() and not macro.all():
        raise InvalidTaggingError("mixed macro and micro tags on one mesh")
    if not macro.any() and not np.any(tags == Tag.GammaR):
        raise InvalidTaggingError("micro mesh needs at least one GammaR edge (zero-measure Gamma_R)")
    return replace(mesh, tags=tags)


def refine_uniform(mesh):
    """Split every triangle into four through its edge midpoints."""
    nv = mesh.n_vertices
    edges = mesh.edges()
    key = edges[:, 0] * nv + edges[:, 1]
    order = np.argsort(key)
    key_sorted = key[order]

    def mid_index(a, b):
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        pos = np.searchsorted(key_sorted, lo * nv + hi)
        return nv + order[pos]

    mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    vertices = np.vstack([mesh.vertices, mids])
    t = mesh.triangles
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    ab, bc, ca = mid_index(a, b), mid_index(b, c), mid_index(c, a)
    tris = np.empty((4 * len(t), 3), dtype=np.int64)
    tris[0::4] = np.column_stack([a, ab, ca])
    tris[1::4] = np.column_stack([ab, b, bc])
    tris[2::4] = np.column_stack([ca, bc, c])
    tris[3::4] = np.column_stack([ab, bc, ca])

    p, q = mesh.boundary_edges[:, 0], mesh.boundary_edges[:, 1]
    m = mid_index(p, q)
    bnd = np.empty((2 * len(p), 2), dtype=np.int64)
    bnd[0::2] = np.column_stack([p, m])
    bnd[1::2] = np.column_stack([m, q])
    tags = np.repeat(mesh.tags, 2)
    return Mesh2D(vertices, tris, bnd, tags)


def mesh_size(mesh):
    """Longest triangle side."""
    e = mesh.edges()
    return float(np.max(np.linalg.norm(mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]], axis=1)))


def permute_vertices(mesh, perm):
    """Renumber vertices: new vertex ``i`` is old vertex ``perm[i]``."""
    perm = np.asarray(perm, dtype=np.int64)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    return Mesh2D(mesh.vertices[perm], inv[mesh.triangles], inv[mesh.boundary_edges], mesh.tags.copy())


# named Gamma_R classifiers for micro cells; each takes midpoints and the cell box
def _side_masks(mid, lower, upper):
    tol = 1e-12 * max(1.0, float(np.max(np.abs(upper))))
    return {
        "bottom": np.abs(mid[:, 1] - lower[1]) < tol,
        "top": np.abs(mid[:, 1] - upper[1]) < tol,
        "left": np.abs(mid[:, 0] - lower[0]) < tol,
        "right": np.abs(mid[:, 0] - upper[0]) < tol,
    }


def gamma_classifier(name, lower, upper):
    """Classifier for a named preset: top_edge, left_edge, full_boundary_minus_bottom."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    reactive = {
        "top_edge": ("top",),
        "left_edge": ("left",),
        "full_boundary_minus_bottom": ("top", "left", "right"),
    }
    if name not in reactive:
        raise ValidationError(f"unknown Gamma_R preset {name!r}; choose from {sorted(reactive)}")

    def classify(mid):
        masks = _side_masks(mid, lower, upper)
        is_r = np.zeros(len(mid), dtype=bool)
        for side in reactive[name]:
            is_r |= masks[side]
        return np.where(is_r, int(Tag.GammaR), int(Tag.GammaN))

    return classify


def dump_mesh(mesh, fh):
    """Write the plain-text mesh format (v/t/b lines, 0-based indices)."""
    for x, y in mesh.vertices:
        fh.write(f"v {float(x)!r} {float(y)!r}\n")
    for i, j, k in mesh.triangles:
        fh.write(f"t {i} {j} {k}\n")
    for (i, j), tag in zip(mesh.boundary_edges, mesh.tags):
        fh.write(f"b {i} {j} {Tag(int(tag)).name}\n")


def load_mesh(fh):
    verts, tris, bnd, tags = [], [], [], []
    for lineno, line in enumerate(fh, 1):
        parts = line.split()
        if not parts:
            continue
        kind = parts[0]
        try:
            if kind == "v":
                verts.append((float(parts[1]), float(parts[2])))
            elif kind == "t":
                tris.append(tuple(int(p) for p in parts[1:4]))
            elif kind == "b":
                bnd.append((int(parts[1]), int(parts[2])))
                tags.append(int(Tag[parts[3]]))
            else:
                raise ValueError(kind)
        except (ValueError, IndexError, KeyError):
            raise ValidationError(f"mesh dump line {lineno}: cannot parse {line.strip()!r}") from None
    return Mesh2D(
        np.array(verts, dtype=float).reshape(-1, 2),
        np.array(tris, dtype=np.int64).reshape(-1, 3),
        np.array(bnd, dtype=np.int64).reshape(-1, 2),
        np.array(tags, dtype=np.int64),
    )
