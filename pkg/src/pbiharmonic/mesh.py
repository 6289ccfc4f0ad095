"""Conforming triangulations of the unit square with facet connectivity."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

DIM = 2


class Facet(NamedTuple):
    vertices: tuple[int, int]
    owner: int
    neighbor: int | None
    normal: np.ndarray
    length: float
    boundary: bool


@dataclass(frozen=True, eq=False)
class Mesh:
    """Simplicial triangulation with skeleton topology.

    Facet arrays are stored flat for vectorised assembly:

    ``facet_vertices`` (nf, 2), ``facet_elements`` (nf, 2) with ``-1`` as the
    neighbour of a boundary facet, ``normals`` (nf, 2) pointing from the owner
    (smaller element index) towards the neighbour or out of the domain, and
    ``facet_lengths`` (nf,).
    """

    vertices: np.ndarray
    elements: np.ndarray
    facet_vertices: np.ndarray
    facet_elements: np.ndarray
    normals: np.ndarray
    facet_lengths: np.ndarray
    element_facets: np.ndarray
    element_diameters: np.ndarray
    inradii: np.ndarray
    areas: np.ndarray

    def __post_init__(self):
        for name in ("vertices", "elements", "facet_vertices", "facet_elements",
                     "normals", "facet_lengths", "element_facets",
                     "element_diameters", "inradii", "areas"):
            getattr(self, name).setflags(write=False)

    @classmethod
    def from_arrays(cls, vertices, elements) -> "Mesh":
        vertices = np.asarray(vertices, dtype=float).reshape(-1, DIM)
        elements = np.asarray(elements, dtype=np.int64).reshape(-1, 3).copy()
        if len(elements) == 0:
            raise ValueError("mesh needs at least one element")

        # orient counterclockwise
        a, b, c = (vertices[elements[:, i]] for i in range(3))
        det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        if np.any(np.abs(det) < 1e-300):
            raise ValueError("degenerate element")
        flip = det < 0
        elements[flip, 1], elements[flip, 2] = elements[flip, 2], elements[flip, 1]
        areas = 0.5 * np.abs(det)

        edges: dict[tuple[int, int], list[int]] = {}
        element_facets = np.empty((len(elements), 3), dtype=np.int64)
        # local edge i is opposite local vertex i
        local = ((1, 2), (2, 0), (0, 1))
        order: list[tuple[int, int]] = []
        for K, tri in enumerate(elements):
            for i, (s, t) in enumerate(local):
                key = tuple(sorted((int(tri[s]), int(tri[t]))))
                if key not in edges:
                    edges[key] = []
                    order.append(key)
                owners = edges[key]
                if len(owners) == 2:
                    raise ValueError(f"edge {key} shared by more than two elements")
                owners.append(K)

        nf = len(order)
        facet_vertices = np.array(order, dtype=np.int64).reshape(nf, 2)
        facet_elements = np.full((nf, 2), -1, dtype=np.int64)
        index = {key: i for i, key in enumerate(order)}
        for key, owners in edges.items():
            facet_elements[index[key], :len(owners)] = sorted(owners)
        for K, tri in enumerate(elements):
            for i, (s, t) in enumerate(local):
                element_facets[K, i] = index[tuple(sorted((int(tri[s]), int(tri[t]))))]

        p0 = vertices[facet_vertices[:, 0]]
        p1 = vertices[facet_vertices[:, 1]]
        tangent = p1 - p0
        lengths = np.hypot(tangent[:, 0], tangent[:, 1])
        normals = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1) / lengths[:, None]
        centroids = vertices[elements].mean(axis=1)
        away = 0.5 * (p0 + p1) - centroids[facet_elements[:, 0]]
        normals[np.einsum("ij,ij->i", away, normals) < 0] *= -1

        edge_len = lengths[element_facets]
        diameters = edge_len.max(axis=1)
        inradii = 2.0 * areas / edge_len.sum(axis=1)

        return cls(vertices, elements, facet_vertices, facet_elements, normals,
                   lengths, element_facets, diameters, inradii, areas)

    @property
    def num_elements(self) -> int:
        return len(self.elements)

    @property
    def num_facets(self) -> int:
        return len(self.facet_vertices)

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.facet_elements[:, 1] < 0

    @property
    def meshsize(self) -> float:
        return float(self.element_diameters.max())

    def facet(self, i: int) -> Facet:
        K1, K2 = (int(x) for x in self.facet_elements[i])
        return Facet(
            vertices=(int(self.facet_vertices[i, 0]), int(self.facet_vertices[i, 1])),
            owner=K1,
            neighbor=None if K2 < 0 else K2,
            normal=self.normals[i].copy(),
            length=float(self.facet_lengths[i]),
            boundary=K2 < 0,
        )

    @property
    def facets(self) -> list[Facet]:
        return [self.facet(i) for i in range(self.num_facets)]


def build_structured(n: int) -> Mesh:
    """Uniform ``n x n`` grid of the unit square, each cell cut along the
    ``(i, j) -> (i+1, j+1)`` diagonal."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    a = (i + j * (n + 1)).ravel()
    b = a + 1
    c = a + n + 2
    d = a + n + 1
    lower = np.stack([a, b, c], axis=1)
    upper = np.stack([a, c, d], axis=1)
    elements = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return Mesh.from_arrays(vertices, elements)


def skeleton(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Indices of interior and boundary facets (each ascending)."""
    bnd = mesh.boundary_mask
    return np.flatnonzero(~bnd), np.flatnonzero(bnd)


def shape_regularity(mesh: Mesh) -> float:
    """min over elements of inradius / diameter."""
    return float(np.min(mesh.inradii / mesh.element_diameters))


def write_vtk(mesh: Mesh, path, cell_data: dict[str, np.ndarray] | None = None) -> None:
    """Dump the mesh as a legacy ASCII VTK unstructured grid."""
    nv, ne = len(mesh.vertices), mesh.num_elements
    lines = ["# vtk DataFile Version 3.0", "pbiharmonic mesh", "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {nv} double"]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in mesh.vertices]
    lines.append(f"CELLS {ne} {4 * ne}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.elements]
    lines.append(f"CELL_TYPES {ne}")
    lines += ["5"] * ne
    if cell_data:
        lines.append(f"CELL_DATA {ne}")
        for name, values in cell_data.items():
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [f"{v:.17g}" for v in np.asarray(values, dtype=float)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
