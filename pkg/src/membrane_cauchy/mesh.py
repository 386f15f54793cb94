"""Triangle meshes: OBJ export and cotangent-Laplacian mean curvature."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Mesh", "patch_mesh"]


@dataclass
class Mesh:
    vertices: np.ndarray
    faces: np.ndarray
    attributes: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def face_normals(self):
        V, F = self.vertices, self.faces
        n = np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def vertex_normals(self):
        V, F = self.vertices, self.faces
        n = np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])
        out = np.zeros_like(V)
        for k in range(3):
            np.add.at(out, F[:, k], n)
        return out / np.linalg.norm(out, axis=1, keepdims=True)

    def mean_curvature(self):
        """Discrete mean curvature ``H = <Delta X, n> / 2`` with the cotangent Laplacian.

        ``Delta X`` uses barycentric vertex areas; with this sign convention
        a sphere with outward normals has ``H = -1/R``.  Boundary vertices get
        NaN.
        """
        V, F = self.vertices, self.faces
        lap = np.zeros_like(V)
        area = np.zeros(len(V))
        for k in range(3):
            i, j, l = F[:, k], F[:, (k + 1) % 3], F[:, (k + 2) % 3]
            u, w = V[j] - V[i], V[l] - V[i]
            cot = np.sum(u * w, axis=1) / np.linalg.norm(np.cross(u, w), axis=1)
            # the angle at i weights the opposite edge (j, l)
            e = V[l] - V[j]
            np.add.at(lap, j, 0.5 * cot[:, None] * e)
            np.add.at(lap, l, -0.5 * cot[:, None] * e)
        tri_area = 0.5 * np.linalg.norm(np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]]), axis=1)
        for k in range(3):
            np.add.at(area, F[:, k], tri_area / 3.0)
        lap /= area[:, None]
        H = 0.5 * np.sum(lap * self.vertex_normals(), axis=1)
        H[self.boundary_vertices()] = np.nan
        return H

    def boundary_vertices(self):
        F = self.faces
        edges = np.sort(np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]]), axis=1)
        uniq, counts = np.unique(edges, axis=0, return_counts=True)
        return np.unique(uniq[counts == 1])

    def to_obj(self, path, precision=12):
        names = sorted(self.attributes)
        with open(path, "w") as fh:
            fh.write("# triangulated surface\n")
            for k, v in sorted(self.meta.items()):
                fh.write(f"# meta {k} {v}\n")
            if names:
                fh.write("# vertex attributes follow each vertex as '# vattr " + " ".join(names) + "'\n")
            for i, (x, y, z) in enumerate(self.vertices):
                fh.write(f"v {x:.{precision}g} {y:.{precision}g} {z:.{precision}g}\n")
                if names:
                    vals = " ".join(f"{float(self.attributes[n][i]):.{precision}g}" for n in names)
                    fh.write(f"# vattr {vals}\n")
            for a, b, c in self.faces + 1:
                fh.write(f"f {a} {b} {c}\n")

    @classmethod
    def from_obj(cls, path):
        verts, faces, attrs, names = [], [], [], []
        with open(path) as fh:
            for line in fh:
                if line.startswith("v "):
                    verts.append([float(t) for t in line.split()[1:4]])
                elif line.startswith("f "):
                    faces.append([int(t.split("/")[0]) - 1 for t in line.split()[1:4]])
                elif line.startswith("# vattr"):
                    parts = line.split()[2:]
                    if names:
                        attrs.append([float(t) for t in parts])
                elif line.startswith("# vertex attributes"):
                    names = line.split("'# vattr ")[1].rstrip("'\n").split()
        A = np.array(attrs) if attrs else np.zeros((len(verts), 0))
        return cls(np.array(verts), np.array(faces, int), {n: A[:, k] for k, n in enumerate(names)})


def patch_mesh(P, periodic=False, attributes=None):
    """Mesh of a gridded surface ``P[j, i]`` (rows j, samples i)."""
    ny, nx = P.shape[:2]
    V = P.reshape(-1, 3)
    faces = []
    cols = nx if periodic else nx - 1
    for j in range(ny - 1):
        for i in range(cols):
            a, b = j * nx + i, j * nx + (i + 1) % nx
            c, d = a + nx, b + nx
            faces.append((a, b, d))
            faces.append((a, d, c))
    attrs = {k: np.asarray(v).reshape(-1) for k, v in (attributes or {}).items()}
    return Mesh(V, np.array(faces, int).reshape(-1, 3), attrs)
