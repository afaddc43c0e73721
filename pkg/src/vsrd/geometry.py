"""Structured polar meshes for the volume and surface compartments.

Volume cells are exact annular sectors ``[r0, r1] x [t0, t1]``; the disk's
innermost ring spans ``[0, h]`` so its nodes sit at ``r = h/2`` and its inner
face (at the origin) carries no flux. Surfaces are circles (or an arc of the
outer circle) split into segments that coincide with the outer faces of the
adjacent ring of cells, so every segment has exactly one neighbouring cell.

Finite-volume nodes are the mid-radius / mid-angle points of each cell;
transmissibilities are face length over node distance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidGeometry, InvalidResolution, UnknownBoundary

KINDS = ("disk", "annulus", "interval")


@dataclass(frozen=True)
class GeometrySpec:
    kind: str = "disk"
    radii: tuple[float, ...] = (1.0,)
    gamma2_fraction: float = 0.25
    resolution: tuple[int, int] = (16, 32)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidGeometry(f"unknown geometry kind {self.kind!r}")
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        object.__setattr__(self, "resolution", tuple(int(n) for n in self.resolution))
        n_r, n_t = self.resolution
        if self.kind == "interval":
            if n_r < 4:
                raise InvalidResolution("interval needs at least 4 cells")
        elif n_r < 4 or n_t < 4:
            raise InvalidResolution(f"n_r, n_theta must be >= 4, got {self.resolution}")
        if self.kind == "annulus":
            if len(self.radii) != 2:
                raise InvalidGeometry("annulus needs radii (R_in, R_out)")
            r_in, r_out = self.radii
            if not 0 < r_in < r_out:
                raise InvalidGeometry(f"need 0 < R_in < R_out, got {self.radii}")
        else:
            if len(self.radii) != 1 or not self.radii[0] > 0:
                raise InvalidGeometry(f"{self.kind} needs a single positive size, got {self.radii}")
        if self.kind == "disk":
            if not 0 < self.gamma2_fraction < 1:
                raise InvalidGeometry("gamma2_fraction must lie in (0, 1)")
            n2 = round(self.gamma2_fraction * n_t)
            if not 1 <= n2 <= n_t - 1:
                raise InvalidResolution(f"n_theta={n_t} cannot resolve gamma2_fraction={self.gamma2_fraction}")

    def refined(self, level: int) -> "GeometrySpec":
        f = 2**level
        n_r, n_t = self.resolution
        return GeometrySpec(self.kind, self.radii, self.gamma2_fraction, (n_r * f, n_t * f))


@dataclass(frozen=True)
class Surface:
    """A boundary curve (or arc) split into segments."""

    label: str
    radius: float
    closed: bool
    theta: np.ndarray  # segment mid-angles
    lengths: np.ndarray
    adjacent_cell: np.ndarray  # volume cell sharing the segment
    edges: np.ndarray  # (m, 2) neighbouring segment pairs
    edge_trans: np.ndarray  # 1 / arc distance between midpoints
    parent_index: np.ndarray | None = None  # position inside the parent surface

    @property
    def n(self) -> int:
        return self.lengths.size

    @property
    def midpoints(self) -> np.ndarray:
        return self.radius * np.column_stack([np.cos(self.theta), np.sin(self.theta)])

    @property
    def coupling(self) -> np.ndarray:
        """Exchange measure between the segment and its adjacent cell."""
        return self.lengths

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())


@dataclass(frozen=True)
class CompartmentMesh:
    spec: GeometrySpec
    r: np.ndarray  # node radius per cell (x-coordinate for intervals)
    theta: np.ndarray
    areas: np.ndarray
    faces: np.ndarray  # (m, 2) neighbouring cell pairs
    face_trans: np.ndarray  # face length / node distance
    surfaces: dict[str, Surface] = field(default_factory=dict)
    arc_endpoints: tuple[int, int] | None = None

    @property
    def n_cells(self) -> int:
        return self.areas.size

    @property
    def kind(self) -> str:
        return self.spec.kind

    @property
    def centers(self) -> np.ndarray:
        if self.kind == "interval":
            return np.column_stack([self.r, np.zeros_like(self.r)])
        return np.column_stack([self.r * np.cos(self.theta), self.r * np.sin(self.theta)])

    @property
    def volume(self) -> float:
        return float(self.areas.sum())

    def surface(self, label: str) -> Surface:
        try:
            return self.surfaces[label]
        except KeyError:
            raise UnknownBoundary(f"mesh has no boundary {label!r}; available: {sorted(self.surfaces)}") from None

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "radii": list(self.spec.radii),
            "resolution": list(self.spec.resolution),
            "cells": {
                "centers": self.centers.tolist(),
                "areas": self.areas.tolist(),
            },
            "faces": {"pairs": self.faces.tolist(), "transmissibility": self.face_trans.tolist()},
            "surfaces": {},
        }
        for label, s in self.surfaces.items():
            out["surfaces"][label] = {
                "closed": s.closed,
                "midpoints": s.midpoints.tolist(),
                "lengths": s.lengths.tolist(),
                "adjacent_cell": s.adjacent_cell.tolist(),
            }
        if self.arc_endpoints is not None:
            out["arc_endpoints"] = list(self.arc_endpoints)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _polar(r_in: float, r_out: float, n_r: int, n_t: int):
    h = (r_out - r_in) / n_r
    dtheta = 2 * np.pi / n_t
    r_lo = r_in + h * np.arange(n_r)
    r_hi = r_lo + h
    r_mid = 0.5 * (r_lo + r_hi)
    theta = dtheta * (np.arange(n_t) + 0.5)
    cell = np.arange(n_r * n_t).reshape(n_r, n_t)  # cell[i, j]: ring i, sector j

    areas = np.repeat(0.5 * (r_hi**2 - r_lo**2) * dtheta, n_t)
    rr = np.repeat(r_mid, n_t)
    tt = np.tile(theta, n_r)

    # radial faces between rings i and i+1 at r_hi[i]
    radial = np.column_stack([cell[:-1].ravel(), cell[1:].ravel()])
    radial_t = np.repeat(r_hi[:-1] * dtheta / h, n_t)
    # angular faces between sectors j and j+1 (periodic)
    ang = np.column_stack([cell.ravel(), np.roll(cell, -1, axis=1).ravel()])
    ang_t = np.repeat(h / (r_mid * dtheta), n_t)

    faces = np.vstack([radial, ang])
    trans = np.concatenate([radial_t, ang_t])
    return rr, tt, areas, faces, trans, cell, theta, dtheta


def _circle(label, radius, theta, dtheta, adjacent, closed=True, index=None):
    n = theta.size
    lengths = np.full(n, radius * dtheta)
    if closed:
        edges = np.column_stack([np.arange(n), np.roll(np.arange(n), -1)])
    else:
        edges = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    trans = np.full(len(edges), 1.0 / (radius * dtheta))
    return Surface(label, radius, closed, theta, lengths, adjacent, edges, trans, index)


def build_mesh(spec: GeometrySpec) -> CompartmentMesh:
    """Build the mesh for a geometry spec.

    Disk: boundary circle ``gamma`` plus the arc ``gamma2`` made of the first
    ``round(gamma2_fraction * n_theta)`` segments. Annulus: outer circle
    ``cyt`` and inner circle ``nuc``. Interval: a 1D segment, no surfaces.
    """
    n_r, n_t = spec.resolution
    if spec.kind == "interval":
        (length,) = spec.radii
        h = length / n_r
        x = h * (np.arange(n_r) + 0.5)
        faces = np.column_stack([np.arange(n_r - 1), np.arange(1, n_r)])
        return CompartmentMesh(spec, x, np.zeros(n_r), np.full(n_r, h), faces, np.full(n_r - 1, 1.0 / h))

    if spec.kind == "disk":
        (radius,) = spec.radii
        rr, tt, areas, faces, trans, cell, theta, dtheta = _polar(0.0, radius, n_r, n_t)
        gamma = _circle("gamma", radius, theta, dtheta, cell[-1].copy())
        n2 = round(spec.gamma2_fraction * n_t)
        idx = np.arange(n2)
        gamma2 = _circle("gamma2", radius, theta[idx], dtheta, cell[-1][idx].copy(), closed=False, index=idx)
        return CompartmentMesh(
            spec, rr, tt, areas, faces, trans, {"gamma": gamma, "gamma2": gamma2}, arc_endpoints=(0, n2 - 1)
        )

    r_in, r_out = spec.radii
    rr, tt, areas, faces, trans, cell, theta, dtheta = _polar(r_in, r_out, n_r, n_t)
    cyt = _circle("cyt", r_out, theta, dtheta, cell[-1].copy())
    nuc = _circle("nuc", r_in, theta, dtheta, cell[0].copy())
    return CompartmentMesh(spec, rr, tt, areas, faces, trans, {"cyt": cyt, "nuc": nuc})


def graph_laplacian(n: int, pairs: np.ndarray, weights: np.ndarray) -> sp.csr_matrix:
    """Symmetric ``sum_e w_e (x_a - x_b)^2`` stiffness as ``-Laplacian`` (PSD)."""
    a, b = pairs[:, 0], pairs[:, 1]
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([b, a, a, b])
    vals = np.concatenate([-weights, -weights, weights, weights])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def surface_laplacian_stencil(mesh: CompartmentMesh, boundary_label: str, closed: bool | None = None) -> sp.csr_matrix:
    """Second difference in arc length on one boundary.

    Periodic on a full circle; on an open arc the missing neighbour flux at
    each end is dropped, which is the zero-flux condition.
    """
    s = mesh.surface(boundary_label)
    edges, trans = s.edges, s.edge_trans
    if closed is not None and closed != s.closed:
        if closed:
            raise UnknownBoundary(f"{boundary_label!r} is an open arc")
        keep = np.abs(edges[:, 0] - edges[:, 1]) == 1
        edges, trans = edges[keep], trans[keep]
    stiff = graph_laplacian(s.n, edges, trans)
    return sp.diags(1.0 / s.lengths) @ (-stiff)
