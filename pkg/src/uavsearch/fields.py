"""Nodal probability/coverage fields and the HEDAC potential solve.

Linear (P1) finite elements on the terrain mesh.  The potential ``u``
satisfies ``alpha * lap(u) = beta * u - m`` with zero normal derivative on
every boundary, including no-fly holes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .terrain import DomainError, TerrainMesh


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass(eq=False)
class ScalarField:
    mesh: TerrainMesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_nodes,):
            raise ValueError(f"field has {self.values.size} values for {self.mesh.n_nodes} nodes")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    def integral(self) -> float:
        return integrate(self.mesh, self.values)


@dataclass(frozen=True)
class HedacParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigError(f"HEDAC parameters must be positive (alpha={self.alpha}, beta={self.beta})")


def assemble(mesh: TerrainMesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Stiffness and consistent mass matrices of the P1 space."""
    t = mesh.triangles
    area = mesh.areas
    G = mesh.shape_gradients  # (M, 3, 2)
    Ke = area[:, None, None] * np.einsum("tid,tjd->tij", G, G)
    Me = area[:, None, None] / 12.0 * (np.ones((3, 3)) + np.eye(3))[None]
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_nodes
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def node_weights(mesh: TerrainMesh) -> np.ndarray:
    """Quadrature weights with ``w @ f`` the exact integral of the P1 interpolant."""
    w = np.zeros(mesh.n_nodes)
    np.add.at(w, mesh.triangles.ravel(), np.repeat(mesh.areas / 3.0, 3))
    return w


def integrate(mesh: TerrainMesh, values: np.ndarray) -> float:
    return float(node_weights(mesh) @ values)


class PotentialSolver:
    """Factorise ``alpha K + beta M`` once; each solve is a back-substitution."""

    def __init__(self, mesh: TerrainMesh, params: HedacParams):
        self.mesh = mesh
        self.params = params
        K, self.M = assemble(mesh)
        A = (params.alpha * K + params.beta * self.M).tocsc()
        try:
            self._lu = splu(A)
        except RuntimeError as exc:
            raise ArithmeticError(f"HEDAC system is singular: {exc}") from exc

    def solve(self, m: ScalarField) -> ScalarField:
        return ScalarField(self.mesh, self._lu.solve(self.M @ m.values))


def solve_potential(m: ScalarField, params: HedacParams) -> ScalarField:
    return PotentialSolver(m.mesh, params).solve(m)


def init_probability(desc: dict, mesh: TerrainMesh, base_dir=None) -> ScalarField:
    """Normalised initial target probability m0.

    ``desc["kind"]`` is ``"uniform"``, ``"gaussian_mixture"`` (with
    ``components``: list of ``{center, sigma, weight}``) or ``"file"`` (nodal
    CSV with ``node_id`` and ``value`` columns, ``path`` relative to
    ``base_dir``).
    """
    kind = desc.get("kind")
    xy = mesh.xy
    if kind == "uniform":
        vals = np.ones(mesh.n_nodes)
    elif kind == "gaussian_mixture":
        comps = desc.get("components") or []
        if not comps:
            raise ConfigError("gaussian_mixture needs at least one component")
        vals = np.zeros(mesh.n_nodes)
        for c in comps:
            sigma = float(c["sigma"])
            weight = float(c.get("weight", 1.0))
            if sigma <= 0 or weight < 0:
                raise ConfigError("gaussian components need sigma > 0 and weight >= 0")
            d2 = np.sum((xy - np.asarray(c["center"], dtype=float)) ** 2, axis=1)
            vals += weight * np.exp(-0.5 * d2 / sigma**2)
    elif kind == "file":
        path = Path(desc["path"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        vals = np.full(mesh.n_nodes, np.nan)
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                vals[int(row["node_id"])] = float(row["value"])
        if np.isnan(vals).any():
            raise ConfigError(f"{path}: missing values for {int(np.isnan(vals).sum())} nodes")
    else:
        raise ConfigError(f"unknown initial distribution kind {kind!r}")
    if np.any(vals < 0):
        raise ConfigError("initial probability must be nonnegative")
    total = integrate(mesh, vals)
    if not total > 1e-12:
        raise ConfigError(f"initial probability has negligible mass on the domain ({total:.3g})")
    return ScalarField(mesh, vals / total)


def accumulate_coverage(c: ScalarField, psi_nodal, dt: float) -> ScalarField:
    """``c + dt * psi`` where ``psi_nodal`` is ``(indices, rates)`` or a dense array.

    Repeated indices (several UAVs seeing one node) are summed.
    """
    out = c.values.copy()
    if isinstance(psi_nodal, tuple):
        idx, rates = psi_nodal
        rates = np.asarray(rates, dtype=float)
        if np.any(rates < 0):
            raise AssertionError("negative detection rate")
        np.add.at(out, np.asarray(idx, dtype=np.int64), dt * rates)
    else:
        rates = np.asarray(psi_nodal, dtype=float)
        if np.any(rates < 0):
            raise AssertionError("negative detection rate")
        out += dt * rates
    return ScalarField(c.mesh, out)


def undetected_probability(m0: ScalarField, c: ScalarField) -> ScalarField:
    return ScalarField(m0.mesh, m0.values * np.exp(-c.values))


def survey_accomplishment(m: ScalarField) -> float:
    return 1.0 - m.integral()


def gradient_direction(u: ScalarField, p, fallback=(1.0, 0.0), tol: float = 1e-14) -> np.ndarray:
    """Unit gradient of ``u`` at ``p``; ``fallback`` when the gradient vanishes."""
    mesh = u.mesh
    tri, _ = mesh.locate(np.asarray(p, dtype=float).reshape(1, 2))
    if tri[0] < 0:
        raise DomainError(f"point {tuple(np.asarray(p).ravel())} lies outside the search domain")
    g = np.einsum("kd,k->d", mesh.shape_gradients[tri[0]], u.values[mesh.triangles[tri[0]]])
    n = np.hypot(g[0], g[1])
    if n < tol:
        return np.asarray(fallback, dtype=float)
    return g / n


def write_field_csv(field: ScalarField, path) -> None:
    mesh = field.mesh
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "x", "y", "value"])
        for k, ((x, y), v) in enumerate(zip(mesh.xy.tolist(), field.values.tolist())):
            w.writerow([k, repr(x), repr(y), repr(v)])
