"""Manufactured-solution study for the potential solver."""
import numpy as np

from uavsearch.fields import HedacParams, PotentialSolver, ScalarField
from uavsearch.synthetic import rectangle_mesh

# symmetric 6-point rule, exact for quadratics on each triangle
_BARY = np.array([
    [0.816847572980459, 0.091576213509771, 0.091576213509771],
    [0.091576213509771, 0.816847572980459, 0.091576213509771],
    [0.091576213509771, 0.091576213509771, 0.816847572980459],
    [0.108103018168070, 0.445948490915965, 0.445948490915965],
    [0.445948490915965, 0.108103018168070, 0.445948490915965],
    [0.445948490915965, 0.445948490915965, 0.108103018168070],
])
_W = np.array([0.109951743655322] * 3 + [0.223381589678011] * 3)


def l2_error(mesh, uh, exact):
    q = np.einsum("qk,tkd->tqd", _BARY, mesh.xy[mesh.triangles])
    vals = np.einsum("qk,tk->tq", _BARY, uh[mesh.triangles])
    err = (vals - exact(q[..., 0], q[..., 1])) ** 2
    return float(np.sqrt(np.sum(mesh.areas[:, None] * err * _W[None])))


def convergence_study(levels=(10, 20, 40, 80), lx=1000.0, ly=800.0, alpha=1000.0, beta=0.1):
    """L2 errors and observed orders for u* = cos(pi x/lx) cos(pi y/ly) (zero normal flux)."""
    k2 = np.pi**2 * (1 / lx**2 + 1 / ly**2)

    def exact(x, y):
        return np.cos(np.pi * x / lx) * np.cos(np.pi * y / ly)

    errs = []
    for n in levels:
        mesh = rectangle_mesh(n, n, lx, ly)
        m = ScalarField(mesh, (beta + alpha * k2) * exact(*mesh.xy.T))
        uh = PotentialSolver(mesh, HedacParams(alpha, beta)).solve(m).values
        errs.append(l2_error(mesh, uh, exact))
    errs = np.array(errs)
    return errs, np.log2(errs[:-1] / errs[1:])
