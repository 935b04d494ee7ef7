"""1-D Galerkin finite elements with quadratic Lagrange elements on [0, 1].

Two nonlinear problems are discretized, both with homogeneous Dirichlet
conditions (boundary unknowns eliminated, so N = 2 * n_elems - 1):

* ``bratu``: ``gamma u'' + lam exp(gamma u) = 0``, weak residual
  ``R_i = int(gamma u' phi_i' - lam exp(gamma u) phi_i)``.
* ``manufactured``: ``u^2 - u'' = r(x, lam)`` where ``r`` is generated from
  ``u_ex = zeta lam^eta (1 - lam^eta) (1 - x) x``.

Element loops have a numba kernel and a vectorized numpy twin; which one runs
is decided by ``PATHTRACE_NUMBA`` (see :mod:`pathtrace._accel`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import njit
from .errors import ConfigError, EvaluationError
from .problems import Problem

# 3-point Gauss-Legendre rule mapped to [0, 1]; exact to degree 5
_GP = np.array([0.5 - 0.5 * math.sqrt(0.6), 0.5, 0.5 + 0.5 * math.sqrt(0.6)])
_GW = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])

# shape functions and reference derivatives at the Gauss points, shape (3 qp, 3 nodes)
_PHI = np.stack([2.0 * (_GP - 0.5) * (_GP - 1.0), 4.0 * _GP * (1.0 - _GP), 2.0 * _GP * (_GP - 0.5)], axis=1)
_DPHI = np.stack([4.0 * _GP - 3.0, 4.0 - 8.0 * _GP, 4.0 * _GP - 1.0], axis=1)

EXP_LIMIT = 700.0


@dataclass(frozen=True)
class Mesh1D:
    nodes: np.ndarray
    n_elems: int

    @classmethod
    def uniform(cls, n_elems: int = 20) -> "Mesh1D":
        if n_elems < 1:
            raise ConfigError("n_elems must be a positive integer")
        return cls(np.linspace(0.0, 1.0, 2 * n_elems + 1), int(n_elems))

    @classmethod
    def from_vertices(cls, vertices) -> "Mesh1D":
        """Quadratic mesh from element end points; mid nodes sit at midpoints."""
        vertices = np.asarray(vertices, dtype=float)
        n = vertices.size - 1
        nodes = np.empty(2 * n + 1)
        nodes[0::2] = vertices
        nodes[1::2] = 0.5 * (vertices[:-1] + vertices[1:])
        mesh = cls(nodes, n)
        mesh.check()
        return mesh

    def check(self):
        x = self.nodes
        bad = []
        if x.size != 2 * self.n_elems + 1:
            bad.append("node count must be 2*n_elems + 1")
        if x.size and (x[0] != 0.0 or x[-1] != 1.0):
            bad.append("mesh must span [0, 1]")
        if np.any(np.diff(x) <= 0):
            bad.append("nodes must be strictly increasing")
        if bad:
            raise ConfigError(bad)

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_elems - 1

    @property
    def interior_nodes(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def h_max(self) -> float:
        return float(np.max(self.nodes[2::2] - self.nodes[:-2:2]))

    def midpoint_index(self) -> int:
        """Interior-DOF index of the node closest to x = 0.5."""
        return int(np.argmin(np.abs(self.interior_nodes - 0.5)))


@dataclass(frozen=True)
class FemProblemSpec:
    kind: str = "bratu_modified"
    gamma: float = 100.0
    zeta: float = 20.0
    eta: float = 50.0
    alpha: int = 2
    quad_order: int = 3

    def violations(self) -> list[str]:
        out = []
        if self.kind not in ("bratu_modified", "manufactured"):
            out.append(f"unknown FEM problem kind {self.kind!r}")
        if not self.gamma > 0:
            out.append("gamma must be > 0")
        if not self.eta >= 1:
            out.append("eta must be >= 1")
        if self.alpha != 2:
            out.append("only alpha = 2 is supported")
        if self.quad_order != 3:
            out.append("only 3-point Gauss quadrature is implemented")
        return out


# ---------------------------------------------------------------------------
# element kernels: loop versions (numba) ...

@njit(cache=True)
def _bratu_loop(nodes, U, lam, gamma, phi, dphi, gw):
    nn = nodes.size
    R = np.zeros(nn)
    Ju = np.zeros((nn, nn))
    Jl = np.zeros(nn)
    n_el = (nn - 1) // 2
    for e in range(n_el):
        i0 = 2 * e
        he = nodes[i0 + 2] - nodes[i0]
        for q in range(gw.size):
            uq = 0.0
            duq = 0.0
            for a in range(3):
                uq += phi[q, a] * U[i0 + a]
                duq += dphi[q, a] * U[i0 + a]
            duq /= he
            ex = math.exp(gamma * uq)
            wq = gw[q] * he
            for a in range(3):
                da = dphi[q, a] / he
                R[i0 + a] += wq * (gamma * duq * da - lam * ex * phi[q, a])
                Jl[i0 + a] -= wq * ex * phi[q, a]
                for b in range(3):
                    Ju[i0 + a, i0 + b] += wq * (gamma * da * dphi[q, b] / he
                                                - lam * gamma * ex * phi[q, a] * phi[q, b])
    return R, Ju, Jl


@njit(cache=True)
def _manufactured_loop(nodes, U, src, dsrc, phi, dphi, gw):
    # src/dsrc: r and dr/dlam at every (element, quadrature point)
    nn = nodes.size
    R = np.zeros(nn)
    Ju = np.zeros((nn, nn))
    Jl = np.zeros(nn)
    n_el = (nn - 1) // 2
    for e in range(n_el):
        i0 = 2 * e
        he = nodes[i0 + 2] - nodes[i0]
        for q in range(gw.size):
            uq = 0.0
            duq = 0.0
            for a in range(3):
                uq += phi[q, a] * U[i0 + a]
                duq += dphi[q, a] * U[i0 + a]
            duq /= he
            wq = gw[q] * he
            for a in range(3):
                da = dphi[q, a] / he
                R[i0 + a] += wq * (uq * uq * phi[q, a] + duq * da - src[e, q] * phi[q, a])
                Jl[i0 + a] -= wq * dsrc[e, q] * phi[q, a]
                for b in range(3):
                    Ju[i0 + a, i0 + b] += wq * (2.0 * uq * phi[q, b] * phi[q, a]
                                                + da * dphi[q, b] / he)
    return R, Ju, Jl


# ... and vectorized numpy versions

def _scatter(nodes, Rloc, Jloc, Lloc):
    nn = nodes.size
    n_el = (nn - 1) // 2
    idx = 2 * np.arange(n_el)[:, None] + np.arange(3)[None, :]
    R = np.zeros(nn)
    Jl = np.zeros(nn)
    Ju = np.zeros((nn, nn))
    # elements only overlap at shared end nodes: add even and odd elements separately
    for start in (0, 1):
        sel = idx[start::2]
        R[sel] += Rloc[start::2]
        Jl[sel] += Lloc[start::2]
        Ju[sel[:, :, None], sel[:, None, :]] += Jloc[start::2]
    return R, Ju, Jl


def _element_fields(nodes, U, phi, dphi):
    nn = nodes.size
    n_el = (nn - 1) // 2
    idx = 2 * np.arange(n_el)[:, None] + np.arange(3)[None, :]
    he = nodes[2::2] - nodes[:-2:2]
    Ue = U[idx]                                   # (e, a)
    uq = Ue @ phi.T                               # (e, q)
    duq = (Ue @ dphi.T) / he[:, None]
    return he, uq, duq


def _bratu_vec(nodes, U, lam, gamma, phi, dphi, gw):
    he, uq, duq = _element_fields(nodes, U, phi, dphi)
    ex = np.exp(gamma * uq)
    wq = gw[None, :] * he[:, None]                # (e, q)
    dx = dphi[None, :, :] / he[:, None, None]     # (e, q, a)
    Rloc = np.einsum("eq,eqa->ea", wq * gamma * duq, dx) - lam * np.einsum("eq,qa->ea", wq * ex, phi)
    Lloc = -np.einsum("eq,qa->ea", wq * ex, phi)
    Jloc = (gamma * np.einsum("eq,eqa,eqb->eab", wq, dx, dx)
            - lam * gamma * np.einsum("eq,qa,qb->eab", wq * ex, phi, phi))
    return _scatter(nodes, Rloc, Jloc, Lloc)


def _manufactured_vec(nodes, U, src, dsrc, phi, dphi, gw):
    he, uq, duq = _element_fields(nodes, U, phi, dphi)
    wq = gw[None, :] * he[:, None]
    dx = dphi[None, :, :] / he[:, None, None]
    Rloc = (np.einsum("eq,qa->ea", wq * (uq * uq - src), phi)
            + np.einsum("eq,eqa->ea", wq * duq, dx))
    Lloc = -np.einsum("eq,qa->ea", wq * dsrc, phi)
    Jloc = (np.einsum("eq,qa,qb->eab", 2.0 * wq * uq, phi, phi)
            + np.einsum("eq,eqa,eqb->eab", wq, dx, dx))
    return _scatter(nodes, Rloc, Jloc, Lloc)


def _select(use_numba):
    if use_numba is None:
        use_numba = _accel.NUMBA_ENABLED
    if use_numba:
        return _bratu_loop, _manufactured_loop
    return _bratu_vec, _manufactured_vec


def _full(mesh: Mesh1D, u) -> np.ndarray:
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != mesh.n_dofs:
        raise ValueError(f"expected {mesh.n_dofs} interior values, got {u.size}")
    U = np.zeros(mesh.nodes.size)
    U[1:-1] = u
    return U


def _reduce(R, Ju, Jl):
    jac = np.empty((R.size - 2, R.size - 1))
    jac[:, :-1] = Ju[1:-1, 1:-1]
    jac[:, -1] = Jl[1:-1]
    return R[1:-1].copy(), jac


def assemble_bratu(spec: FemProblemSpec, mesh: Mesh1D, u, lam: float, use_numba=None):
    """Residual and ``[R_u | R_lam]`` of the modified Bratu problem."""
    U = _full(mesh, u)
    if np.any(spec.gamma * U > EXP_LIMIT):
        raise EvaluationError("exp(gamma u) overflows")
    kernel, _ = _select(use_numba)
    R, Ju, Jl = kernel(mesh.nodes, U, float(lam), float(spec.gamma), _PHI, _DPHI, _GW)
    return _reduce(R, Ju, Jl)


def _lam_pow(lam: float, eta: float) -> float:
    if lam < 0 and not float(eta).is_integer():
        raise EvaluationError(f"lam**eta undefined for lam={lam} < 0 and non-integer eta={eta}")
    try:
        return lam**eta
    except OverflowError as err:
        raise EvaluationError(str(err)) from err


def _exact_factor(spec: FemProblemSpec, lam: float):
    """Amplitude g = zeta lam^eta (1 - lam^eta) and dg/dlam."""
    eta = spec.eta
    p = _lam_pow(lam, eta)
    g = spec.zeta * p * (1.0 - p)
    dp = eta * _lam_pow(lam, eta - 1.0)
    dg = spec.zeta * dp * (1.0 - 2.0 * p)
    return g, dg


def _quad_points(mesh: Mesh1D) -> np.ndarray:
    x0 = mesh.nodes[:-2:2]
    he = mesh.nodes[2::2] - x0
    return x0[:, None] + he[:, None] * _GP[None, :]


def source_term(spec: FemProblemSpec, x, lam: float):
    """``r = u_ex^2 - u_ex''`` and ``dr/dlam`` at points ``x``."""
    g, dg = _exact_factor(spec, lam)
    s = x * (1.0 - x)
    r = (g * s) ** 2 + 2.0 * g
    dr = 2.0 * g * dg * s * s + 2.0 * dg
    return r, dr


def assemble_manufactured(spec: FemProblemSpec, mesh: Mesh1D, u, lam: float, use_numba=None):
    """Residual and ``[R_u | R_lam]`` of the manufactured-solution problem."""
    U = _full(mesh, u)
    src, dsrc = source_term(spec, _quad_points(mesh), float(lam))
    if not (np.all(np.isfinite(src)) and np.all(np.isfinite(dsrc))):
        raise EvaluationError(f"source term not finite at lam={lam}")
    _, kernel = _select(use_numba)
    R, Ju, Jl = kernel(mesh.nodes, U, src, dsrc, _PHI, _DPHI, _GW)
    return _reduce(R, Ju, Jl)


def exact_solution(spec: FemProblemSpec, x, lam: float):
    g, _ = _exact_factor(spec, lam)
    x = np.asarray(x, dtype=float)
    return g * (1.0 - x) * x


def interpolate_exact(spec: FemProblemSpec, mesh: Mesh1D, lam: float) -> np.ndarray:
    """Nodal interpolant of the manufactured solution at the interior nodes."""
    if lam < 0:
        raise EvaluationError("interpolate_exact requires lam >= 0")
    return exact_solution(spec, mesh.interior_nodes, lam)


def load_vector(mesh: Mesh1D) -> np.ndarray:
    """``int(phi_i)`` for every interior basis function."""
    he = mesh.nodes[2::2] - mesh.nodes[:-2:2]
    loc = he[:, None] * (_GW @ _PHI)[None, :]
    b = np.zeros(mesh.nodes.size)
    for a in range(3):
        np.add.at(b, 2 * np.arange(mesh.n_elems) + a, loc[:, a])
    return b[1:-1]


class FemProblem(Problem):
    """A :class:`Problem` backed by one of the FEM assemblers."""

    def __init__(self, spec: FemProblemSpec, mesh: Mesh1D, use_numba=None):
        bad = spec.violations()
        if bad:
            raise ConfigError(bad)
        mesh.check()
        self.spec = spec
        self.mesh = mesh
        self.dim_u = mesh.n_dofs
        self.use_numba = use_numba
        self.label = "bratu" if spec.kind == "bratu_modified" else "manufactured"
        self._assemble = assemble_bratu if spec.kind == "bratu_modified" else assemble_manufactured
        self._mid = mesh.midpoint_index()
        self._last = (None, None)

    def _eval(self, u, lam):
        # residual and Jacobian come from one assembly; remember the latest pair
        u = np.asarray(u, dtype=float)
        key = (u.tobytes(), float(lam))
        last_key, last_val = self._last
        if key == last_key:
            return last_val
        val = self._assemble(self.spec, self.mesh, u, lam, self.use_numba)
        self._last = (key, val)
        return val

    def residual(self, u, lam):
        return self._eval(u, lam)[0].copy()

    def jacobian(self, u, lam):
        return self._eval(u, lam)[1].copy()

    def diagnostic(self, u) -> float:
        return float(np.asarray(u)[self._mid])


def make_fem_problem(kind: str, mesh_elems: int = 20, gamma: float = 100.0,
                     zeta: float = 20.0, eta: float = 50.0, use_numba=None) -> FemProblem:
    kind = {"bratu": "bratu_modified"}.get(kind, kind)
    spec = FemProblemSpec(kind=kind, gamma=gamma, zeta=zeta, eta=eta)
    return FemProblem(spec, Mesh1D.uniform(mesh_elems), use_numba=use_numba)
