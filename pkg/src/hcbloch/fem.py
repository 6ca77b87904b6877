"""Piecewise-linear finite elements on a periodic cell mesh.

All matrices act on the periodic-reduced degrees of freedom of a
:class:`~hcbloch.geometry.CellGeometry`. Three bilinear forms are provided:

* stiffness  ``(u, v) -> int grad u . grad v``
* mass       ``(u, v) -> int u v``
* directional ``(u, v) -> int v (k . grad u)`` for a unit direction ``k``

each restricted to the inclusion ``P``, its complement ``Pc`` or the whole
cell ``Q``. Rows of the directional matrix index the test function.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import SolvabilityError, SolverError

FORMS = ("stiffness", "mass", "directional")


@dataclass(frozen=True)
class SparseForm:
    """Assembled bilinear form; ``matrix[i, j] = a(phi_j, phi_i)``."""

    matrix: sp.csr_matrix
    form: str
    region: str

    def __matmul__(self, other):
        return self.matrix @ other

    @property
    def shape(self):
        return self.matrix.shape


def _barycentric_gradients(geom, mask):
    p = geom.nodes[geom.triangles[mask]]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    # inverse-transpose of [e1 e2] applied to the reference gradients
    g1 = np.column_stack([e2[:, 1], -e2[:, 0]]) / det[:, None]
    g2 = np.column_stack([-e1[:, 1], e1[:, 0]]) / det[:, None]
    g0 = -g1 - g2
    return np.stack([g0, g1, g2], axis=1), 0.5 * det


def assemble(geom, form, region="Q", direction=None):
    """Assemble a bilinear form over one region of the cell.

    Parameters
    ----------
    geom : CellGeometry
    form : {'stiffness', 'mass', 'directional'}
    region : {'P', 'Pc', 'Q'}
    direction : array_like of shape (2,), optional
        Unit vector for the directional form.

    Returns
    -------
    SparseForm
    """
    if form not in FORMS:
        raise ValueError(f"unknown form {form!r}; expected one of {FORMS}")
    mask = geom.triangle_mask(region)
    grads, area = _barycentric_gradients(geom, mask)
    if form == "stiffness":
        local = area[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)
    elif form == "mass":
        local = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))[None]
    else:
        if direction is None:
            raise ValueError("directional form needs a direction")
        k = np.asarray(direction, dtype=float)
        if abs(np.linalg.norm(k) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector")
        kg = grads @ k  # (t, j)
        local = (area / 3.0)[:, None, None] * np.broadcast_to(kg[:, None, :], (len(area), 3, 3))
    dofs = geom.dof[geom.triangles[mask]]
    rows = np.repeat(dofs, 3, axis=1).ravel()
    cols = np.tile(dofs, (1, 3)).ravel()
    n = geom.n_dofs
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return SparseForm(matrix=mat, form=form, region=region)


@dataclass(frozen=True)
class Dirichlet:
    """Prescribe ``values`` on ``fixed`` dofs and solve on ``free`` dofs."""

    free: np.ndarray
    fixed: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class ZeroMean:
    """Solve on ``dofs`` subject to ``weights . x = 0``.

    When the operator annihilates constants on ``dofs`` the right-hand side
    must sum to zero there (Fredholm condition); otherwise the scalar
    multiplier is simply part of the solution.
    """

    dofs: np.ndarray
    weights: np.ndarray


class LinearSolver:
    """Factorized restriction of a sparse matrix with a fixed constraint type.

    Instances are reused across right-hand sides; the hierarchy performs
    many solves with the same operator.
    """

    def __init__(self, matrix, constraint, method="direct", tol=1e-10, solvability_tol=1e-8):
        self.matrix = sp.csr_matrix(matrix)
        self.constraint = constraint
        self.method = method
        self.tol = tol
        self.solvability_tol = solvability_tol
        self.n = self.matrix.shape[0]
        if method not in ("direct", "cg"):
            raise ValueError("method must be 'direct' or 'cg'")
        if isinstance(constraint, Dirichlet):
            free = np.asarray(constraint.free)
            self._idx = free
            self._block = self.matrix[free][:, free].tocsc()
            self._coupling = self.matrix[free][:, np.asarray(constraint.fixed)]
            self._singular = False
        elif isinstance(constraint, ZeroMean):
            d = np.asarray(constraint.dofs)
            self._idx = d
            block = self.matrix[d][:, d]
            w = np.asarray(constraint.weights, dtype=float)
            scale = abs(block).sum() / max(len(d), 1)
            self._singular = np.abs(block @ np.ones(len(d))).max() <= 1e-10 * max(scale, 1.0)
            self._weights = w
            self._block_plain = block.tocsr()
            col = sp.csr_matrix(w[:, None])
            self._block = sp.bmat([[block, col], [col.T, None]], format="csc")
        elif constraint is None:
            self._idx = np.arange(self.n)
            self._block = self.matrix.tocsc()
            self._singular = False
        else:
            raise TypeError("constraint must be Dirichlet, ZeroMean or None")
        self._lu = None
        if method == "direct":
            try:
                self._lu = spla.splu(self._block)
            except RuntimeError as exc:
                raise SolverError(f"factorization failed: {exc}") from exc

    def _solve_block(self, rhs):
        if self.method == "direct":
            return self._lu.solve(rhs)
        return self._cg(rhs)

    def _cg(self, rhs):
        history = []
        if isinstance(self.constraint, ZeroMean):
            # consistent singular SPD system: project, iterate, re-project
            A = self._block_plain
            b = rhs[:-1]
            w = self._weights
            b = b - b.sum() / len(b) if self._singular else b
        else:
            A, b = self._block, rhs
        diag = A.diagonal()
        precond = spla.LinearOperator(A.shape, matvec=lambda x: x / diag)
        x, info = spla.cg(A, b, rtol=self.tol * 1e-2, maxiter=20 * A.shape[0], M=precond,
                          callback=lambda xk: history.append(float(np.linalg.norm(A @ xk - b))))
        if info != 0:
            raise SolverError("conjugate gradients did not converge", residuals=history)
        if isinstance(self.constraint, ZeroMean):
            x = x - (w @ x) / w.sum()
            return np.append(x, 0.0)
        return x

    def solve(self, rhs):
        """Solve for one right-hand side given on all reduced dofs.

        Returns the full-length solution vector (zero outside the dofs the
        constraint covers, boundary values on Dirichlet dofs).
        """
        rhs = np.asarray(rhs, dtype=float)
        out = np.zeros(self.n)
        c = self.constraint
        if isinstance(c, Dirichlet):
            g = np.asarray(c.values, dtype=float)
            b = rhs[self._idx] - self._coupling @ g
            out[np.asarray(c.fixed)] = g
            out[self._idx] = self._solve_block(b)
            self._check(out, rhs)
            return out
        if isinstance(c, ZeroMean):
            b = rhs[self._idx]
            if self._singular:
                defect = abs(b.sum()) / max(np.abs(b).sum(), np.finfo(float).tiny)
                if defect > self.solvability_tol:
                    raise SolvabilityError("right-hand side not orthogonal to constants", defect)
            x = self._solve_block(np.append(b, 0.0))
            out[self._idx] = x[:-1]
            return out
        out[:] = self._solve_block(rhs)
        self._check(out, rhs)
        return out

    def _check(self, x, rhs):
        idx = self._idx
        r = (self.matrix @ x)[idx] - rhs[idx]
        ref = max(np.abs(rhs[idx]).max(), (abs(self.matrix[idx]) @ np.abs(x)).max(), np.finfo(float).tiny)
        if np.abs(r).max() > 1e-8 * ref:
            raise SolverError("linear solve residual too large", residuals=[float(np.abs(r).max() / ref)])


def solve_constrained(matrix, rhs, constraint=None, method="direct"):
    """One-shot constrained solve; see :class:`LinearSolver`."""
    m = matrix.matrix if isinstance(matrix, SparseForm) else matrix
    return LinearSolver(m, constraint, method=method).solve(rhs)


def eigensolve(A, B, count, shift=0.0, dofs=None, tol=1e-8):
    """Lowest generalized eigenpairs ``A x = lam B x`` above ``shift``.

    Parameters
    ----------
    A, B : sparse matrix or SparseForm
        Symmetric; ``B`` positive definite on ``dofs``.
    count : int
    shift : float
        Shift-invert target; eigenvalues nearest above it are returned.
    dofs : array_like of int, optional
        Restrict both matrices to these dofs.

    Returns
    -------
    values : ndarray, ascending
    vectors : ndarray (n_dofs, count), B-orthonormal, zero outside ``dofs``
    """
    A = A.matrix if isinstance(A, SparseForm) else A
    B = B.matrix if isinstance(B, SparseForm) else B
    n = A.shape[0]
    idx = np.arange(n) if dofs is None else np.asarray(dofs)
    a = sp.csc_matrix(A[idx][:, idx])
    b = sp.csc_matrix(B[idx][:, idx])
    if count < 1:
        raise ValueError("count must be >= 1")
    if count >= len(idx) - 1:
        vals, vecs = _dense_eig(a, b)
    else:
        v0 = np.ones(len(idx)) / np.sqrt(len(idx))
        try:
            vals, vecs = spla.eigsh(a, k=count, M=b, sigma=shift, which="LM", v0=v0, tol=0)
        except spla.ArpackNoConvergence as exc:
            raise SolverError("eigensolver did not converge", residuals=None) from exc
    order = np.argsort(vals)[:count]
    vals, vecs = vals[order], vecs[:, order]
    norms = np.sqrt(np.einsum("ij,ij->j", vecs, b @ vecs))
    vecs = vecs / norms
    res = np.linalg.norm(a @ vecs - (b @ vecs) * vals, axis=0)
    # kernel vectors (zero eigenvalue) are judged against the operator scale
    floor = 1e-6 * abs(a).max() * np.linalg.norm(vecs, axis=0)
    ref = np.maximum.reduce([np.linalg.norm(a @ vecs, axis=0), floor,
                             np.full(len(vals), np.finfo(float).tiny)])
    if np.any(res > tol * ref):
        raise SolverError("eigenpair residuals above tolerance", residuals=list(res / ref))
    full = np.zeros((n, len(vals)))
    full[idx] = vecs
    return vals, full


def _dense_eig(a, b):
    from scipy.linalg import eigh

    return eigh(a.toarray(), b.toarray())


@dataclass(eq=False)
class FormSet:
    """All forms needed by the cell problems for one mesh and direction.

    Attributes are plain CSR matrices. ``S_c`` and ``S_p`` are the
    antisymmetric combinations ``D^T - D`` of the directional forms, the
    matrices of ``(u, v) -> int (u k.grad v - v k.grad u)``.
    """

    geom: object
    direction: np.ndarray
    method: str = "direct"
    _solvers: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        g, k = self.geom, np.asarray(self.direction, dtype=float)
        self.direction = k
        self.K_c = assemble(g, "stiffness", "Pc").matrix
        self.K_p = assemble(g, "stiffness", "P").matrix
        self.M_c = assemble(g, "mass", "Pc").matrix
        self.M_p = assemble(g, "mass", "P").matrix
        self.D_c = assemble(g, "directional", "Pc", k).matrix
        self.D_p = assemble(g, "directional", "P", k).matrix
        self.S_c = (self.D_c.T - self.D_c).tocsr()
        self.S_p = (self.D_p.T - self.D_p).tocsr()
        self.M_q = (self.M_c + self.M_p).tocsr()
        self.ones = np.ones(g.n_dofs)
        self.pi = g.interior_p_dofs
        self.gamma = g.interface_dofs
        self.pc = g.pc_dofs
        self.p = g.p_dofs
        mask = np.zeros(g.n_dofs, dtype=bool)
        mask[self.pi] = True
        self.interior_p_mask = mask

    def neumann_solver(self):
        """Zero-mean solver for the complement stiffness on ``Pc`` dofs."""
        key = ("neumann",)
        if key not in self._solvers:
            w = self.M_c @ self.ones
            self._solvers[key] = LinearSolver(self.K_c, ZeroMean(self.pc, w[self.pc]), self.method)
        return self._solvers[key]

    def inclusion_solver(self, sign, zeta0):
        """Dirichlet solver for ``sign*K_p - zeta0*M_p`` on interior-P dofs."""
        key = ("incl", int(sign), float(zeta0))
        if key not in self._solvers:
            if len(self._solvers) > 16:
                self._solvers = {k: v for k, v in self._solvers.items() if k[0] != "incl"}
            A = sign * self.K_p - zeta0 * self.M_p
            self._solvers[key] = LinearSolver(A, Dirichlet(self.pi, self.gamma, np.zeros(len(self.gamma))),
                                              self.method)
        return self._solvers[key]

    def solve_inclusion(self, sign, zeta0, rhs, boundary_values):
        """Solve ``(sign K_p - zeta0 M_p) x = rhs`` in P with Dirichlet data on the interface."""
        solver = self.inclusion_solver(sign, zeta0)
        c = solver.constraint
        bv = np.asarray(boundary_values, dtype=float)
        b = np.asarray(rhs, dtype=float)[c.free] - solver._coupling @ bv
        out = np.zeros(self.geom.n_dofs)
        out[c.fixed] = bv
        out[c.free] = solver._solve_block(b)
        return out

    def p_mean(self, u):
        return float(self.ones @ (self.M_p @ u))

    def q_mean(self, u):
        return float(self.ones @ (self.M_q @ u))
