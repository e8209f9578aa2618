"""Global semi-discrete systems: mass operator, residual, stabilization.

The weak form is used in its strong-residual shape: for every test
function phi_i,

    r_i(U, t) = -int phi_i d/dx f(u_h) dx - S_i(u_h) - int phi_i source dx,

with S one of

    SUPG : sum_K int_K (df/du dx_phi_i) tau_K (dt_u + dx_f + source),
           the dt part entering the mass operator,
    CIP  : sum over interior faces of tau_f [dx_phi_i] [dx_u],
    LPS  : sum_K tau_K int_K dx_phi_i (dx_u - w),  w the global L2
           projection of dx_u,

and the dimensionless coefficient delta entering through

    SUPG : tau_K = delta dx / speed
    LPS  : tau_K = delta dx  speed
    CIP  : tau_f = delta dx^2 speed.

Cell speeds are the per-cell maximum of |df/du| over quadrature points,
refreshed on every residual evaluation; for faces the larger of the two
adjacent cell values is used.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elements import CUBATURE, build_reference_element, local_matrices

NONE = "none"
SUPG = "supg"
CIP = "cip"
LPS = "lps"
STAB_KINDS = (NONE, SUPG, CIP, LPS)

PERIODIC = "periodic"
DIRICHLET = "dirichlet"


class SingularMass(RuntimeError):
    """Mass (or projection) factorization failed."""


@dataclass(frozen=True)
class StabilizationSpec:
    """Stabilization kind plus the dimensionless coefficient delta.

    ``speed_ref`` picks the reference |df/du| entering tau for nonlinear
    fluxes: "global" (default) uses the instantaneous maximum over the
    whole mesh, "cell" the per-cell quadrature maximum.  The global choice
    keeps the stabilization active where the local wave speed vanishes
    (e.g. at the center of the Burgers tanh profile) and reproduces the
    reference convergence orders; both coincide for linear fluxes.
    """

    kind: str = NONE
    delta: float = 0.0
    speed_ref: str = "global"

    def __post_init__(self):
        if self.kind not in STAB_KINDS:
            raise ValueError(f"unknown stabilization {self.kind!r}")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.speed_ref not in ("global", "cell"):
            raise ValueError(f"unknown speed reference {self.speed_ref!r}")


@dataclass(frozen=True)
class Mesh1D:
    """Uniform 1D mesh with periodic or Dirichlet ends."""

    x_left: float
    x_right: float
    n_cells: int
    boundary: str = PERIODIC

    def __post_init__(self):
        if self.boundary not in (PERIODIC, DIRICHLET):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.n_cells < 1 or self.x_right <= self.x_left:
            raise ValueError("empty mesh")

    @property
    def dx(self):
        return (self.x_right - self.x_left) / self.n_cells

    def n_nodes(self, degree):
        n = degree * self.n_cells
        return n if self.boundary == PERIODIC else n + 1


def tau_cell(stab, dx, speed):
    """Stabilization time scale for one cell (or face, for CIP).

    SUPG divides by the speed; a vanishing speed there returns tau = 0
    with a warning instead of raising.
    """
    if stab.kind == NONE or stab.delta == 0.0:
        return np.zeros_like(np.asarray(speed, dtype=float)) if np.ndim(speed) else 0.0
    if stab.kind == SUPG:
        speed_arr = np.asarray(speed, dtype=float)
        if np.any(speed_arr == 0.0):
            warnings.warn("SUPG tau with zero speed; returning tau = 0", stacklevel=2)
        with np.errstate(divide="ignore"):
            tau = np.where(speed_arr == 0.0, 0.0, stab.delta * dx / np.abs(speed_arr))
        return tau if np.ndim(speed) else float(tau)
    if stab.kind == LPS:
        return stab.delta * dx * np.abs(speed)
    return stab.delta * dx**2 * np.abs(speed)  # CIP


class DiscreteSystem:
    """Assembled periodic/Dirichlet system: mass operator plus residual.

    Mass solves and factorizations are counted so tests can assert that
    the deferred-correction stepper never touches the consistent mass.
    """

    def __init__(self, mesh, ref, stab, flux, bc=None):
        self.mesh = mesh
        self.ref = ref
        self.stab = stab
        self.flux = flux
        self.bc = bc
        if mesh.boundary == DIRICHLET and bc is None:
            raise ValueError("Dirichlet mesh needs boundary data")

        p = ref.degree
        self.n_comp = flux.n_comp
        self.n_nodes = mesh.n_nodes(p)
        self.n_mass_solves = 0
        self.n_mass_factorizations = 0
        self.n_projection_solves = 0

        # connectivity: cell c owns nodes c*p .. c*p+p, last one wrapping
        cells = np.arange(mesh.n_cells)[:, None] * p + np.arange(p + 1)[None, :]
        if mesh.boundary == PERIODIC:
            cells %= self.n_nodes
        self.cell_dofs = cells

        self.node_x = mesh.x_left + mesh.dx * (
            np.repeat(np.arange(mesh.n_cells), p) + np.tile(ref.nodes[:p], mesh.n_cells)
        )
        if mesh.boundary == DIRICHLET:
            self.node_x = np.append(self.node_x, mesh.x_right)

        self.local = local_matrices(ref)
        self.V = ref.eval_basis(ref.quad_points)          # (nq, p+1)
        self.Vd = ref.eval_basis_deriv(ref.quad_points)   # (nq, p+1)
        self.d_left = ref.eval_basis_deriv(0.0)
        self.d_right = ref.eval_basis_deriv(1.0)
        self.quad_x = mesh.x_left + mesh.dx * (
            np.arange(mesh.n_cells)[:, None] + ref.quad_points[None, :]
        )

        self.M_galerkin = self._assemble_pairwise(self.local.mass) * mesh.dx
        self._mass_matrix = None
        self._mass_solver = None
        self._lumped = None
        self._proj_solver = None
        self._setup_lps()
        if not self.mass_is_state_dependent:
            self._set_mass(self._build_mass())

    # -- assembly helpers -------------------------------------------------

    def _assemble_pairwise(self, block):
        """Scatter one (p+1)x(p+1) block into the global sparse matrix."""
        rows = self.cell_dofs[:, :, None]
        cols = self.cell_dofs[:, None, :]
        data = np.broadcast_to(block, (self.mesh.n_cells,) + block.shape)
        mat = sp.coo_matrix(
            (data.ravel(), (np.broadcast_to(rows, data.shape).ravel(),
                            np.broadcast_to(cols, data.shape).ravel())),
            shape=(self.n_nodes, self.n_nodes),
        )
        return mat.tocsc()

    @property
    def mass_is_state_dependent(self):
        return self.stab.kind == SUPG and not is_linear_flux(self.flux)

    def _build_mass(self, U=None):
        """Galerkin mass plus, for SUPG, the tau-weighted dt block."""
        M = self.M_galerkin.copy()
        if self.stab.kind == SUPG:
            jac, tau = self._cell_jacobian_tau(U)
            # per cell: tau_c * sum_q w phi_i' jac phi_j  (dx-free scaling)
            w = self.ref.quad_weights
            blocks = np.einsum("c,q,cq,qi,qj->cij", tau, w, jac, self.Vd, self.V)
            rows = np.broadcast_to(self.cell_dofs[:, :, None], blocks.shape)
            cols = np.broadcast_to(self.cell_dofs[:, None, :], blocks.shape)
            M = M + sp.coo_matrix(
                (blocks.ravel(), (rows.ravel(), cols.ravel())),
                shape=M.shape,
            ).tocsc()
        return M

    def _cell_speeds(self, u_q):
        """Reference speeds per cell for tau, honoring stab.speed_ref."""
        if is_linear_flux(self.flux):
            return np.full(self.mesh.n_cells, abs(self.flux.a))
        s = self.flux.speed(u_q)
        if self.stab.speed_ref == "global":
            return np.full(self.mesh.n_cells, float(s.max()))
        return s.max(axis=1)

    def _cell_jacobian_tau(self, U):
        """Pointwise flux Jacobian scalars and per-cell tau values."""
        nq = len(self.ref.quad_weights)
        if is_linear_flux(self.flux):
            jac = np.full((self.mesh.n_cells, nq), self.flux.a)
            speed = np.full(self.mesh.n_cells, abs(self.flux.a))
        else:
            u_q = self._values_at_quads(U)
            if self.n_comp == 1:
                jac = self._scalar_jac(u_q[..., 0])
            else:
                jac = self.flux.speed(u_q)  # componentwise system speed
            speed = self._cell_speeds(u_q)
        tau = tau_cell(self.stab, self.mesh.dx, speed)
        return jac, np.asarray(tau)

    def _scalar_jac(self, u):
        from .fluxes import Burgers
        return u if isinstance(self.flux, Burgers) else np.full_like(u, self.flux.a)

    def _set_mass(self, M):
        self._lumped = np.asarray(M.sum(axis=1)).ravel()
        if np.any(self._lumped <= 0):
            raise SingularMass("lumped mass has nonpositive entries")
        if self.mesh.boundary == DIRICHLET:
            M = M.tolil()
            for node in (0, self.n_nodes - 1):
                M.rows[node] = [node]
                M.data[node] = [1.0]
            M = M.tocsc()
        self._mass_matrix = M
        diag = M.diagonal()
        offdiag = M - sp.diags(diag)
        self._mass_is_diagonal = offdiag.nnz == 0 or np.max(np.abs(offdiag.data)) < 1e-15
        self._mass_diag = diag if self._mass_is_diagonal else None
        self._mass_solver = None

    def refresh_mass(self, U=None):
        """Reassemble the SUPG-augmented mass for the current state.

        No-op unless the mass actually depends on the state (nonlinear
        flux with SUPG); steppers call this once per time step so stages
        see a frozen operator.
        """
        if self.mass_is_state_dependent:
            self._set_mass(self._build_mass(U))

    @property
    def mass_matrix(self):
        return self._mass_matrix

    @property
    def lumped(self):
        """Row sums of the full mass operator (positive for p <= 3)."""
        return self._lumped

    def solve_mass(self, b):
        """M^{-1} b, one solve per component; the factorization is reused."""
        self.n_mass_solves += 1
        b2 = b.reshape(self.n_nodes, self.n_comp)
        if self._mass_is_diagonal:
            return (b2 / self._mass_diag[:, None]).reshape(b.shape)
        if self._mass_solver is None:
            self.n_mass_factorizations += 1
            try:
                self._mass_solver = spla.splu(self._mass_matrix.tocsc())
            except RuntimeError as exc:  # pragma: no cover - defensive
                raise SingularMass(str(exc)) from exc
        out = np.column_stack(
            [self._mass_solver.solve(np.ascontiguousarray(b2[:, c])) for c in range(self.n_comp)]
        )
        return out.reshape(b.shape)

    # -- LPS projection ----------------------------------------------------

    def _setup_lps(self):
        if self.stab.kind != LPS:
            self._lps_weak_grad = None
            return
        self._lps_weak_grad = self._assemble_pairwise(self.local.deriv)
        lump = self.ref.family == CUBATURE
        if lump:
            self._proj_diag = np.asarray(self.M_galerkin.sum(axis=1)).ravel()
            self._proj_solver = None
        else:
            self._proj_diag = None
            try:
                self._proj_solver = spla.splu(self.M_galerkin.tocsc())
            except RuntimeError as exc:  # pragma: no cover - defensive
                raise SingularMass(str(exc)) from exc

    def project_gradient(self, U):
        """Global L2 projection w of dx_u, one solve per component."""
        if self.stab.kind != LPS:
            raise ValueError("gradient projection is only defined for LPS systems")
        self.n_projection_solves += 1
        U2 = U.reshape(self.n_nodes, self.n_comp)
        rhs = self._lps_weak_grad @ U2
        if self._proj_diag is not None:
            return rhs / self._proj_diag[:, None]
        return np.column_stack(
            [self._proj_solver.solve(np.ascontiguousarray(rhs[:, c])) for c in range(self.n_comp)]
        )

    # -- residual ----------------------------------------------------------

    def _values_at_quads(self, U):
        cells = U.reshape(self.n_nodes, self.n_comp)[self.cell_dofs]
        return np.einsum("qi,cik->cqk", self.V, cells)

    def eval_at_quads(self, U):
        """Solution values at all quadrature points, shape (n_cells, nq, n_comp)."""
        return self._values_at_quads(U)

    def residual(self, U, t=0.0):
        """Spatial right-hand side r(U, t) of M dU/dt = r."""
        mesh, ref = self.mesh, self.ref
        dx, w = mesh.dx, ref.quad_weights
        U2 = U.reshape(self.n_nodes, self.n_comp)
        cells = U2[self.cell_dofs]                               # (nc, p+1, k)
        u_q = np.einsum("qi,cik->cqk", self.V, cells)
        uxi_q = np.einsum("qi,cik->cqk", self.Vd, cells)         # reference gradient

        dfdx = self.flux.flux_x(u_q, uxi_q)                      # dx * physical d/dx f
        strong = dfdx / dx
        if getattr(self.flux, "source", None) is not None:
            src = np.zeros_like(u_q)
            src[..., 1] = self.flux.source(self.quad_x, t)
            strong = strong + src
        # - int phi_i (dx_f + source)
        r_cells = -dx * np.einsum("q,qi,cqk->cik", w, self.V, strong)

        if self.stab.kind == SUPG and self.stab.delta > 0:
            jac, tau = self._cell_jacobian_tau(U)
            r_cells -= np.einsum("c,q,cq,qi,cqk->cik", tau, w, jac, self.Vd, strong)
        elif self.stab.kind == LPS and self.stab.delta > 0:
            W = self.project_gradient(U)
            w_q = np.einsum("qi,cik->cqk", self.V, W[self.cell_dofs])
            tau = np.asarray(tau_cell(self.stab, dx, self._cell_speeds(u_q)))
            r_cells -= np.einsum("c,q,qi,cqk->cik", tau, w, self.Vd, uxi_q / dx - w_q)

        r = np.zeros_like(U2)
        np.add.at(r, self.cell_dofs, r_cells)

        if self.stab.kind == CIP and self.stab.delta > 0:
            self._add_cip(r, U2, u_q)

        if mesh.boundary == DIRICHLET:
            r[0] = 0.0
            r[-1] = 0.0
        return r.reshape(U.shape)

    def _add_cip(self, r, U2, u_q):
        mesh = self.mesh
        dx = mesh.dx
        nc = mesh.n_cells
        if mesh.boundary == PERIODIC:
            right = np.arange(nc)                 # cell to the right of face
            left = (right - 1) % nc
        else:
            right = np.arange(1, nc)
            left = right - 1
        cells = U2[self.cell_dofs]
        grad_l = np.einsum("i,cik->ck", self.d_right, cells[left]) / dx
        grad_r = np.einsum("i,cik->ck", self.d_left, cells[right]) / dx
        jump_u = grad_r - grad_l                   # (nf, k)

        cell_speed = self._cell_speeds(u_q)
        s_face = np.maximum(cell_speed[left], cell_speed[right])
        tau_f = np.asarray(tau_cell(self.stab, dx, s_face))

        contrib_r = -np.einsum("f,i,fk->fik", tau_f, self.d_left / dx, jump_u)
        contrib_l = +np.einsum("f,i,fk->fik", tau_f, self.d_right / dx, jump_u)
        np.add.at(r, self.cell_dofs[right], contrib_r)
        np.add.at(r, self.cell_dofs[left], contrib_l)

    # -- boundary + initialization -----------------------------------------

    def apply_bc(self, U, t):
        """Impose the Dirichlet values strongly at both ends (in place)."""
        if self.mesh.boundary == DIRICHLET and self.bc is not None:
            U2 = U.reshape(self.n_nodes, self.n_comp)
            left, right = self.bc(t)
            U2[0] = left
            U2[-1] = right
        return U

    def interpolate(self, func, t=0.0):
        """Dof vector interpolating ``func(x, t)`` at the element nodes.

        For Lagrange families the dofs are the nodal values; Bernstein
        coefficients come from the cell-local interpolation problem at
        the Greville points, which keeps the p+1 approximation order.
        """
        vals = np.asarray(func(self.node_x, t), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if self.ref.family == "bernstein":
            node_vander = self.ref.eval_basis(self.ref.nodes)
            cells = np.linalg.solve(node_vander, vals[self.cell_dofs])
            out = np.zeros((self.n_nodes, self.n_comp))
            out[self.cell_dofs.ravel()] = cells.reshape(-1, self.n_comp)
            vals = out
        return vals.ravel() if self.n_comp > 1 else vals[:, 0]


def is_linear_flux(flux):
    from .fluxes import LinearAdvection
    return isinstance(flux, LinearAdvection)


def assemble_system(mesh, ref, stab, flux, bc=None):
    """Build the DiscreteSystem for a mesh / element / stabilization / flux."""
    if isinstance(ref, tuple):
        ref = build_reference_element(*ref)
    return DiscreteSystem(mesh, ref, stab, flux, bc=bc)


def lps_project_gradient(system, U):
    """Global L2 projection of the discrete gradient (LPS systems only)."""
    return system.project_gradient(U)


def semi_discrete_energy_rate(system, U):
    """d/dt ||u_h||^2 / 2 = U . r(U) for the linear periodic system.

    Nonpositive for CIP and LPS, zero for the plain Galerkin scheme.  The
    SUPG energy balance lives in a different norm, so it is rejected here.
    """
    if system.stab.kind == SUPG:
        raise ValueError("energy rate in the L2 norm is not meaningful for SUPG")
    if system.mesh.boundary != PERIODIC or not is_linear_flux(system.flux):
        raise ValueError("energy rate contract requires a periodic linear system")
    return float(U @ system.residual(U))
