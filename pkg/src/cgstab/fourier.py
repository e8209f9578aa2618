"""Fourier symbols, amplification matrices, and mode extraction.

The periodic problem is reduced to the p dofs of one representative cell
(the left boundary node plus the interior ones); the neighbor coupling
U_{K+-1} = exp(+-i theta) U_K turns every assembled operator into a p x p
complex symbol

    M~(theta) u' = -speed K~(theta) u,

with theta = k dx the reduced wavenumber.  Symbols here are stored with
unit conventions: ``mass_sym`` carries the dx factor, ``conv_sym`` is the
unit-speed convection-plus-stabilization symbol (every stabilization term
is exactly linear in the speed by construction of the delta scalings, so
speed folds in downstream).

Eigenvalues lambda of speed * M~^{-1} K~ give the semi-discrete phase and
damping, omega = Im(lambda), eps = -Re(lambda).  Fully discrete, the one
step propagator G has eigenvalues mu with

    omega = atan2(-Im mu, Re mu) / dt,   eps = log|mu| / dt.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .elements import build_reference_element, local_matrices
from .stabilization import CIP, NONE, SUPG
from .timeint import expand_ssprk_coefficients, make_scheme


class EigenSolveFailure(RuntimeError):
    """Closed-form and iterative eigenvalue paths both failed the residual check."""


# time step conventions: dt = cfl * scale / speed
CONVENTION_CELL = "cell"   # scale = dx
CONVENTION_DOF = "dof"     # scale = dx / p

# Calibrated against the unstabilized cubature entries of the reference
# stability tables (see README): the per-cell convention reproduces them.
DEFAULT_CONVENTION = CONVENTION_CELL


def dt_scale(convention, dx, p):
    if convention == CONVENTION_CELL:
        return dx
    if convention == CONVENTION_DOF:
        return dx / p
    raise ValueError(f"unknown CFL convention {convention!r}")


# ---------------------------------------------------------------------------
# small dense eigenvalue solver (closed forms up to 3x3, LAPACK fallback)
# ---------------------------------------------------------------------------

_OMEGA3 = np.exp(2j * np.pi / 3)


def _eig1(A):
    return A[..., 0, 0][..., None].astype(complex)


def _eig2(A):
    a, b = A[..., 0, 0], A[..., 0, 1]
    c, d = A[..., 1, 0], A[..., 1, 1]
    tr = a + d
    det = a * d - b * c
    s = np.sqrt((tr * tr - 4.0 * det).astype(complex))
    s = np.where(np.real(np.conj(tr) * s) < 0.0, -s, s)
    q = 0.5 * (tr + s)
    lam1 = q
    lam2 = np.where(np.abs(q) > 0.0, det / np.where(q == 0, 1.0, q), tr - q)
    return np.stack([lam1, lam2], axis=-1)


def _eig3(A):
    a00, a01, a02 = A[..., 0, 0], A[..., 0, 1], A[..., 0, 2]
    a10, a11, a12 = A[..., 1, 0], A[..., 1, 1], A[..., 1, 2]
    a20, a21, a22 = A[..., 2, 0], A[..., 2, 1], A[..., 2, 2]
    c2 = a00 + a11 + a22
    c1 = (a00 * a11 - a01 * a10) + (a00 * a22 - a02 * a20) + (a11 * a22 - a12 * a21)
    c0 = (
        a00 * (a11 * a22 - a12 * a21)
        - a01 * (a10 * a22 - a12 * a20)
        + a02 * (a10 * a21 - a11 * a20)
    )
    # lambda^3 + a lambda^2 + b lambda + c, then depressed t^3 + p t + q
    a = -c2
    b = c1
    c = -c0
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    s = np.sqrt((0.25 * q * q + p**3 / 27.0).astype(complex))
    u1 = -0.5 * q + s
    u2 = -0.5 * q - s
    u = np.where(np.abs(u1) >= np.abs(u2), u1, u2)
    C = u.astype(complex) ** (1.0 / 3.0)
    safe = np.abs(C) > 0.0
    Cs = np.where(safe, C, 1.0)
    roots = []
    for k in range(3):
        ck = Cs * _OMEGA3**k
        t = np.where(safe, ck - p / (3.0 * ck), 0.0)
        roots.append(t - a / 3.0)
    return np.stack(roots, axis=-1)


def _char_residual(A, lam):
    """|det(A - lam I)| for each eigenvalue, batched, n <= 4."""
    n = A.shape[-1]
    out = np.empty(lam.shape)
    for i in range(lam.shape[-1]):
        B = A - lam[..., i][..., None, None] * np.eye(n)
        if n == 1:
            det = B[..., 0, 0]
        elif n == 2:
            det = B[..., 0, 0] * B[..., 1, 1] - B[..., 0, 1] * B[..., 1, 0]
        elif n == 3:
            det = (
                B[..., 0, 0] * (B[..., 1, 1] * B[..., 2, 2] - B[..., 1, 2] * B[..., 2, 1])
                - B[..., 0, 1] * (B[..., 1, 0] * B[..., 2, 2] - B[..., 1, 2] * B[..., 2, 0])
                + B[..., 0, 2] * (B[..., 1, 0] * B[..., 2, 1] - B[..., 1, 1] * B[..., 2, 0])
            )
        else:
            det = np.linalg.det(B)
        out[..., i] = np.abs(det)
    return out


def eigvals_batched(A, residual_tol=1e-9):
    """Eigenvalues of a batch of small complex matrices, shape (..., n).

    Closed forms handle n <= 3 (quadratic formula, Cardano); n = 4 and any
    batch entry failing the characteristic residual check fall back to the
    LAPACK QR iteration.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[-1]
    if n == 1:
        lam = _eig1(A)
    elif n == 2:
        lam = _eig2(A)
    elif n == 3:
        lam = _eig3(A)
    else:
        return np.linalg.eigvals(A)
    scale = np.maximum(np.linalg.norm(A, axis=(-2, -1)) ** n, 1e-300)
    bad = np.any(_char_residual(A, lam) > residual_tol * scale[..., None], axis=-1)
    if np.any(bad):
        lam[bad] = np.linalg.eigvals(A[bad])
    return lam


def small_complex_eigenvalues(A, residual_tol=1e-9):
    """All eigenvalues of one n x n complex matrix, n <= 4, residual checked."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[-1]
    if A.ndim != 2 or A.shape != (n, n) or n > 4:
        raise ValueError("expected one square matrix of size <= 4")
    lam = eigvals_batched(A[None])[0]
    scale = max(np.linalg.norm(A) ** n, 1e-300)
    if np.any(_char_residual(A[None], lam[None])[0] > residual_tol * scale):
        raise EigenSolveFailure("characteristic residual above tolerance")
    return lam


# ---------------------------------------------------------------------------
# operator bands and symbols
# ---------------------------------------------------------------------------


def _band_from_local(A, p):
    """Fold one elemental (p+1)^2 block into {-1, 0, +1} reduced bands."""
    b0 = np.zeros((p, p))
    bm = np.zeros((p, p))
    bp = np.zeros((p, p))
    b0 += A[:p, :p]
    b0[0, 0] += A[p, p]
    bp[:, 0] += A[:p, p]
    bm[0, :] += A[p, :p]
    return {-1: bm, 0: b0, 1: bp}


def _cip_bands(ref):
    """Reduced bands of the gradient-jump penalty, unit tau, unit dx."""
    p = ref.degree
    d0 = ref.eval_basis_deriv(0.0)
    d1 = ref.eval_basis_deriv(1.0)
    entries = []
    for cell, coeffs, sign in ((-1, d1, -1.0), (0, d0, +1.0)):
        for l in range(p + 1):
            entries.append(((cell + (l == p), l % p), sign * coeffs[l]))
    bands = {s: np.zeros((p, p)) for s in range(-2, 3)}
    for shift in (-1, 0, 1):
        for (rc, r), gr in entries:
            if rc + shift != 0:
                continue
            for (cc, c), gc in entries:
                bands[cc + shift][r, c] += gr * gc
    return bands


def _fold(bands, theta):
    """sum_s B_s exp(i theta s); theta may be an array."""
    theta = np.asarray(theta, dtype=float)
    p = bands[0].shape[0]
    out = np.zeros(theta.shape + (p, p), dtype=complex)
    for s, block in bands.items():
        out += np.exp(1j * theta * s)[..., None, None] * block
    return out


class SymbolBuilder:
    """Per (family, degree, stabilization kind) symbol factory.

    All pieces depend on delta affinely, so the builder exposes the
    delta-free folds and lets callers scale:

        mass(theta, delta) = Mg(theta) + delta * T(theta)      (T: SUPG only)
        conv(theta, delta) = C(theta)  + delta * S(theta)

    with unit dx and unit speed.
    """

    def __init__(self, family, degree, stab_kind):
        self.ref = build_reference_element(family, degree)
        self.kind = stab_kind
        p = degree
        loc = local_matrices(self.ref)
        self._mass = _band_from_local(loc.mass, p)
        self._conv = _band_from_local(loc.deriv, p)
        self._convT = _band_from_local(loc.deriv.T, p)
        self._gg = _band_from_local(loc.grad_grad, p)
        self._cip = _cip_bands(self.ref) if stab_kind == CIP else None
        self._lps_lumped = self.ref.family == "cubature"

    def mass_galerkin(self, theta):
        return _fold(self._mass, theta)

    def mass_supg_part(self, theta):
        return _fold(self._convT, theta) if self.kind == SUPG else None

    def conv_galerkin(self, theta):
        return _fold(self._conv, theta)

    def stab_part(self, theta):
        """Unit-delta stabilization symbol (None for unstabilized)."""
        if self.kind == NONE:
            return None
        if self.kind == SUPG:
            return _fold(self._gg, theta)
        if self.kind == CIP:
            return _fold(self._cip, theta)
        gg = _fold(self._gg, theta)
        grad = _fold(self._conv, theta)
        gradT = _fold(self._convT, theta)
        # projection mass: for cubature this fold is already the diagonal one
        mg = _fold(self._mass, theta)
        w_of_u = np.linalg.solve(mg, grad)
        return gg - gradT @ w_of_u

    def mass(self, theta, delta):
        m = self.mass_galerkin(theta)
        if self.kind == SUPG and delta != 0.0:
            m = m + delta * self.mass_supg_part(theta)
        return m

    def conv(self, theta, delta):
        c = self.conv_galerkin(theta)
        s = self.stab_part(theta)
        if s is not None and delta != 0.0:
            c = c + delta * s
        return c

    def lumped_diag(self, delta):
        """Row sums of the global mass operator (the theta = 0 fold)."""
        m0 = self.mass(np.array(0.0), delta)
        return np.real(m0 @ np.ones(self.ref.degree))


@lru_cache(maxsize=None)
def _builder(family, degree, stab_kind):
    return SymbolBuilder(family, degree, stab_kind)


@dataclass(frozen=True)
class SymbolPair:
    """Fourier-space mass and convection+stabilization matrices at theta."""

    theta: float
    mass_sym: np.ndarray   # includes the dx scaling
    conv_sym: np.ndarray   # unit speed; multiply by the speed downstream


def assemble_symbol(ref, stab, theta, dx=1.0, speed=1.0):
    """Reduced p x p symbol pair at theta in (0, pi].

    ``speed`` only enters through tau, where it cancels against the delta
    scalings; it is accepted for interface symmetry.
    """
    if isinstance(ref, tuple):
        ref = build_reference_element(*ref)
    b = _builder(ref.family, ref.degree, stab.kind)
    theta_arr = np.asarray(float(theta))
    return SymbolPair(
        float(theta),
        dx * b.mass(theta_arr, stab.delta),
        b.conv(theta_arr, stab.delta),
    )


@dataclass(frozen=True)
class ModeAnalysis:
    """Per-mode dispersion and damping at one theta."""

    theta: float
    omega_over_k: np.ndarray
    epsilon: np.ndarray
    eigenvalues: np.ndarray
    principal: int


def semidiscrete_modes(symbol, k, speed=1.0):
    """Semi-discrete modes: eigenvalues of speed M~^{-1} K~.

    omega = Im(lambda), eps = -Re(lambda); the principal mode minimizes
    |omega - speed k|.
    """
    A = speed * np.linalg.solve(symbol.mass_sym, symbol.conv_sym)
    lam = small_complex_eigenvalues(A)
    omega = np.imag(lam)
    eps = -np.real(lam)
    principal = int(np.argmin(np.abs(omega - speed * k)))
    return ModeAnalysis(symbol.theta, omega / k, eps, lam, principal)


@dataclass(frozen=True)
class AmplificationMatrix:
    """One-step Fourier propagator G at (theta, cfl, delta)."""

    theta: float
    cfl: float
    delta: float
    G: np.ndarray


def _z_matrix(builder, theta, delta, cfl, convention):
    """dt * (ODE operator) in Fourier space: -cfl * scale/dx * M^{-1} K."""
    p = builder.ref.degree
    factor = dt_scale(convention, 1.0, p)  # dx cancels, keep the 1/p choice
    M = builder.mass(theta, delta)
    K = builder.conv(theta, delta)
    return -cfl * factor * np.linalg.solve(M, K)


def _dec_propagator(Mt, Kt, Dvec, dt_over_dx_speed, config):
    """G for deferred correction by iterating the update in symbol space.

    Mt, Kt are the unit-scaled symbols (possibly batched ...xpxp), Dvec the
    real lumped diagonal, and dt_over_dx_speed = dt*speed/dx the
    dimensionless step.  Matches the solver-side update: only D is inverted.
    """
    p = Mt.shape[-1]
    eye = np.broadcast_to(np.eye(p, dtype=complex), Mt.shape).copy()
    Dinv = 1.0 / Dvec
    P = Dinv[..., :, None] * Mt          # D^{-1} M
    W = -dt_over_dx_speed * (Dinv[..., :, None] * Kt)  # dt D^{-1} r-symbol
    nsub = config.n_sub
    S = [eye.copy() for _ in range(nsub + 1)]
    for _ in range(config.n_iter):
        quad0 = [W @ S[z] for z in range(nsub + 1)]
        new = [eye]
        for m in range(1, nsub + 1):
            acc = sum(rho * quad0[z] for z, rho in enumerate(config.rho[m - 1]) if rho != 0.0)
            new.append(S[m] - P @ (S[m] - eye) + acc)
        S = new
    return S[nsub]


def amplification_matrix(ref, stab, scheme, theta, cfl, delta, dx=1.0,
                         speed=1.0, convention=DEFAULT_CONVENTION):
    """Fully discrete propagator G for one parameter point.

    RK and SSPRK use the expanded stability-polynomial form; deferred
    correction iterates the matrix update with the lumped diagonal taken
    from the row sums of the (possibly SUPG-augmented) mass symbol.
    """
    if isinstance(ref, tuple):
        ref = build_reference_element(*ref)
    if isinstance(scheme, str):
        scheme = make_scheme(scheme, ref.degree + 1)
    b = _builder(ref.family, ref.degree, stab.kind)
    theta_arr = np.asarray(float(theta))
    if scheme.kind in ("rk", "ssprk"):
        Z = _z_matrix(b, theta_arr, delta, cfl, convention)
        nu = expand_ssprk_coefficients(scheme.tableau)
        G = np.eye(ref.degree, dtype=complex)
        Zp = np.eye(ref.degree, dtype=complex)
        for nu_j in nu:
            Zp = Zp @ Z
            G = G + nu_j * Zp
    else:
        M = b.mass(theta_arr, delta)
        K = b.conv(theta_arr, delta)
        Dvec = b.lumped_diag(delta)
        factor = cfl * dt_scale(convention, 1.0, ref.degree)
        G = _dec_propagator(M, K, Dvec, factor, scheme.tableau)
    return AmplificationMatrix(float(theta), float(cfl), float(delta), G)


def extract_modes(amp_or_G, k, dt, speed=1.0):
    """Phase and damping of each eigenvalue of G.

    omega dt lands in (-pi, pi] through atan2; a zero eigenvalue maps to
    eps = -inf (total damping).  The principal mode minimizes
    |omega - speed k|.
    """
    G = amp_or_G.G if isinstance(amp_or_G, AmplificationMatrix) else amp_or_G
    theta = amp_or_G.theta if isinstance(amp_or_G, AmplificationMatrix) else float("nan")
    lam = small_complex_eigenvalues(G)
    mod = np.abs(lam)
    omega = np.arctan2(-np.imag(lam), np.real(lam)) / dt
    with np.errstate(divide="ignore"):
        eps = np.where(mod > 0.0, np.log(np.where(mod > 0, mod, 1.0)) / dt, -np.inf)
    principal = int(np.argmin(np.abs(omega - speed * k)))
    return ModeAnalysis(theta, omega / k, eps, lam, principal)
