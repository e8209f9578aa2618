"""(CFL, delta) parameter scans: stability masks, error functionals, optima.

A scan sweeps a geometric (CFL, delta) grid for one combination of element
family, degree, stabilization and time scheme.  Wavenumbers are sampled on
the resolvable range k dx_p in (0, 2pi/3] with dx_p = 1 (at least three
dofs per wavelength); the same samples feed both the stability mask
(unstable iff any mode has eps = log|lambda|/dt > 1e-12) and the two error
functionals

    eta_u^2 = 3/(2pi) [ int (e^eps - 1)^2 dk + int e^eps (w - w_ex)^2 dk ]
    eta_w^2 = int ((w - w_ex)/w_ex)^2 dk,

evaluated on the principal mode with w_ex = k.  Three selection strategies
are offered: plain CFL maximization over the stable cells, and CFL
maximization subject to eta <= mu * min(eta) for either functional
(mu = 1.3 by default).  Ties prefer the largest delta, matching how the
reference tables mark ambiguous optima.

Results are speed invariant: the scan runs at unit advection speed and
unit dof spacing, and the per-cell CFL convention makes dt = cfl * dx.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .fourier import DEFAULT_CONVENTION, EigenSolveFailure, _builder, dt_scale, eigvals_batched
from .timeint import expand_ssprk_coefficients, make_scheme

K_MAX = 2.0 * np.pi / 3.0
EPS_TOL = 1e-12


class NoStableRegion(RuntimeError):
    """The stability mask is empty for this combination."""


def geometric_grid(lo, hi, ratio=1.03, anchor=1.0):
    """Geometric grid anchor * ratio^n covering [lo, hi]."""
    if not (ratio > 1.0 and hi > lo > 0.0):
        raise ValueError("need ratio > 1 and 0 < lo < hi")
    n_lo = int(np.ceil(np.log(lo / anchor) / np.log(ratio) - 1e-12))
    n_hi = int(np.floor(np.log(hi / anchor) / np.log(ratio) + 1e-12))
    return anchor * ratio ** np.arange(n_lo, n_hi + 1)


@dataclass(frozen=True)
class ScanGrid:
    """Grids for the (CFL, delta) sweep plus the wavenumber sample count."""

    cfl_values: np.ndarray
    delta_values: np.ndarray
    theta_samples: int = 100

    def __post_init__(self):
        for vals in (self.cfl_values, self.delta_values):
            v = np.asarray(vals, dtype=float)
            if v.ndim != 1 or len(v) == 0 or np.any(np.diff(v) <= 0) or v[0] <= 0:
                raise ValueError("grids must be strictly increasing and positive")

    @classmethod
    def default(cls, cfl_range=(0.01, 4.0), delta_range=(1e-4, 4.0),
                ratio_cfl=1.03, ratio_delta=1.03, theta_samples=100):
        """Grids matching the reference tables (ratio 1.03, anchored at 1)."""
        return cls(
            geometric_grid(*cfl_range, ratio=ratio_cfl),
            geometric_grid(*delta_range, ratio=ratio_delta),
            theta_samples,
        )


@dataclass
class Combination:
    """One (family, degree, stabilization, time scheme) configuration."""

    family: str
    degree: int
    stab_kind: str
    scheme_kind: str

    def label(self):
        return f"{self.family}-p{self.degree}-{self.stab_kind}-{self.scheme_kind}"


@dataclass
class ScanResult:
    combination: Combination
    grid: ScanGrid
    stable: np.ndarray        # (n_cfl, n_delta) bool
    eta_u: np.ndarray         # NaN where unstable
    eta_w: np.ndarray
    optima: dict              # strategy -> dict(cfl, delta, objective, monotone_safe)
    convention: str = DEFAULT_CONVENTION
    mu: float = 1.3
    eig_failures: int = 0

    def to_json(self):
        def clean(x):
            return np.where(np.isfinite(x), x, None).tolist()
        payload = {
            "combination": vars(self.combination),
            "convention": self.convention,
            "mu": self.mu,
            "cfl_values": self.cfl_values.tolist(),
            "delta_values": self.delta_values.tolist(),
            "theta_samples": self.grid.theta_samples,
            "stable": self.stable.astype(int).tolist(),
            "eta_u": clean(self.eta_u),
            "eta_w": clean(self.eta_w),
            "optima": self.optima,
            "eig_failures": self.eig_failures,
        }
        return json.dumps(payload, indent=1)

    @property
    def cfl_values(self):
        return self.grid.cfl_values

    @property
    def delta_values(self):
        return self.grid.delta_values

    def mask_csv(self):
        lines = ["# " + self.combination.label(), "# convention=" + self.convention,
                 "cfl,delta,stable,eta_u,eta_w"]
        for i, c in enumerate(self.cfl_values):
            for j, d in enumerate(self.delta_values):
                eu, ew = self.eta_u[i, j], self.eta_w[i, j]
                lines.append(
                    f"{c:.12g},{d:.12g},{int(self.stable[i, j])},"
                    f"{eu:.12g},{ew:.12g}"
                )
        return "\n".join(lines) + "\n"


def _wavenumbers(n):
    return K_MAX * np.arange(1, n + 1) / n


def _dec_cfl_polynomial(M, K, Dvec, scale, config):
    """Coefficient matrices H_q with G(cfl) = sum_q cfl^q H_q.

    The deferred-correction update is iterated once with the time step kept
    symbolic; each sweep raises the polynomial degree by one, so the final
    degree equals the iteration count.
    """
    p = M.shape[-1]
    nq = config.n_iter + 1
    eye = np.broadcast_to(np.eye(p, dtype=complex), M.shape)
    Dinv = 1.0 / Dvec
    P = Dinv[..., :, None] * M
    W = -scale * (Dinv[..., :, None] * K)
    zeros = np.zeros_like(eye)

    def fresh():
        S = [zeros.copy() for _ in range(nq)]
        S[0] = eye.copy()
        return S

    subs = [fresh() for _ in range(config.n_sub + 1)]
    for _ in range(config.n_iter):
        new = [fresh()]
        for m in range(1, config.n_sub + 1):
            Sm = subs[m]
            out = [None] * nq
            for q in range(nq):
                acc = Sm[q] - P @ (Sm[q] - (eye if q == 0 else zeros))
                if q > 0:
                    for z, rho in enumerate(config.rho[m - 1]):
                        if rho != 0.0:
                            acc = acc + rho * (W @ subs[z][q - 1])
                out[q] = acc
            new.append(out)
        subs = new
    return np.stack(subs[config.n_sub], axis=0)  # (nq, ..., p, p)


def _mode_fields(comb, grid, convention, deltas=None):
    """lambda(G) for every (cfl, delta, k, mode); returns (lam, dt_row).

    Shapes: lam is (n_cfl, n_delta, n_k, p); dt_row is (n_cfl,).
    """
    p = comb.degree
    b = _builder(comb.family, p, comb.stab_kind)
    scheme = make_scheme(comb.scheme_kind, p + 1)
    k = _wavenumbers(grid.theta_samples)
    theta = p * k                     # dx = p when dx_p = 1
    cfls = grid.cfl_values
    deltas = grid.delta_values if deltas is None else np.asarray(deltas)
    scale = dt_scale(convention, 1.0, p)   # dt = cfl*scale*dx/speed, dx folded out
    lam = np.empty((len(cfls), len(deltas), len(k), p), dtype=complex)
    failures = 0
    nu = expand_ssprk_coefficients(scheme.tableau) if comb.scheme_kind in ("rk", "ssprk") else None
    for j, d in enumerate(deltas):
        try:
            M = b.mass(theta, d)
            Kt = b.conv(theta, d)
            if nu is not None:
                lamA = eigvals_batched(np.linalg.solve(M, Kt))
                z = -scale * np.multiply.outer(cfls, lamA)    # (ncfl, nk, p)
                G = np.ones_like(z)
                zp = np.ones_like(z)
                for nu_j in nu:
                    zp = zp * z
                    G = G + nu_j * zp
                lam[:, j] = G
            else:
                Dv = b.lumped_diag(d)
                H = _dec_cfl_polynomial(M, Kt, Dv, scale, scheme.tableau)
                powers = cfls[:, None] ** np.arange(H.shape[0])[None, :]
                G = np.tensordot(powers, H, axes=(1, 0))      # (ncfl, nk, p, p)
                lam[:, j] = eigvals_batched(G.reshape(-1, p, p)).reshape(
                    len(cfls), len(k), p
                )
        except (EigenSolveFailure, np.linalg.LinAlgError):
            # flag the whole delta column as unstable rather than crash
            lam[:, j] = 2.0
            failures += 1
    dt_row = cfls * scale * p          # dx = p, speed = 1
    return lam, dt_row, k, failures


def stability_mask(comb, grid, convention=DEFAULT_CONVENTION):
    """Boolean (n_cfl, n_delta) mask: True where max eps <= 1e-12."""
    lam, dt_row, _, _ = _mode_fields(comb, grid, convention)
    max_mod = np.abs(lam).max(axis=(2, 3))
    return max_mod <= np.exp(EPS_TOL * dt_row)[:, None]


def eta_u(k, omega, epsilon):
    """Combined damping + dispersion error of the principal mode.

    Trapezoid integration over the k samples; omega and epsilon are the
    principal-mode curves, the exact phase is k itself (unit speed).
    """
    k = np.asarray(k, dtype=float)
    damp = np.trapezoid((np.exp(epsilon) - 1.0) ** 2, k, axis=-1)
    disp = np.trapezoid(np.exp(epsilon) * (omega - k) ** 2, k, axis=-1)
    return np.sqrt(3.0 / (2.0 * np.pi) * (damp + disp))


def eta_w(k, omega):
    """Relative dispersion error of the principal mode."""
    k = np.asarray(k, dtype=float)
    return np.sqrt(np.trapezoid(((omega - k) / k) ** 2, k, axis=-1))


def scan_combination(comb, grid=None, convention=DEFAULT_CONVENTION, mu=1.3):
    """Full sweep: mask, error fields, and the three optima."""
    grid = grid or ScanGrid.default()
    lam, dt_row, k, failures = _mode_fields(comb, grid, convention)
    mod = np.abs(lam)
    stable = mod.max(axis=(2, 3)) <= np.exp(EPS_TOL * dt_row)[:, None]

    dt = dt_row[:, None, None, None]
    omega = np.arctan2(-lam.imag, lam.real) / dt
    with np.errstate(divide="ignore"):
        eps = np.where(mod > 0.0, np.log(np.where(mod > 0.0, mod, 1.0)), -np.inf) / dt

    pick = np.argmin(np.abs(omega - k[None, None, :, None]), axis=-1)
    omega_p = np.take_along_axis(omega, pick[..., None], axis=-1)[..., 0]
    eps_p = np.take_along_axis(eps, pick[..., None], axis=-1)[..., 0]

    eu = eta_u(k, omega_p, eps_p)
    ew = eta_w(k, omega_p)
    eu = np.where(stable, eu, np.nan)
    ew = np.where(stable, ew, np.nan)

    result = ScanResult(comb, grid, stable, eu, ew, {}, convention, mu, failures)
    for strategy in ("max_cfl", "min_eta_u", "min_eta_w"):
        try:
            cfl, delta, obj = optimize(result, strategy, mu=mu)
        except NoStableRegion:
            result.optima[strategy] = None
            continue
        result.optima[strategy] = {
            "cfl": cfl,
            "delta": delta,
            "objective": obj,
            "monotone_safe": monotone_safety_check(result, cfl, delta),
        }
    return result


def optimize(result, strategy, mu=1.3, grid=None, convention=DEFAULT_CONVENTION):
    """Pick (CFL*, delta*) for one strategy.

    Accepts either a completed ScanResult or a Combination (which is then
    scanned first).  max_cfl: largest stable CFL, ties broken by the
    largest delta.  min_eta_u / min_eta_w: among stable cells whose
    objective stays below mu times the global stable minimum, the largest
    CFL; ties prefer the smaller objective, then the larger delta.
    """
    if isinstance(result, Combination):
        result = scan_combination(result, grid, convention=convention, mu=mu)
    stable = result.stable
    if not stable.any():
        raise NoStableRegion(result.combination.label())
    cfls, deltas = result.cfl_values, result.delta_values
    if strategy == "max_cfl":
        i = int(np.max(np.nonzero(stable.any(axis=1))[0]))
        j = int(np.max(np.nonzero(stable[i])[0]))
        return float(cfls[i]), float(deltas[j]), float("nan")
    field = {"min_eta_u": result.eta_u, "min_eta_w": result.eta_w}[strategy]
    finite = stable & np.isfinite(field)
    if not finite.any():
        raise NoStableRegion(f"{result.combination.label()}: no finite objective")
    best = np.nanmin(field[finite])
    feasible = finite & (field <= mu * best + 1e-12)
    i = int(np.max(np.nonzero(feasible.any(axis=1))[0]))
    js = np.nonzero(feasible[i])[0]
    row = field[i, js]
    j_best = js[row <= row.min() + 1e-15]
    j = int(j_best.max())
    return float(cfls[i]), float(deltas[j]), float(field[i, j])


def monotone_safety_check(result, cfl, delta):
    """True iff every grid CFL below the optimum is stable at delta.

    False flags stripe or box shaped stable regions whose optimum cannot
    be reached by lowering the CFL.
    """
    j = int(np.argmin(np.abs(result.delta_values - delta)))
    rows = result.cfl_values <= cfl * (1 + 1e-12)
    return bool(result.stable[rows, j].all())
