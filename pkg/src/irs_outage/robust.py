"""Bernstein-type certificates and the constraint blocks of both subproblems.

Notation (all matrices column-major, ``vec`` as in :mod:`matrix_kit`):

* ``Xi = (beta-1) Z - W`` (Eve) and ``Xi_b = (gamma-1) Z - W`` (Bob).
* ``a_k = h_ae,k + G_ce,k^H phi*`` is the nominal Eve channel, so that
  ``c_k = a_k^H Xi a_k + (beta-1) sigma_e^2``.
* Partial errors: ``vec(dG) = S_g v`` with ``v ~ CN(0, I_{M Nt})`` and
  ``A = S_g (Xi^T kron E) S_g``, ``u = S_g (Xi* kron I_M) (a* kron phi*)``,
  ``E = phi* phi^T``.
* Full errors: stacked ``[v_he; conj(v_ge)]`` with the 2x2 block ``A~`` and
  ``u~ = [S_h Xi a; S_g^T ((Xi a) kron phi)]``.

The chance constraint ``Pr{v^H A v + 2 Re(u^H v) + c >= 0} >= 1 - rho`` is
enforced through the three certificate rows (trace row, norm row, shifted
PSD row).

The phase-shift subproblem needs the rows to be convex in ``phi``.  Two
families of bounds are available (``bounds=``):

``"paper"``  spectral-norm bound ``sigma_max(S_g (Xi* kron I))`` on the
             linear term and the shifted ``W + Z_g`` factor for the PSD row.
``"tight"``  ``sqrt(lambda_max(Sigma)) * ||Xi a||`` on the linear term and the
             positive part of ``W - (beta-1) Z`` for the PSD row.  Both are
             valid upper bounds; for scaled-identity covariances they are exact
             at unit modulus, so the previous phase vector stays admissible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import FULL, PARTIAL, ChannelSet, CsiUncertainty, ScenarioConfig
from .conic import Affine, ConicProgram, apply_linear, bmat, quad_lin
from .matrix_kit import (
    DimensionError,
    NonPsdError,
    PSD_CLAMP,
    eig_extremes,
    hermitize,
    lambda_max,
    psd_factor,
    spectral_norm,
    unvec_remap,
)

BOUNDS = ("paper", "tight")


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass
class BtiCertificate:
    a_mat: np.ndarray
    u_vec: np.ndarray
    c: float
    rho: float
    x: float | None = None
    y: float | None = None

    def slacks(self) -> tuple[float, float]:
        return bti_slacks(self.a_mat, self.u_vec)

    def margin(self) -> float:
        return bti_margin(self.a_mat, self.u_vec, self.c, self.rho)


def bti_slacks(a_mat, u_vec) -> tuple[float, float]:
    """Smallest admissible ``(x, y)``: ``x = ||[vec A; sqrt2 u]||``, ``y = max(lambda_max(-A), 0)``."""
    a_mat = np.atleast_2d(np.asarray(a_mat, dtype=complex))
    u_vec = np.asarray(u_vec, dtype=complex).ravel()
    x = float(np.sqrt(np.sum(np.abs(a_mat) ** 2) + 2 * np.sum(np.abs(u_vec) ** 2)))
    if a_mat.size == 0:
        return x, 0.0
    y = max(-eig_extremes(hermitize(a_mat))[0], 0.0)
    return x, float(y)


def bti_margin(a_mat, u_vec, c: float, rho: float) -> float:
    """Left side of the trace row evaluated at the smallest admissible slacks."""
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must lie in (0, 1]")
    x, y = bti_slacks(a_mat, u_vec)
    tr = float(np.real(np.trace(np.atleast_2d(a_mat))))
    return tr - np.sqrt(-2.0 * np.log(rho)) * x + np.log(rho) * y + float(c)


def bti_holds(cert: BtiCertificate, tol: float = 0.0) -> bool:
    """All three certificate conditions; given slacks are checked as is, otherwise optimal ones are used."""
    if cert.x is None or cert.y is None:
        return cert.margin() >= -tol
    a = np.atleast_2d(np.asarray(cert.a_mat, dtype=complex))
    xs, ys = bti_slacks(a, cert.u_vec)
    tr = float(np.real(np.trace(a)))
    row = tr - np.sqrt(-2.0 * np.log(cert.rho)) * cert.x + np.log(cert.rho) * cert.y + cert.c
    return bool(row >= -tol and xs <= cert.x + tol and cert.y >= -tol and ys <= cert.y + tol)


# ---------------------------------------------------------------------------
# explicit blocks at a fixed design
# ---------------------------------------------------------------------------


def xi_eve(w, z, beta: float) -> np.ndarray:
    return (beta - 1.0) * np.asarray(z, dtype=complex) - np.asarray(w, dtype=complex)


def xi_bob(w, z, gamma: float) -> np.ndarray:
    return (gamma - 1.0) * np.asarray(z, dtype=complex) - np.asarray(w, dtype=complex)


def nominal_eve(ch: ChannelSet, k: int, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex).ravel()
    return ch.h_ae[k] + ch.g_ce[k].conj().T @ phi.conj()


def _a_block_partial(s_g, xi, phi):
    e = np.outer(phi.conj(), phi)
    return s_g @ np.kron(xi.T, e) @ s_g


def _u_block_partial(s_g, xi, a, phi):
    m = phi.size
    return s_g @ np.kron(xi.conj(), np.eye(m)) @ np.kron(a.conj(), phi.conj())


def _a_block_full(s_h, s_g, xi, phi):
    phi = phi.reshape(-1, 1)
    e = phi.conj() @ phi.T
    tl = s_h @ xi @ s_h
    tr = s_h @ np.kron(xi, phi.conj().T) @ s_g.conj()
    bl = s_g.T @ np.kron(xi, phi) @ s_h
    br = s_g.T @ np.kron(xi, e.T) @ s_g.conj()
    return np.block([[tl, tr], [bl, br]])


def _u_block_full(s_h, s_g, xi, a, phi):
    xa = xi @ a
    return np.concatenate([s_h @ xa, s_g.T @ np.kron(xa, phi)])


def eve_quadratic_blocks_partial(ch: ChannelSet, unc: CsiUncertainty, w, z, phi, k: int,
                                 beta: float, sigma_e2: float):
    """Explicit ``(A, u, c)`` for the cascaded-error scenario."""
    phi = np.asarray(phi, dtype=complex).ravel()
    if phi.size != ch.m:
        raise DimensionError("phi length differs from M")
    xi = xi_eve(w, z, beta)
    a = nominal_eve(ch, k, phi)
    s_g = unc.sigma_ge_half[k]
    c = float(np.real(a.conj() @ xi @ a)) + (beta - 1.0) * sigma_e2
    return _a_block_partial(s_g, xi, phi), _u_block_partial(s_g, xi, a, phi), c


def eve_quadratic_blocks_full(ch: ChannelSet, unc: CsiUncertainty, w, z, phi, k: int,
                              beta: float, sigma_e2: float):
    """Explicit ``(A~, u~, c)`` over the stacked error ``[v_he; conj(v_ge)]``."""
    if unc.sigma_he is None:
        raise ValueError("full-error blocks need sigma_he")
    phi = np.asarray(phi, dtype=complex).ravel()
    xi = xi_eve(w, z, beta)
    a = nominal_eve(ch, k, phi)
    s_g, s_h = unc.sigma_ge_half[k], unc.sigma_he_half[k]
    c = float(np.real(a.conj() @ xi @ a)) + (beta - 1.0) * sigma_e2
    return _a_block_full(s_h, s_g, xi, phi), _u_block_full(s_h, s_g, xi, a, phi), c


def eve_blocks(ch, unc, w, z, phi, k, beta, sigma_e2):
    if unc.scenario == FULL:
        return eve_quadratic_blocks_full(ch, unc, w, z, phi, k, beta, sigma_e2)
    return eve_quadratic_blocks_partial(ch, unc, w, z, phi, k, beta, sigma_e2)


def certificates(ch: ChannelSet, unc: CsiUncertainty, cfg: ScenarioConfig, w, z, phi) -> list[BtiCertificate]:
    out = []
    for k in range(ch.k):
        a, u, c = eve_blocks(ch, unc, w, z, phi, k, cfg.beta, cfg.sigma_e2)
        out.append(BtiCertificate(a, u, c, cfg.rho[k]))
    return out


def bob_margin(ch: ChannelSet, w, z, phi, gamma: float, sigma_b2: float) -> float:
    """``h_b^H (W - (gamma-1) Z) h_b - (gamma-1) sigma_b^2`` (>= 0 when the rate target holds)."""
    h = ch.h_ab + ch.g_cb.conj().T @ np.asarray(phi, dtype=complex).conj()
    return float(np.real(h.conj() @ (np.asarray(w) - (gamma - 1.0) * np.asarray(z)) @ h)) - (gamma - 1.0) * sigma_b2


def robust_margins(ch, unc, cfg: ScenarioConfig, w, z, phi) -> np.ndarray:
    """``[bob margin, eve certificate margins...]``; all >= 0 means the design is certified."""
    eves = [cert.margin() for cert in certificates(ch, unc, cfg, w, z, phi)]
    return np.array([bob_margin(ch, w, z, phi, cfg.gamma, cfg.sigma_b2)] + eves)


def margin_scale(ch, cfg: ScenarioConfig, w, z) -> float:
    """Magnitude used to turn absolute margins into relative ones."""
    p = float(np.real(np.trace(np.asarray(w) + np.asarray(z))))
    gain = max(float(np.sum(np.abs(ch.h_ab) ** 2) + np.sum(np.abs(ch.g_cb) ** 2)) * max(ch.m, 1), 1e-300)
    return max((cfg.gamma - 1.0) * cfg.sigma_b2, cfg.sigma_b2, p * gain)


# ---------------------------------------------------------------------------
# linear lifts (used to express blocks as affine functions of W, Z)
# ---------------------------------------------------------------------------


def lift(func, nt: int) -> np.ndarray:
    """Matrix of the linear map ``X -> vec(func(X))`` on column-major ``vec(X)``."""
    cols = []
    for j in range(nt):
        for i in range(nt):
            e = np.zeros((nt, nt), complex)
            e[i, j] = 1.0
            cols.append(np.asarray(func(e), dtype=complex).reshape(-1, order="F"))
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# (W, Z) subproblem
# ---------------------------------------------------------------------------


@dataclass
class WzHandles:
    w: Affine
    z: Affine
    x: Affine | None
    y: Affine | None
    objective: Affine


def wz_constraints(p: ConicProgram, ch: ChannelSet, unc: CsiUncertainty, cfg: ScenarioConfig, phi,
                   w: Affine, z: Affine) -> tuple[Affine | None, Affine | None]:
    """Add Bob, PSD and per-Eve certificate rows for fixed ``phi``; returns the slack handles."""
    phi = np.asarray(phi, dtype=complex).ravel()
    nt, m, kk = ch.nt, ch.m, ch.k
    beta, gamma = cfg.beta, cfg.gamma
    h_b = ch.h_ab + ch.g_cb.conj().T @ phi.conj()
    # Bob: h^H [W - (gamma-1) Z] h >= (gamma-1) sigma_b^2
    p.add_nonneg(quad_lin(h_b, w - (gamma - 1.0) * z, h_b) - (gamma - 1.0) * cfg.sigma_b2, "bob")
    p.add_psd(w, "W>=0")
    p.add_psd(z, "Z>=0")
    if kk == 0:
        return None, None
    xs = p.add_var(kk, "x")
    ys = p.add_var(kk, "y")
    p.add_nonneg(ys, "y>=0")
    xi = (beta - 1.0) * z - w
    for k in range(kk):
        rho = cfg.rho[k]
        a_vec = nominal_eve(ch, k, phi)
        s_g = unc.sigma_ge_half[k]
        if unc.scenario == FULL:
            s_h = unc.sigma_he_half[k]
            a_op = lift(lambda e: _a_block_full(s_h, s_g, e, phi), nt)
            u_op = lift(lambda e: _u_block_full(s_h, s_g, e, a_vec, phi), nt)
            dim = nt + m * nt
            a_expr = apply_linear(a_op, xi, (dim, dim))
            u_expr = apply_linear(u_op, xi, (dim,))
        else:
            a_op = lift(lambda e: _a_block_partial(s_g, e, phi), nt)
            # u is conjugate-linear in Xi: lift on Xi* and feed the conjugated expression
            u_op = lift(lambda e: s_g @ np.kron(e, np.eye(m)) @ np.kron(a_vec.conj(), phi.conj()), nt)
            dim = m * nt
            a_expr = apply_linear(a_op, xi, (dim, dim))
            u_expr = apply_linear(u_op, xi.conj(), (dim,))
        c_expr = quad_lin(a_vec, xi, a_vec) + (beta - 1.0) * cfg.sigma_e2
        row = a_expr.trace() - np.sqrt(-2.0 * np.log(rho)) * xs[k] + np.log(rho) * ys[k] + c_expr
        p.add_nonneg(row, f"eve{k}:trace")
        p.add_soc(xs[k], [a_expr.vec(), np.sqrt(2.0) * u_expr], f"eve{k}:norm")
        p.add_psd(a_expr + _scaled_identity(ys[k], dim), f"eve{k}:psd")
    return xs, ys


def _scaled_identity(scalar: Affine, dim: int) -> Affine:
    """``scalar * I_dim`` as a matrix expression."""
    idx = np.arange(dim) * (dim + 1)
    coef = np.zeros((dim * dim, scalar.nvars), complex)
    coef[idx] = scalar.coef[0]
    const = np.zeros(dim * dim, complex)
    const[idx] = scalar.const[0]
    return Affine(coef, const, (dim, dim))


def build_wz_program(ch: ChannelSet, unc: CsiUncertainty, cfg: ScenarioConfig, phi) -> tuple[ConicProgram, WzHandles]:
    p = ConicProgram()
    w = p.add_hermitian_var(ch.nt, "W")
    z = p.add_hermitian_var(ch.nt, "Z")
    xs, ys = wz_constraints(p, ch, unc, cfg, phi, w, z)
    obj = (w + z).trace()
    p.minimize(obj)
    return p, WzHandles(w, z, xs, ys, obj)


# ---------------------------------------------------------------------------
# phase-shift subproblem
# ---------------------------------------------------------------------------


@dataclass
class EvePhiBlock:
    """Constants of one Eve's convexified rows for fixed ``(W, Z)``."""

    rho: float
    q_mat: np.ndarray  # shifted quadratic matrix (NSD): phi^T Q phi*
    lin: np.ndarray  # 2 Re{phi^T lin}
    const: float  # everything constant, including the M * shift terms
    c_c: float
    c_t: float
    c_g: float
    q_t: np.ndarray  # unshifted Sigma_gx (I kron Xi) Sigma_gx^H
    q_c: np.ndarray  # unshifted G Xi G^H
    soc_const: np.ndarray  # constant part of the norm row
    soc_gain: float  # scalar in front of the phi-dependent part
    soc_mat: np.ndarray  # phi-dependent part: soc_gain * (soc_mat @ (h* + G^T phi))
    eig_top: np.ndarray | None  # constant rows of the eigen factor (full scenario)
    eig_cols: list  # per column: (matrix acting on phi or phi*, conj flag)
    h_conj: np.ndarray
    g_t: np.ndarray


@dataclass
class PhiBlocks:
    scenario: str
    bounds: str
    m: int
    eves: list[EvePhiBlock]
    q_b: np.ndarray
    lin_b: np.ndarray
    const_b: float
    c_b: float
    xi: np.ndarray
    xi_b: np.ndarray
    extra: dict = field(default_factory=dict)


def _nsd(q: np.ndarray) -> np.ndarray:
    """Hermitian part; tiny positive eigenvalues from round-off are removed."""
    q = hermitize(q)
    w, v = np.linalg.eigh(q)
    scale = max(float(np.max(np.abs(w), initial=0.0)), 1e-300)
    if w[-1] > 1e-7 * scale:
        raise NonPsdError(f"shifted matrix has eigenvalue {w[-1]:.3e} > 0")
    return (v * np.minimum(w, 0.0)) @ v.conj().T


def _psd_part(q: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(q))
    return (v * np.maximum(w, 0.0)) @ v.conj().T


def shift_constants(ch: ChannelSet, unc: CsiUncertainty, z, k: int, beta: float) -> dict:
    """``c_c``, ``c_t`` and ``c_g`` for Eve ``k`` (each a lambda_max of a PSD matrix)."""
    zb = (beta - 1.0) * hermitize(np.asarray(z, dtype=complex))
    g = ch.g_ce[k]
    sgx = unvec_remap(unc.sigma_ge_half[k], ch.m, ch.nt)
    c_c = max(lambda_max(hermitize(g @ zb @ g.conj().T)), 0.0) if ch.m else 0.0
    c_t = max(lambda_max(hermitize(sgx @ np.kron(np.eye(ch.m * ch.nt), zb) @ sgx.conj().T)), 0.0) if ch.m else 0.0
    c_g = max(lambda_max(zb), 0.0)
    return {"c_c": c_c, "c_t": c_t, "c_g": c_g, "sgx": sgx}


def phi_blocks(ch: ChannelSet, unc: CsiUncertainty, cfg: ScenarioConfig, w, z, bounds: str = "paper") -> PhiBlocks:
    """All constants of the convexified phase-shift rows for fixed ``(W, Z)``."""
    if bounds not in BOUNDS:
        raise ValueError(f"bounds must be one of {BOUNDS}")
    w = hermitize(np.asarray(w, dtype=complex))
    z = hermitize(np.asarray(z, dtype=complex))
    m, nt = ch.m, ch.nt
    beta, gamma = cfg.beta, cfg.gamma
    xi = xi_eve(w, z, beta)
    eves = []
    for k in range(ch.k):
        sh = shift_constants(ch, unc, z, k, beta)
        c_c, c_t, c_g, sgx = sh["c_c"], sh["c_t"], sh["c_g"], sh["sgx"]
        g = ch.g_ce[k]
        h = ch.h_ae[k]
        q_t = hermitize(sgx @ np.kron(np.eye(m * nt), xi) @ sgx.conj().T)
        q_c = hermitize(g @ xi @ g.conj().T)
        q = _nsd(q_t - c_t * np.eye(m) + q_c - c_c * np.eye(m))
        lin = g @ xi @ h
        const = float(np.real(h.conj() @ xi @ h)) + m * (c_t + c_c) + (beta - 1.0) * cfg.sigma_e2
        s_g = unc.sigma_ge_half[k]
        lam_g = max(lambda_max(unc.sigma_ge[k]), 0.0)
        if unc.scenario == FULL:
            s_h = unc.sigma_he_half[k]
            lam_h = max(lambda_max(unc.sigma_he[k]), 0.0)
            const += float(np.real(np.trace(s_h @ xi @ s_h)))
            soc_const = (lam_h + m * lam_g) * xi.reshape(-1, order="F")
            if bounds == "paper":
                gain = np.sqrt(2.0 * (spectral_norm(s_h @ xi) ** 2
                                      + spectral_norm(s_g.T @ np.kron(xi, np.eye(m))) ** 2 * m))
                soc_mat = np.eye(nt)
            else:
                gain = np.sqrt(2.0 * (lam_h + m * lam_g))
                soc_mat = xi.conj()
        else:
            soc_const = lam_g * m * xi.reshape(-1, order="F")
            if bounds == "paper":
                gain = np.sqrt(2.0 * m) * spectral_norm(s_g @ np.kron(xi.conj(), np.eye(m)))
                soc_mat = np.eye(nt)
            else:
                gain = np.sqrt(2.0 * m * lam_g)
                soc_mat = xi.conj()
        # eigen row factor V V^H
        if bounds == "paper":
            base = w + c_g * np.eye(nt) - (beta - 1.0) * z
        else:
            base = _psd_part(w - (beta - 1.0) * z)
        v = psd_factor(base).factor
        cols = []
        eig_top = None
        if unc.scenario == FULL:
            eig_top = unc.sigma_he_half[k] @ v
            for j in range(v.shape[1]):
                # S_g^T (v_j kron phi) = S_g^T (v_j kron I_M) phi
                cols.append((s_g.T @ np.kron(v[:, j].reshape(-1, 1), np.eye(m)), False))
        else:
            for j in range(v.shape[1]):
                # S_g (v_j* kron phi*) = S_g (v_j* kron I_M) phi*
                cols.append((s_g @ np.kron(v[:, j].conj().reshape(-1, 1), np.eye(m)), True))
        eves.append(EvePhiBlock(cfg.rho[k], q, lin, const, c_c, c_t, c_g, q_t, q_c, soc_const, float(gain),
                                soc_mat, eig_top, cols, h.conj(), g.T))
    xi_b = xi_bob(w, z, gamma)
    qb0 = hermitize(ch.g_cb @ xi_b @ ch.g_cb.conj().T)
    c_b = eig_extremes(qb0)[0] if m else 0.0
    q_b = _psd_part(qb0 - c_b * np.eye(m))
    lin_b = ch.g_cb @ xi_b @ ch.h_ab
    const_b = float(np.real(ch.h_ab.conj() @ xi_b @ ch.h_ab)) + (gamma - 1.0) * cfg.sigma_b2 + m * c_b
    return PhiBlocks(unc.scenario, bounds, m, eves, q_b, lin_b, const_b, c_b, xi, xi_b)


def _phi_quad_factor(q_signed: np.ndarray) -> np.ndarray:
    """``F`` with ``||F phi||^2 = phi^T Q phi*`` for PSD ``Q``."""
    f = psd_factor(q_signed, rank_tol=1e-13).factor
    return f.T if f.size else np.zeros((1, q_signed.shape[0]))


def tc_value(blk: EvePhiBlock, phi, x: float = 0.0, y: float = 0.0, delta: float = 0.0) -> float:
    """Shifted concave trace-row value at ``phi``."""
    phi = np.asarray(phi, dtype=complex).ravel()
    quad = float(np.real(phi @ blk.q_mat @ phi.conj()))
    lin = 2.0 * float(np.real(phi @ blk.lin))
    return quad + lin + blk.const - np.sqrt(-2.0 * np.log(blk.rho)) * x + np.log(blk.rho) * y - delta


def bob_value(pb: PhiBlocks, phi, delta0: float = 0.0) -> float:
    """Shifted Bob row ``b(phi)`` (feasible when <= 0)."""
    phi = np.asarray(phi, dtype=complex).ravel()
    return float(np.real(phi @ pb.q_b @ phi.conj())) + 2.0 * float(np.real(phi @ pb.lin_b)) + pb.const_b + delta0


def soc_value(blk: EvePhiBlock, phi) -> float:
    phi = np.asarray(phi, dtype=complex).ravel()
    arg = blk.soc_mat @ (blk.h_conj + blk.g_t @ phi)
    return float(np.linalg.norm(np.concatenate([blk.soc_const, blk.soc_gain * arg])))


def eig_value(blk: EvePhiBlock, phi) -> float:
    """Squared spectral norm of the eigen-row factor at ``phi``."""
    phi = np.asarray(phi, dtype=complex).ravel()
    cols = [mat @ (phi.conj() if cj else phi) for mat, cj in blk.eig_cols]
    if not cols:
        return 0.0
    f = np.stack(cols, axis=1)
    if blk.eig_top is not None:
        f = np.vstack([blk.eig_top, f])
    return spectral_norm(f) ** 2


@dataclass
class PhiHandles:
    phi: Affine
    delta: Affine
    x: Affine | None
    y: Affine | None
    b: Affine
    objective_delta: Affine
    penalty: Affine


def ccp_modulus_rows(p: ConicProgram, phi: Affine, phi_n, b: Affine):
    """Linearized lower-modulus rows and convex upper-modulus rows with slacks ``b`` (length 2M)."""
    phi_n = np.asarray(phi_n, dtype=complex).ravel()
    if np.any(np.abs(phi_n) == 0):
        raise ValueError("linearization point has a zero entry")
    m = phi_n.size
    p.add_nonneg(b, "b>=0")
    for i in range(m):
        # |phi_n|^2 - 2 Re{phi* phi_n} <= b_i - 1
        lin = 2.0 * (phi[i] * np.conj(phi_n[i])).real
        p.add_nonneg(b[i] - 1.0 - abs(phi_n[i]) ** 2 + lin, f"mod-lo{i}")
        e = np.zeros((1, m))
        e[0, i] = 1.0
        p.add_quad_le(e, phi, 1.0 + b[m + i], f"mod-hi{i}")


def ccp_row_values(phi, phi_n, b):
    """Residuals (<= 0 when satisfied) of both modulus row families, for tests and checks."""
    phi = np.asarray(phi, dtype=complex)
    phi_n = np.asarray(phi_n, dtype=complex)
    m = phi.size
    lo = np.abs(phi_n) ** 2 - 2 * np.real(np.conj(phi) * phi_n) - (b[:m] - 1.0)
    hi = np.abs(phi) ** 2 - 1.0 - b[m:]
    return lo, hi


def build_phi_program(pb: PhiBlocks, phi_n, lam: float) -> tuple[ConicProgram, PhiHandles]:
    m = pb.m
    kk = len(pb.eves)
    p = ConicProgram()
    phi = p.add_complex_var(m, "phi")
    delta = p.add_var(kk + 1, "delta")
    b = p.add_var(2 * m, "b")
    p.add_nonneg(delta, "delta>=0")
    xs = ys = None
    if kk:
        xs = p.add_var(kk, "x")
        ys = p.add_var(kk, "y")
        p.add_nonneg(ys, "y>=0")
    for k, blk in enumerate(pb.eves):
        f = _phi_quad_factor(-blk.q_mat)
        rest = (2.0 * phi.dot(blk.lin)).real + blk.const - np.sqrt(-2.0 * np.log(blk.rho)) * xs[k] \
            + np.log(blk.rho) * ys[k] - delta[k + 1]
        p.add_quad_le(f, phi, rest, f"eve{k}:trace")
        arg = blk.soc_gain * (blk.soc_mat @ (blk.g_t @ phi + blk.h_conj))
        p.add_soc(xs[k], [Affine.constant(blk.soc_const), arg], f"eve{k}:norm")
        cols = [mat @ (phi.conj() if cj else phi) for mat, cj in blk.eig_cols]
        if not cols:
            continue
        if blk.eig_top is None and len(cols) == 1:
            p.add_quad_le(np.eye(cols[0].size), cols[0], ys[k], f"eve{k}:eig")
            continue
        col_block = bmat([[c.reshape(c.size, 1) for c in cols]])
        if blk.eig_top is not None:
            fmat = bmat([[Affine.constant(blk.eig_top)], [col_block]])
        else:
            fmat = col_block
        rows, r = fmat.shape
        # ||F||_2^2 <= y  <=>  [[y I, F^H], [F, I]] >= 0
        lmi = bmat([[_scaled_identity(ys[k], r), fmat.H], [fmat, np.eye(rows)]])
        p.add_psd(lmi, f"eve{k}:eig")
    fb = _phi_quad_factor(pb.q_b)
    bob_rest = -((2.0 * phi.dot(pb.lin_b)).real + pb.const_b + delta[0])
    p.add_quad_le(fb, phi, bob_rest, "bob")
    ccp_modulus_rows(p, phi, phi_n, b)
    obj = delta.sum()
    pen = b.sum()
    p.maximize(obj - lam * pen)
    return p, PhiHandles(phi, delta, xs, ys, b, obj, pen)


# ---------------------------------------------------------------------------
# appendix facts
# ---------------------------------------------------------------------------


def shifted_identity_block_partial(s_g, c_g: float, phi) -> np.ndarray:
    """``S ((c_g I)^T kron E) S``; its smallest eigenvalue is zero when Nt < M Nt."""
    phi = np.asarray(phi, dtype=complex).ravel()
    nt = s_g.shape[0] // phi.size
    return _a_block_partial(s_g, c_g * np.eye(nt), phi)


def shifted_identity_block_full(s_h, s_g, c_g: float, phi) -> np.ndarray:
    """``B_e,k``: the full-error block evaluated at ``Xi = c_g I``; rank at most 2 Nt."""
    nt = s_h.shape[0]
    return _a_block_full(s_h, s_g, c_g * np.eye(nt), np.asarray(phi, dtype=complex).ravel())


__all__ = [
    "BtiCertificate", "bti_holds", "eve_blocks", "bti_margin", "bti_slacks", "eve_quadratic_blocks_partial",
    "eve_quadratic_blocks_full", "certificates", "robust_margins", "bob_margin", "build_wz_program",
    "wz_constraints", "phi_blocks", "build_phi_program", "ccp_modulus_rows", "tc_value", "bob_value",
    "eig_value", "shift_constants", "PARTIAL", "FULL",
]
