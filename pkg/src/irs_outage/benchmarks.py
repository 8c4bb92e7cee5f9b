"""Comparison schemes: MRT with isotropic AN, fixed random phases, and no reflecting surface.

MRT schemes fix the beam directions and reduce the design to two powers
``(p_w, p_z)``.  Every robust row is then affine in the two powers, so the
certificate blocks are precomputed once and the feasible region in the
``(p_w, p_z)`` plane is convex; the minimum of ``p_w + (Nt-1) p_z`` is found
by an inner bisection on ``p_z`` and an outer convex search on ``p_w``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ao import AoConfig, InfeasibleError, MARGIN_TOL, initial_phases, normalize, sdr_design
from .channels import ChannelSet, CsiUncertainty, ScenarioConfig, equivalent_channel, paper_uncertainty
from .metrics import BeamformingDesign
from .robust import bti_margin, eve_blocks

SCHEMES = ("proposed", "random_mrt", "optimized_mrt", "random_irs", "no_irs")
P_START = 10.0
P_CAP = 1e3
REL_TOL = 1e-4


@dataclass
class Allocation:
    p_w: float
    p_z: float
    total: float


def mrt_design(ch: ChannelSet, phi, p_w: float, p_z: float) -> BeamformingDesign:
    """Beam along the equivalent Bob channel, AN on its orthogonal complement."""
    phi = np.ones(0, complex) if phi is None else np.asarray(phi, dtype=complex).ravel()
    h = equivalent_channel(ch.h_ab, ch.g_cb, phi)
    nrm = np.linalg.norm(h)
    if nrm == 0:
        raise ValueError("zero equivalent Bob channel")
    u = h / nrm
    w = np.sqrt(p_w) * u
    proj = np.eye(ch.nt) - np.outer(u, u.conj())
    return BeamformingDesign(np.outer(w, w.conj()), p_z * proj, phi, w)


class _MrtRows:
    """Certificate blocks split into their ``p_w`` part, ``p_z`` part and constant."""

    def __init__(self, ch, unc, cfg, phi, unit: float):
        self.cfg = cfg
        self.p_start = P_START / unit
        self.p_cap = P_CAP / unit
        unit_w = mrt_design(ch, phi, 1.0, 0.0)
        unit_z = mrt_design(ch, phi, 0.0, 1.0)
        zero = np.zeros((ch.nt, ch.nt), complex)
        self.rows = []
        for k in range(ch.k):
            a0, u0, c0 = eve_blocks(ch, unc, zero, zero, phi, k, cfg.beta, cfg.sigma_e2)
            aw, uw, cw = eve_blocks(ch, unc, unit_w.w_mat, zero, phi, k, cfg.beta, cfg.sigma_e2)
            az, uz, cz = eve_blocks(ch, unc, zero, unit_z.z_mat, phi, k, cfg.beta, cfg.sigma_e2)
            self.rows.append((aw - a0, az - a0, uw - u0, uz - u0, cw - c0, cz - c0, c0, cfg.rho[k]))
        self.scale = max((cfg.beta - 1.0) * cfg.sigma_e2, cfg.sigma_e2)

    def feasible(self, p_w: float, p_z: float) -> bool:
        for aw, az, uw, uz, cw, cz, c0, rho in self.rows:
            m = bti_margin(p_w * aw + p_z * az, p_w * uw + p_z * uz, p_w * cw + p_z * cz + c0, rho)
            if m < -MARGIN_TOL * self.scale:
                return False
        return True


def _min_pz(rows: _MrtRows, p_w: float) -> float:
    """Smallest AN power making all Eve rows hold at ``p_w`` (inf if none up to the cap)."""
    if rows.feasible(p_w, 0.0):
        return 0.0
    hi = rows.p_start
    while not rows.feasible(p_w, hi):
        hi *= 2.0
        if hi > rows.p_cap:
            return np.inf
    lo = 0.0
    while hi - lo > REL_TOL * hi * 1e-2:
        mid = 0.5 * (lo + hi)
        if rows.feasible(p_w, mid):
            hi = mid
        else:
            lo = mid
    return hi


def allocate_power(ch: ChannelSet, unc: CsiUncertainty, cfg: ScenarioConfig, phi, unit: float | None = None) -> Allocation:
    """Minimal ``p_w + (Nt-1) p_z`` meeting Bob's target and every Eve certificate (watts)."""
    nz = normalize(ch, unc, cfg, unit)
    phi = np.ones(0, complex) if phi is None else phi
    h = equivalent_channel(nz.ch.h_ab, nz.ch.g_cb, phi)
    gain = float(np.real(h.conj() @ h))
    if gain <= 0:
        raise InfeasibleError("zero equivalent Bob channel")
    pw_min = (nz.cfg.gamma - 1.0) * nz.cfg.sigma_b2 / gain
    rows = _MrtRows(nz.ch, nz.unc, nz.cfg, phi, nz.unit)
    extra = nz.ch.nt - 1

    def total(p_w):
        pz = _min_pz(rows, p_w)
        return p_w + extra * pz, pz

    f0, pz0 = total(pw_min)
    if not np.isfinite(f0):
        raise InfeasibleError("no AN power up to the cap satisfies the Eve certificates")
    best = (f0, pw_min, pz0)
    # the total is convex in p_w; move right only while it decreases
    step = max(pw_min, 1e-12) * 1e-3
    f1, _ = total(pw_min + step)
    if f1 < f0:
        lo, hi = pw_min, pw_min + step
        fh = f1
        while True:
            nxt = pw_min + 2.0 * (hi - pw_min)
            fn, _ = total(nxt)
            if not fn < fh or nxt > rows.p_cap:
                hi = nxt
                break
            lo, hi, fh = hi, nxt, fn
        lo = pw_min
        g = (np.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        while b - a > REL_TOL * b * 1e-2:
            c1 = b - g * (b - a)
            c2 = a + g * (b - a)
            if total(c1)[0] <= total(c2)[0]:
                b = c2
            else:
                a = c1
        pw = 0.5 * (a + b)
        f, pz = total(pw)
        if f < best[0]:
            best = (f, pw, pz)
    f, pw, pz = best
    return Allocation(pw * nz.unit, pz * nz.unit, f * nz.unit)


def random_phases(m: int, rng) -> np.ndarray:
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, m))


def mrt_scheme(ch, unc, cfg, phi) -> BeamformingDesign:
    """MRT with isotropic AN and optimized power split for given phases."""
    alloc = allocate_power(ch, unc, cfg, phi)
    return mrt_design(ch, phi, alloc.p_w, alloc.p_z)


def random_mrt(ch, unc, cfg, phi) -> BeamformingDesign:
    return mrt_scheme(ch, unc, cfg, phi)


def optimized_mrt(ch, unc, cfg, phi_opt) -> BeamformingDesign:
    """MRT at phases optimized once by the alternating scheme."""
    return mrt_scheme(ch, unc, cfg, phi_opt)


def random_irs_design(ch, unc, cfg, phi, ao: AoConfig = AoConfig()) -> BeamformingDesign:
    """Single (W, Z) solve at fixed random phases."""
    return sdr_design(ch, unc, cfg, phi, ao)[0]


def no_irs_channels(ch: ChannelSet, cfg: ScenarioConfig) -> tuple[ChannelSet, CsiUncertainty]:
    ch0 = ch.without_irs()
    return ch0, paper_uncertainty(ch0, cfg.scenario, cfg.delta_g, cfg.delta_h)


def no_irs_design(ch, cfg, ao: AoConfig = AoConfig()) -> BeamformingDesign:
    """Reflecting path removed; the cascaded uncertainty vanishes with it."""
    ch0, unc0 = no_irs_channels(ch, cfg)
    return sdr_design(ch0, unc0, cfg, np.ones(ch.m, complex), ao)[0]


__all__ = ["SCHEMES", "Allocation", "mrt_design", "allocate_power", "random_mrt", "optimized_mrt",
           "random_irs_design", "no_irs_design", "no_irs_channels", "random_phases", "initial_phases"]
