"""Alternating optimization of (W, Z) and the IRS phase vector.

Internally every problem is solved on *normalized* data: channels are
scaled so that Bob's noise power is one and powers are expressed in
``AoConfig.power_unit`` watts.  Designs handed back to the caller are in
watts and refer to the original channels.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import ChannelSet, CsiUncertainty, ScenarioConfig, substream
from .conic import INACCURATE, OPTIMAL
from .matrix_kit import herm_sqrt, hermitize, project_psd
from .metrics import BeamformingDesign
from .robust import (
    bob_margin,
    build_phi_program,
    build_wz_program,
    phi_blocks,
    robust_margins,
)

log = logging.getLogger(__name__)

MARGIN_TOL = 1e-6


class InfeasibleError(RuntimeError):
    pass


class NoFeasibleCandidate(RuntimeError):
    pass


@dataclass(frozen=True)
class AoConfig:
    eps: float = 1e-3
    max_outer: int = 200
    lam0: float = 0.1
    mu: float = 3.0
    lam_max: float = 1e4
    inner_max: int = 30
    mod_tol: float = 1e-7
    inner_tol: float = 1e-4
    randomization_count: int = 500
    phi_init: str = "random"
    bounds: str = "tight"
    restarts: int = 3
    backend: str | None = None
    power_unit: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.eps <= 0 or self.mu <= 1 or not (self.lam_max >= self.lam0 > 0):
            raise ValueError("need eps > 0, mu > 1 and lam_max >= lam0 > 0")
        if self.phi_init not in ("random", "ones"):
            raise ValueError("phi_init must be 'random' or 'ones'")


@dataclass
class AoTrace:
    rows: list = field(default_factory=list)
    converged: bool = False
    stopped_early: bool = False
    note: str = ""

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r["obj_w"] for r in self.rows])

    def add(self, **row):
        self.rows.append(row)

    def write_csv(self, path):
        cols = ["iter", "obj_dbm", "status_wz", "status_phi", "sum_delta", "max_mod_violation", "seconds"]
        with open(path, "w", newline="") as fh:
            wr = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
            wr.writeheader()
            for r in self.rows:
                wr.writerow({c: (f"{r[c]:.10g}" if isinstance(r[c], float) else r[c]) for c in cols})


@dataclass
class WzResult:
    status: str
    w: np.ndarray | None = None
    z: np.ndarray | None = None
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    objective: float = np.inf
    max_violation: float = np.nan

    @property
    def ok(self) -> bool:
        return self.w is not None


@dataclass
class PhiResult:
    status: str
    phi: np.ndarray
    delta: np.ndarray | None = None
    inner_iters: int = 0
    sum_b: float = np.nan
    max_mod_violation: float = np.nan
    converged: bool = False


def to_dbm(watts: float) -> float:
    return float(10.0 * np.log10(max(watts, 1e-300)) + 30.0)


@dataclass
class Normalized:
    ch: ChannelSet
    unc: CsiUncertainty
    cfg: ScenarioConfig
    unit: float


def auto_unit(ch: ChannelSet, cfg: ScenarioConfig) -> float:
    """Power unit close to the MRT power needed by Bob, so normalized programs are O(1)."""
    gain = float(np.sum(np.abs(ch.h_ab) ** 2) + np.sum(np.abs(ch.g_cb) ** 2))
    if gain <= 0:
        return 1e-3
    return max(cfg.gamma - 1.0, 1.0) * cfg.sigma_b2 / gain


def normalize(ch: ChannelSet, unc: CsiUncertainty, cfg: ScenarioConfig, unit: float | None = None) -> Normalized:
    """Scale channels so sigma_b^2 = 1 with powers measured in ``unit`` watts (automatic if None)."""
    unit = auto_unit(ch, cfg) if unit is None else unit
    s2 = unit / cfg.sigma_b2
    return Normalized(ch.scaled(np.sqrt(s2)), unc.scaled(s2),
                      cfg.with_(sigma_b2=1.0, sigma_e2=cfg.sigma_e2 / cfg.sigma_b2), unit)


def solve_wz(ch: ChannelSet, unc: CsiUncertainty, cfg: ScenarioConfig, phi, ao: AoConfig = AoConfig()) -> WzResult:
    """SDR subproblem for fixed ``phi`` (normalized data expected)."""
    p, hd = build_wz_program(ch, unc, cfg, phi)
    out = p.solve(ao.backend)
    if not out.ok:
        return WzResult(out.status)
    viol = p.violations(out.x)[0][2] if p.constraints else 0.0
    if out.status == INACCURATE and viol > 1e-6:
        return WzResult(out.status, max_violation=viol)
    w = project_psd(out.value(hd.w))
    z = project_psd(out.value(hd.z))
    xs = None if hd.x is None else out.value(hd.x).real
    ys = None if hd.y is None else out.value(hd.y).real
    status = OPTIMAL if viol <= 1e-6 else INACCURATE
    return WzResult(status, w, z, xs, ys, float(np.real(np.trace(w + z))), viol)


def solve_phi(ch, unc, cfg, w, z, phi_init, ao: AoConfig = AoConfig()) -> PhiResult:
    """Penalty-CCP loop on the convexified phase-shift problem; result is projected to unit modulus."""
    pb = phi_blocks(ch, unc, cfg, w, z, ao.bounds)
    phi_n = np.asarray(phi_init, dtype=complex).ravel()
    lam = ao.lam0
    prev = None
    last = None
    it = 0
    for it in range(1, ao.inner_max + 1):
        p, hd = build_phi_program(pb, phi_n, lam)
        out = p.solve(ao.backend)
        if not out.ok:
            if last is None:
                return PhiResult(out.status, np.asarray(phi_init, dtype=complex).ravel(), inner_iters=it)
            break
        phi_new = out.value(hd.phi)
        b = np.maximum(out.value(hd.b).real, 0.0)
        obj = float(out.value(hd.objective_delta).real[0])
        last = (phi_new, out.value(hd.delta).real, b, obj)
        done = b.sum() <= ao.mod_tol and prev is not None and abs(obj - prev) <= ao.inner_tol * max(1.0, abs(obj))
        prev = obj
        if done:
            break
        small = np.abs(phi_new) < 1e-6
        phi_n = np.where(small, phi_n, phi_new)
        lam = min(ao.mu * lam, ao.lam_max)
    phi_new, delta, b, obj = last
    mod_err = float(np.max(np.abs(np.abs(phi_new) - 1.0)))
    proj = np.where(np.abs(phi_new) > 1e-9, phi_new / np.maximum(np.abs(phi_new), 1e-300), 1.0)
    converged = b.sum() <= ao.mod_tol
    return PhiResult(OPTIMAL if converged else "not_converged", proj, delta, it, float(b.sum()), mod_err, converged)


def certified(ch, unc, cfg, w, z, phi, tol: float = MARGIN_TOL) -> bool:
    """Bob constraint and every Eve certificate hold (margins relative to the noise level)."""
    m = robust_margins(ch, unc, cfg, w, z, phi)
    scale = np.array([max((cfg.gamma - 1.0) * cfg.sigma_b2, cfg.sigma_b2)]
                     + [max((cfg.beta - 1.0) * cfg.sigma_e2, cfg.sigma_e2)] * ch.k)
    return bool(np.all(m >= -tol * scale))


def extract_rank_one(w, feasibility_check, rescale=None, count: int = 500, rng=None, ratio_tol: float = 1e-5):
    """Return ``(w_vec, status)``; status is ``"eigen"`` or ``"randomized"``."""
    w = hermitize(np.asarray(w, dtype=complex))
    vals, vecs = np.linalg.eigh(w)
    lam1 = max(vals[-1], 0.0)
    if lam1 <= 0.0:
        return np.zeros(w.shape[0], complex), "eigen"
    lam2 = max(vals[-2], 0.0) if vals.size > 1 else 0.0
    if lam2 / lam1 <= ratio_tol:
        return np.sqrt(float(np.real(np.trace(w)))) * vecs[:, -1], "eigen"
    rng = np.random.default_rng(0) if rng is None else rng
    root = herm_sqrt(project_psd(w))
    best, best_p = None, np.inf
    n = w.shape[0]
    for _ in range(count):
        xi = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
        cand = root @ xi
        if rescale is not None:
            cand = rescale(cand)
            if cand is None:
                continue
        pw = float(np.sum(np.abs(cand) ** 2))
        if pw < best_p and feasibility_check(cand):
            best, best_p = cand, pw
    if best is None:
        raise NoFeasibleCandidate(f"none of {count} randomized candidates passed the robust check")
    return best, "randomized"


def bob_rescale(ch, cfg, z, phi):
    """Scale a candidate beamformer to meet Bob's SINR target with equality."""
    h = ch.h_ab + ch.g_cb.conj().T @ np.asarray(phi).conj()
    need = (cfg.gamma - 1.0) * (cfg.sigma_b2 + float(np.real(h.conj() @ z @ h)))

    def f(cand):
        g = abs(h.conj() @ cand) ** 2
        if g <= 0:
            return None
        return cand * np.sqrt(need / g)

    return f


def finalize(nz: Normalized, w, z, phi, ao: AoConfig, rng) -> tuple[BeamformingDesign, str]:
    """Rank-one extraction on normalized data; returns a design in watts."""
    ch, unc, cfg = nz.ch, nz.unc, nz.cfg

    def check(cand):
        return certified(ch, unc, cfg, np.outer(cand, cand.conj()), z, phi)

    w_vec, status = extract_rank_one(w, check, bob_rescale(ch, cfg, z, phi), ao.randomization_count, rng)
    design = BeamformingDesign(np.outer(w_vec, w_vec.conj()) * nz.unit, z * nz.unit, phi,
                               w_vec * np.sqrt(nz.unit), status == "randomized")
    return design, status


def initial_phases(m: int, ao: AoConfig, attempt: int = 0) -> np.ndarray:
    if ao.phi_init == "ones" and attempt == 0:
        return np.ones(m, complex)
    rng = substream(ao.seed, "phi-init", attempt)
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, m))


def run_ao(ch: ChannelSet, unc: CsiUncertainty, cfg: ScenarioConfig, ao: AoConfig = AoConfig(),
           phi0=None) -> tuple[BeamformingDesign, AoTrace]:
    """Alternate the two subproblems until the relative power change drops below ``eps``."""
    nz = normalize(ch, unc, cfg, ao.power_unit)
    trace = AoTrace()
    t0 = time.perf_counter()
    wz = None
    phi = None
    for attempt in range(ao.restarts + 1):
        phi = np.asarray(phi0, dtype=complex) if (phi0 is not None and attempt == 0) else initial_phases(ch.m, ao, attempt)
        wz = solve_wz(nz.ch, nz.unc, nz.cfg, phi, ao)
        if wz.ok:
            break
        log.info("initial (W,Z) problem %s for start %d", wz.status, attempt)
    if wz is None or not wz.ok:
        raise InfeasibleError(f"(W,Z) subproblem infeasible for {ao.restarts + 1} phase initializations")
    trace.add(iter=0, obj_w=wz.objective * nz.unit, obj_dbm=to_dbm(wz.objective * nz.unit), status_wz=wz.status,
              status_phi="-", sum_delta=0.0, max_mod_violation=0.0, seconds=time.perf_counter() - t0)
    w, z = wz.w, wz.z
    obj = wz.objective
    for it in range(1, ao.max_outer + 1):
        if ch.m == 0:
            trace.converged = True
            break
        pr = solve_phi(nz.ch, nz.unc, nz.cfg, w, z, phi, ao)
        if pr.delta is None:
            trace.stopped_early = True
            trace.note = f"phase step infeasible ({pr.status})"
            trace.add(iter=it, obj_w=obj * nz.unit, obj_dbm=to_dbm(obj * nz.unit), status_wz="-",
                      status_phi=pr.status, sum_delta=float("nan"),
                      max_mod_violation=pr.max_mod_violation, seconds=time.perf_counter() - t0)
            break
        # an uncertified projected phase may still admit a cheaper (W, Z); the power check below decides
        new = solve_wz(nz.ch, nz.unc, nz.cfg, pr.phi, ao)
        if not new.ok or new.objective > obj * (1.0 + 1e-6) + 1e-12:
            trace.stopped_early = True
            trace.note = f"(W,Z) step rejected ({new.status}, phase status {pr.status})"
            trace.add(iter=it, obj_w=obj * nz.unit, obj_dbm=to_dbm(obj * nz.unit), status_wz=new.status,
                      status_phi=pr.status, sum_delta=float(pr.delta.sum()),
                      max_mod_violation=pr.max_mod_violation, seconds=time.perf_counter() - t0)
            break
        prev = obj
        phi, w, z, obj = pr.phi, new.w, new.z, new.objective
        trace.add(iter=it, obj_w=obj * nz.unit, obj_dbm=to_dbm(obj * nz.unit), status_wz=new.status,
                  status_phi=pr.status, sum_delta=float(pr.delta.sum()), max_mod_violation=pr.max_mod_violation,
                  seconds=time.perf_counter() - t0)
        if abs(prev - obj) <= ao.eps * max(abs(prev), 1e-300):
            trace.converged = True
            break
    design, _ = finalize(nz, w, z, phi, ao, substream(ao.seed, "randomization"))
    return design, trace


def design_certified(design: BeamformingDesign, ch, unc, cfg, unit: float | None = None, tol: float = MARGIN_TOL) -> bool:
    """Certificate check of a design given in watts against un-normalized data."""
    nz = normalize(ch, unc, cfg, unit)
    return certified(nz.ch, nz.unc, nz.cfg, design.w_mat / nz.unit, design.z_mat / nz.unit, design.phi, tol)


def sdr_design(ch, unc, cfg, phi, ao: AoConfig = AoConfig()) -> tuple[BeamformingDesign, WzResult]:
    """One (W,Z) solve at fixed phases followed by rank-one extraction."""
    nz = normalize(ch, unc, cfg, ao.power_unit)
    wz = solve_wz(nz.ch, nz.unc, nz.cfg, phi, ao)
    if not wz.ok:
        raise InfeasibleError(f"(W,Z) subproblem {wz.status}")
    design, _ = finalize(nz, wz.w, wz.z, np.asarray(phi, dtype=complex), ao, substream(ao.seed, "randomization"))
    return design, wz


__all__ = ["AoConfig", "AoTrace", "run_ao", "solve_wz", "solve_phi", "extract_rank_one", "normalize",
           "certified", "design_certified", "sdr_design", "InfeasibleError", "NoFeasibleCandidate",
           "bob_margin", "replace"]
