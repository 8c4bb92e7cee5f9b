"""Achievable rates, secrecy rate and Monte-Carlo outage estimates.

These are the ground-truth evaluators: they never touch the safe
approximation and work directly from sampled channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .channels import ChannelSet, CsiUncertainty, equivalent_channel, sample_csi_errors
from .matrix_kit import PSD_CLAMP, lambda_min

WILSON_Z = float(norm.ppf(0.975))
MC_CHUNK = 20000


@dataclass
class BeamformingDesign:
    w_mat: np.ndarray
    z_mat: np.ndarray
    phi: np.ndarray
    w_vec: np.ndarray | None = None
    randomized: bool = False

    def __post_init__(self):
        self.w_mat = np.asarray(self.w_mat, dtype=complex)
        self.z_mat = np.asarray(self.z_mat, dtype=complex)
        self.phi = np.asarray(self.phi, dtype=complex).ravel()

    @property
    def power(self) -> float:
        return float(np.real(np.trace(self.w_mat + self.z_mat)))

    @property
    def an_fraction(self) -> float:
        p = self.power
        return float(np.real(np.trace(self.z_mat)) / p) if p > 0 else 0.0

    def is_psd(self) -> bool:
        ok = True
        for mat in (self.w_mat, self.z_mat):
            scale = max(float(np.max(np.abs(mat), initial=0.0)), 1e-300)
            ok &= lambda_min(mat) >= -PSD_CLAMP * scale
        return bool(ok)

    def modulus_error(self) -> float:
        return float(np.max(np.abs(np.abs(self.phi) - 1.0), initial=0.0))

    def with_rank_one(self, w_vec, randomized: bool = False) -> "BeamformingDesign":
        w_vec = np.asarray(w_vec, dtype=complex).ravel()
        return BeamformingDesign(np.outer(w_vec, w_vec.conj()), self.z_mat, self.phi, w_vec, randomized)


@dataclass(frozen=True)
class OutageEstimate:
    samples: int
    violations: int
    rate: float
    wilson_hi: float


def wilson_upper(violations: int, samples: int, z: float = WILSON_Z) -> float:
    if samples <= 0:
        raise ValueError("need at least one sample")
    p = violations / samples
    den = 1.0 + z * z / samples
    centre = p + z * z / (2 * samples)
    half = z * np.sqrt(p * (1 - p) / samples + z * z / (4 * samples * samples))
    return float(min(1.0, (centre + half) / den))


def _rate(h, w, z, sigma2) -> float:
    sig = float(np.real(h.conj() @ w @ h))
    an = float(np.real(h.conj() @ z @ h))
    return float(np.log2(1.0 + max(sig, 0.0) / (sigma2 + max(an, 0.0))))


def bob_channel(design: BeamformingDesign, ch: ChannelSet) -> np.ndarray:
    return equivalent_channel(ch.h_ab, ch.g_cb, design.phi)


def eve_channel(design: BeamformingDesign, ch: ChannelSet, k: int, dh=None, dg=None) -> np.ndarray:
    h = ch.h_ae[k] if dh is None else ch.h_ae[k] + dh
    g = ch.g_ce[k] if dg is None else ch.g_ce[k] + dg
    return equivalent_channel(h, g, design.phi)


def bob_rate(design: BeamformingDesign, ch: ChannelSet, sigma_b2: float) -> float:
    return _rate(bob_channel(design, ch), design.w_mat, design.z_mat, sigma_b2)


def eve_rate(design: BeamformingDesign, ch: ChannelSet, k: int, sigma_e2: float, error=None) -> float:
    dh, dg = (None, None) if error is None else error
    return _rate(eve_channel(design, ch, k, dh, dg), design.w_mat, design.z_mat, sigma_e2)


def secrecy_rate(design: BeamformingDesign, ch: ChannelSet, sigma_b2: float, sigma_e2: float) -> float:
    cb = bob_rate(design, ch, sigma_b2)
    if ch.k == 0:
        return cb
    return min(cb - eve_rate(design, ch, k, sigma_e2) for k in range(ch.k))


def eve_channels_batch(design: BeamformingDesign, ch: ChannelSet, k: int, dh, dg) -> np.ndarray:
    """Equivalent Eve channels for a batch of errors; rows are samples."""
    g = ch.g_ce[k][None] + dg
    h = ch.h_ae[k][None] + (0 if dh is None else dh)
    return h + np.einsum("nmt,m->nt", g.conj(), design.phi.conj())


def eve_margin_batch(design: BeamformingDesign, hs: np.ndarray, beta: float, sigma_e2: float) -> np.ndarray:
    """``h^H (W - (beta-1) Z) h - (beta-1) sigma_e^2`` per row; positive means outage."""
    xi = design.w_mat - (beta - 1.0) * design.z_mat
    q = np.real(np.einsum("ni,ij,nj->n", hs.conj(), xi, hs))
    return q - (beta - 1.0) * sigma_e2


def empirical_outage(design: BeamformingDesign, ch: ChannelSet, unc: CsiUncertainty, k: int,
                     beta: float, sigma_e2: float, n_samples: int, rng) -> OutageEstimate:
    """Count draws whose Eve rate exceeds ``log2(beta)``; draws are consumed in fixed-size chunks."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    violations = 0
    done = 0
    while done < n_samples:
        n = min(MC_CHUNK, n_samples - done)
        dh, dg = sample_csi_errors(unc, k, rng, n, ch.m, ch.nt)
        hs = eve_channels_batch(design, ch, k, dh, dg)
        margin = eve_margin_batch(design, hs, beta, sigma_e2)
        scale = (beta - 1.0) * sigma_e2 + abs(float(np.real(np.trace(design.w_mat))))
        violations += int(np.count_nonzero(margin > 1e-12 * scale))
        done += n
    return OutageEstimate(n_samples, violations, violations / n_samples, wilson_upper(violations, n_samples))
