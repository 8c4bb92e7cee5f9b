import numpy as np
import pytest

from irs_outage.channels import PARTIAL, ChannelSet, CsiUncertainty, build_cascaded, equivalent_channel
from irs_outage.metrics import (
    BeamformingDesign,
    bob_rate,
    empirical_outage,
    eve_rate,
    secrecy_rate,
    wilson_upper,
)


def toy(m=2, nt=2, k=1, seed=0):
    rng = np.random.default_rng(seed)
    c = lambda *s: (rng.standard_normal(s) + 1j * rng.standard_normal(s)) / np.sqrt(2)
    return build_cascaded(ChannelSet(h_ab=c(nt), g_ar=c(m, nt), h_rb=c(m), h_ae=c(k, nt), h_re=c(k, m)))


def design(w, z, phi):
    return BeamformingDesign(np.outer(w, np.conj(w)), z, phi, w)


def test_design_properties():
    d = BeamformingDesign(np.diag([2.0, 0.0]), np.diag([0.0, 1.0]), [1, 1])
    assert d.power == pytest.approx(3.0) and d.an_fraction == pytest.approx(1 / 3)
    assert d.is_psd() and d.modulus_error() == 0.0
    assert not BeamformingDesign(np.diag([1.0, -1.0]), np.zeros((2, 2)), [1]).is_psd()


def test_bob_rate_examples():
    ch = toy()
    phi = np.exp(1j * np.array([0.2, -1.0]))
    zero = BeamformingDesign(np.zeros((2, 2)), np.zeros((2, 2)), phi)
    assert bob_rate(zero, ch, 1.0) == 0.0
    h = equivalent_channel(ch.h_ab, ch.g_cb, phi)
    p = 3.0
    d = BeamformingDesign(p * np.outer(h, h.conj()) / np.linalg.norm(h) ** 2, np.zeros((2, 2)), phi)
    assert bob_rate(d, ch, 0.5) == pytest.approx(np.log2(1 + p * np.linalg.norm(h) ** 2 / 0.5))


def test_rates_against_scalar_oracle():
    ch = toy(k=2, seed=3)
    rng = np.random.default_rng(4)
    phi = np.exp(1j * rng.uniform(0, 6, 2))
    w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    zb = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    z = zb @ zb.conj().T * 0.1
    d = design(w, z, phi)
    hb = ch.h_ab.conj() + phi @ ch.g_cb  # row vector h^H
    cb = np.log2(1 + abs(hb @ w) ** 2 / (1.0 + np.real(hb @ z @ hb.conj())))
    assert bob_rate(d, ch, 1.0) == pytest.approx(cb)
    ces = []
    for k in range(2):
        he = ch.h_ae[k].conj() + phi @ ch.g_ce[k]
        ces.append(np.log2(1 + abs(he @ w) ** 2 / (2.0 + np.real(he @ z @ he.conj()))))
        assert eve_rate(d, ch, k, 2.0) == pytest.approx(ces[-1])
    assert secrecy_rate(d, ch, 1.0, 2.0) == pytest.approx(min(cb - c for c in ces))
    dg = np.full((2, 2), 0.1 + 0.2j)
    he = ch.h_ae[0].conj() + phi @ (ch.g_ce[0] + dg)
    ref = np.log2(1 + abs(he @ w) ** 2 / (2.0 + np.real(he @ z @ he.conj())))
    assert eve_rate(d, ch, 0, 2.0, (None, dg)) == pytest.approx(ref)


def test_secrecy_symmetric_is_zero():
    rng = np.random.default_rng(5)
    h = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    g = rng.standard_normal((1, 2)) + 1j * rng.standard_normal((1, 2))
    r = rng.standard_normal(1) + 1j * rng.standard_normal(1)
    ch = build_cascaded(ChannelSet(h_ab=h, g_ar=g, h_rb=r, h_ae=h[None], h_re=r[None]))
    d = design(np.array([1.0, 0.5j]), np.zeros((2, 2)), [1.0])
    assert secrecy_rate(d, ch, 1.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_wilson_upper():
    assert wilson_upper(0, 10000) == pytest.approx(3.84 / (10000 + 3.84), rel=1e-3)
    assert wilson_upper(50, 100) > 0.5
    assert wilson_upper(100, 100) == 1.0


def test_outage_degenerate_cases():
    ch = toy()
    unc0 = CsiUncertainty(PARTIAL, np.zeros((1, 4, 4)))
    phi = np.ones(2, complex)
    w = np.array([1.0, 1.0j])
    d = design(w, np.zeros((2, 2)), phi)
    est = empirical_outage(d, ch, unc0, 0, 2.0, 1e-3, 500, np.random.default_rng(0))
    assert est.rate in (0.0, 1.0)
    zero = BeamformingDesign(np.zeros((2, 2)), np.eye(2), phi)
    unc = CsiUncertainty(PARTIAL, np.stack([np.eye(4)]))
    assert empirical_outage(zero, ch, unc, 0, 2.0, 1.0, 1000, np.random.default_rng(1)).rate == 0.0


def test_outage_matches_brute_force():
    # Nt=2, M=2 instance with a threshold near the median of the Eve SINR
    ch = toy(m=2, nt=2, k=1, seed=8)
    phi = np.exp(1j * np.array([0.4, 2.0]))
    w = np.array([1.0, -0.3j])
    d = design(w, 0.2 * np.eye(2), phi)
    unc = CsiUncertainty(PARTIAL, np.stack([0.5 * np.eye(4)]))
    est = empirical_outage(d, ch, unc, 0, 1.5, 3.0, 20000, np.random.default_rng(2))
    # brute force: per-sample Eve rate against log2(beta)
    rng = np.random.default_rng(3)
    n = 1000000
    v = (rng.standard_normal((n, 4)) + 1j * rng.standard_normal((n, 4))) / np.sqrt(2) * np.sqrt(0.5)
    dg = v.reshape(n, 2, 2).transpose(0, 2, 1)
    he = ch.h_ae[0].conj()[None] + np.einsum("m,nmt->nt", phi, ch.g_ce[0][None] + dg)
    sig = np.abs(he @ w) ** 2
    an = np.real(np.einsum("ni,ij,nj->n", he, d.z_mat, he.conj()))
    ref = np.mean(np.log2(1 + sig / (3.0 + an)) > np.log2(1.5))
    half = 1.96 * np.sqrt(ref * (1 - ref) / 20000)
    assert 0.05 < ref < 0.95
    assert abs(est.rate - ref) <= 3 * half
