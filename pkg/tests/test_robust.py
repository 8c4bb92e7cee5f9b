import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irs_outage.ao import normalize, solve_wz
from irs_outage.channels import (
    FULL,
    PARTIAL,
    ChannelSet,
    CsiUncertainty,
    ScenarioConfig,
    build_cascaded,
    generate_channels,
    paper_uncertainty,
    sample_csi_errors,
)
from irs_outage.robust import (
    BtiCertificate,
    bob_margin,
    bob_value,
    bti_holds,
    bti_margin,
    build_wz_program,
    ccp_row_values,
    certificates,
    eig_value,
    eve_blocks,
    phi_blocks,
    robust_margins,
    shift_constants,
    shifted_identity_block_full,
    shifted_identity_block_partial,
    soc_value,
    tc_value,
)

seeds = st.integers(0, 2**32 - 1)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def toy(rng, m, nt, k, scenario, white=False):
    ch = build_cascaded(ChannelSet(h_ab=crandn(rng, nt), g_ar=crandn(rng, m, nt), h_rb=crandn(rng, m),
                                   h_ae=crandn(rng, k, nt), h_re=crandn(rng, k, m)))
    d = m * nt
    if white:
        sg = np.stack([0.05 * np.eye(d)] * k)
        sh = np.stack([0.03 * np.eye(nt)] * k)
    else:
        bs = crandn(rng, k, d, d)
        sg = 0.02 * bs @ bs.conj().transpose(0, 2, 1)
        bh = crandn(rng, k, nt, nt)
        sh = 0.02 * bh @ bh.conj().transpose(0, 2, 1)
    return ch, CsiUncertainty(scenario, sg, sh if scenario == FULL else None)


def design(rng, nt, scale=1.0):
    a, b = crandn(rng, nt, nt), crandn(rng, nt, nt)
    return scale * a @ a.conj().T, 0.3 * scale * b @ b.conj().T


def unit_phases(rng, m):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, m))


# ---------------------------------------------------------------------------
# Bernstein-type certificate
# ---------------------------------------------------------------------------


def test_bti_examples():
    assert bti_margin(np.zeros((2, 2)), np.zeros(2), 1.0, 0.05) == pytest.approx(1.0)
    assert bti_holds(BtiCertificate(np.zeros((2, 2)), np.zeros(2), 1.0, 0.05))
    assert not bti_holds(BtiCertificate(np.zeros((2, 2)), np.zeros(2), -1.0, 0.05))
    with pytest.raises(ValueError):
        bti_margin(np.eye(1), np.zeros(1), 1.0, 0.0)


def test_bti_explicit_slacks_checked():
    a = np.diag([1.0, -0.5])
    u = np.array([0.2, 0.1j])
    good = BtiCertificate(a, u, 20.0, 0.1, x=5.0, y=1.0)
    assert bti_holds(good)
    assert not bti_holds(BtiCertificate(a, u, 20.0, 0.1, x=0.1, y=1.0))  # x below the norm
    assert not bti_holds(BtiCertificate(a, u, 20.0, 0.1, x=5.0, y=0.1))  # y below -lambda_min


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(1, 4), st.sampled_from([0.02, 0.05, 0.2]))
def test_bti_is_conservative(seed, n, rho):
    # a certified quadratic form violates with probability at most rho
    rng = np.random.default_rng(seed)
    b = crandn(rng, n, n)
    a = b + b.conj().T
    u = crandn(rng, n)
    c0 = bti_margin(a, u, 0.0, rho)
    c = -c0 + 1e-9
    assert bti_margin(a, u, c, rho) >= 0
    v = crandn(rng, 40000, n)
    f = np.real(np.einsum("si,ij,sj->s", v.conj(), a, v)) + 2 * np.real(v @ u.conj()) + c
    assert np.mean(f < 0) <= rho + 3 * np.sqrt(rho / 40000)


# ---------------------------------------------------------------------------
# quadratic-form expansion against direct evaluation
# ---------------------------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3), st.sampled_from([PARTIAL, FULL]))
def test_expansion_matches_direct(seed, m, nt, scenario):
    rng = np.random.default_rng(seed)
    ch, unc = toy(rng, m, nt, 1, scenario)
    w, z = design(rng, nt)
    phi = crandn(rng, m)  # the expansion holds for any phi, not only unit modulus
    beta, s2 = 1.7, 0.4
    a, u, c = eve_blocks(ch, unc, w, z, phi, 0, beta, s2)
    xi = (beta - 1) * z - w
    n = 50
    d = m * nt
    vg = crandn(rng, n, d)
    g = vg @ unc.sigma_ge_half[0].T
    dg = g.reshape(n, nt, m).transpose(0, 2, 1)
    if scenario == FULL:
        vh = crandn(rng, n, nt)
        dh = vh @ unc.sigma_he_half[0].T
        v = np.concatenate([vh, vg.conj()], axis=1)
        assert a.shape == (nt + d, nt + d)
    else:
        dh = np.zeros((n, nt))
        v = vg
        assert a.shape == (d, d)
    assert np.allclose(a, a.conj().T, atol=1e-12)
    for s in range(n):
        he = ch.h_ae[0] + dh[s] + (ch.g_ce[0] + dg[s]).conj().T @ phi.conj()
        direct = np.real(he.conj() @ xi @ he) + (beta - 1) * s2
        form = np.real(v[s].conj() @ a @ v[s]) + 2 * np.real(u.conj() @ v[s]) + c
        assert form == pytest.approx(direct, rel=1e-9, abs=1e-9)


def test_zero_design_leaves_noise_term():
    rng = np.random.default_rng(0)
    for scenario in (PARTIAL, FULL):
        ch, unc = toy(rng, 2, 2, 1, scenario)
        a, u, c = eve_blocks(ch, unc, np.zeros((2, 2)), np.zeros((2, 2)), unit_phases(rng, 2), 0, 2.5, 0.7)
        assert c == pytest.approx(1.5 * 0.7)
        assert np.allclose(a, 0) and np.allclose(u, 0)


def test_error_draws_respect_certificate():
    # a certified design is an outage-feasible design under sampled errors
    cfg = ScenarioConfig(m=3, k=1, rho=0.05, seed=2)
    ch = generate_channels(cfg)
    unc = paper_uncertainty(ch, PARTIAL, cfg.delta_g)
    nz = normalize(ch, unc, cfg)
    phi = np.ones(3, complex)
    wz = solve_wz(nz.ch, nz.unc, nz.cfg, phi)
    assert wz.ok
    cert = certificates(nz.ch, nz.unc, nz.cfg, wz.w, wz.z, phi)[0]
    assert cert.margin() >= -1e-6
    _, dg = sample_csi_errors(nz.unc, 0, np.random.default_rng(1), 20000, 3, 2)
    he = nz.ch.h_ae[0][None] + np.einsum("nmt,m->nt", (nz.ch.g_ce[0][None] + dg).conj(), phi.conj())
    xi = (nz.cfg.beta - 1) * wz.z - wz.w
    f = np.real(np.einsum("ni,ij,nj->n", he.conj(), xi, he)) + (nz.cfg.beta - 1) * nz.cfg.sigma_e2
    assert np.mean(f < 0) <= cfg.rho[0]


# ---------------------------------------------------------------------------
# convexified phase-shift rows
# ---------------------------------------------------------------------------


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3), st.sampled_from([PARTIAL, FULL]),
       st.sampled_from(["paper", "tight"]))
def test_phi_rows_bound_the_exact_certificate(seed, m, nt, scenario, bounds):
    rng = np.random.default_rng(seed)
    ch, unc = toy(rng, m, nt, 2, scenario)
    w, z = design(rng, nt)
    cfg = ScenarioConfig(nt=nt, m=m, k=2, gamma=4.0, beta=2.0, sigma_b2=1.0, sigma_e2=0.5, scenario=scenario)
    pb = phi_blocks(ch, unc, cfg, w, z, bounds)
    phi = unit_phases(rng, m)
    for k, blk in enumerate(pb.eves):
        a, u, c = eve_blocks(ch, unc, w, z, phi, k, cfg.beta, cfg.sigma_e2)
        scale = 1.0 + np.abs(c) + np.linalg.norm(a)
        # shifted trace row equals Tr A + c on the unit circle
        assert tc_value(blk, phi) == pytest.approx(np.real(np.trace(a)) + c, abs=1e-9 * scale)
        # norm row and eigen row are upper bounds
        x_exact = np.sqrt(np.linalg.norm(a) ** 2 + 2 * np.linalg.norm(u) ** 2)
        assert soc_value(blk, phi) >= x_exact - 1e-9 * scale
        y_exact = max(-np.linalg.eigvalsh(a)[0], 0.0)
        assert eig_value(blk, phi) >= y_exact - 1e-9 * scale
        # the shifted quadratic part is concave
        assert np.linalg.eigvalsh(blk.q_mat)[-1] <= 1e-9 * scale
    # Bob row: b(phi) = -bob margin on the unit circle
    assert bob_value(pb, phi) == pytest.approx(-bob_margin(ch, w, z, phi, cfg.gamma, cfg.sigma_b2),
                                               abs=1e-9 * (1 + np.linalg.norm(w)))


@pytest.mark.parametrize("scenario", [PARTIAL, FULL])
def test_tight_bounds_exact_for_white_covariance(scenario):
    rng = np.random.default_rng(3)
    ch, unc = toy(rng, 3, 2, 1, scenario, white=True)
    w, z = design(rng, 2)
    cfg = ScenarioConfig(nt=2, m=3, k=1, rho=0.05, gamma=4.0, beta=2.0, sigma_b2=1.0, sigma_e2=0.5, scenario=scenario)
    blk = phi_blocks(ch, unc, cfg, w, z, "tight").eves[0]
    phi = unit_phases(rng, 3)
    a, u, _ = eve_blocks(ch, unc, w, z, phi, 0, cfg.beta, cfg.sigma_e2)
    x_exact = np.sqrt(np.linalg.norm(a) ** 2 + 2 * np.linalg.norm(u) ** 2)
    assert soc_value(blk, phi) == pytest.approx(x_exact, rel=1e-9)


def test_shift_constants_vanish_without_noise():
    rng = np.random.default_rng(4)
    ch, unc = toy(rng, 3, 2, 1, PARTIAL)
    sh = shift_constants(ch, unc, np.zeros((2, 2)), 0, 2.0)
    assert sh["c_c"] == 0.0 and sh["c_t"] == 0.0 and sh["c_g"] == 0.0


def test_shifted_identity_blocks():
    rng = np.random.default_rng(5)
    for m, nt in ((2, 2), (3, 1), (4, 2)):
        ch, unc = toy(rng, m, nt, 1, FULL)
        phi = unit_phases(rng, m)
        bp = shifted_identity_block_partial(unc.sigma_ge_half[0], 1.3, phi)
        ev = np.linalg.eigvalsh(bp)
        assert abs(ev[0]) <= 1e-8 * ev[-1]
        bf = shifted_identity_block_full(unc.sigma_he_half[0], unc.sigma_ge_half[0], 1.3, phi)
        ev = np.linalg.eigvalsh(bf)
        assert ev[0] >= -1e-8 * ev[-1]
        assert np.sum(ev > 1e-8 * ev[-1]) <= 2 * nt


# ---------------------------------------------------------------------------
# modulus rows
# ---------------------------------------------------------------------------


def test_ccp_rows_examples():
    phi_n = np.exp(1j * np.array([0.1, 2.0]))
    lo, hi = ccp_row_values(phi_n, phi_n, np.zeros(4))
    assert np.allclose(lo, 0) and np.allclose(hi, 0)
    lo, _ = ccp_row_values(np.zeros(2), phi_n, np.zeros(4))
    assert np.allclose(lo, 2.0)  # so b >= 2 is needed at the origin


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 6))
def test_linearization_is_a_minorant(seed, m):
    rng = np.random.default_rng(seed)
    phi, phi_n = crandn(rng, m) * 2, crandn(rng, m) * 2
    tangent = 2 * np.real(np.conj(phi) * phi_n) - np.abs(phi_n) ** 2
    assert np.all(np.abs(phi) ** 2 >= tangent - 1e-12)


# ---------------------------------------------------------------------------
# (W, Z) program
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("scenario", [PARTIAL, FULL])
def test_wz_solution_is_certified_and_tight(scenario):
    cfg = ScenarioConfig(m=3, k=2, seed=1, scenario=scenario)
    ch = generate_channels(cfg)
    unc = paper_uncertainty(ch, scenario, cfg.delta_g, cfg.delta_h)
    nz = normalize(ch, unc, cfg)
    phi = np.exp(1j * np.linspace(0, 2, 3))
    p, hd = build_wz_program(nz.ch, nz.unc, nz.cfg, phi)
    out = p.solve()
    assert out.ok
    w, z = out.value(hd.w), out.value(hd.z)
    w, z = (w + w.conj().T) / 2, (z + z.conj().T) / 2
    margins = robust_margins(nz.ch, nz.unc, nz.cfg, w, z, phi)
    assert np.all(margins >= -1e-6 * max(nz.cfg.gamma - 1, 1))
    # Bob's constraint is active at a power-minimizing solution
    assert abs(margins[0]) <= 1e-5 * (nz.cfg.gamma - 1)
    # any scaled-down design fails
    assert np.min(robust_margins(nz.ch, nz.unc, nz.cfg, 0.99 * w, 0.99 * z, phi)) < 0
    assert out.objective_value == pytest.approx(np.real(np.trace(w + z)), rel=1e-6)


def test_wz_without_eves():
    cfg = ScenarioConfig(m=2, k=0, rho=(), seed=3)
    ch = generate_channels(cfg)
    unc = paper_uncertainty(ch, PARTIAL, cfg.delta_g)
    nz = normalize(ch, unc, cfg)
    phi = np.ones(2, complex)
    p, hd = build_wz_program(nz.ch, nz.unc, nz.cfg, phi)
    out = p.solve()
    h = nz.ch.h_ab + nz.ch.g_cb.conj().T @ phi
    # MRT closed form: (gamma-1) sigma_b^2 / ||h||^2 with no artificial noise
    assert out.objective_value == pytest.approx((nz.cfg.gamma - 1) / np.linalg.norm(h) ** 2, rel=1e-6)
    assert hd.x is None
