import numpy as np
import pytest

from irs_outage.channels import (
    FULL,
    PARTIAL,
    ChannelSet,
    ConfigError,
    CsiUncertainty,
    ScenarioConfig,
    build_cascaded,
    equivalent_channel,
    gen_rician_matrix,
    generate_channels,
    load_scenario,
    paper_uncertainty,
    path_gain,
    sample_csi_error,
    sample_csi_errors,
    scenario_from_dict,
    steering_vector,
)


def test_path_gain_examples():
    assert path_gain(1.0, 3.0, 1e-4) == pytest.approx(1e-4)
    assert path_gain(10.0, 2.0, 1.0) == pytest.approx(0.01)
    d = np.linalg.norm(np.array([5, 0, 20]) - np.array([0, 50, 2]))
    assert d == pytest.approx(np.sqrt(2849))
    assert path_gain(d, 2.2, 1e-4) == pytest.approx(1e-4 * 2849 ** (-1.1))


def test_rician_limits_and_determinism():
    rng = np.random.default_rng(0)
    los = np.exp(1j * np.arange(6)).reshape(2, 3)
    out = gen_rician_matrix(2, 3, 0.5, 1e12, los, rng)
    assert np.allclose(out, np.sqrt(0.5) * los, rtol=1e-5)
    draws = gen_rician_matrix(1, 100000, 2.0, 0.0, np.zeros((1, 100000)), np.random.default_rng(1))
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(2.0, rel=0.02)
    a = gen_rician_matrix(2, 2, 1.0, 5.0, np.ones((2, 2)), np.random.default_rng(9))
    b = gen_rician_matrix(2, 2, 1.0, 5.0, np.ones((2, 2)), np.random.default_rng(9))
    assert np.array_equal(a, b)


def test_steering_vector():
    assert np.allclose(steering_vector(4, 0.0), 1)
    assert np.allclose(steering_vector(1, 0.7), [1])
    assert np.linalg.norm(steering_vector(7, 1.234)) ** 2 == pytest.approx(7)


def _toy(m=3, nt=2, k=2, seed=0):
    rng = np.random.default_rng(seed)
    c = lambda *s: rng.standard_normal(s) + 1j * rng.standard_normal(s)
    return build_cascaded(ChannelSet(h_ab=c(nt), g_ar=c(m, nt), h_rb=c(m), h_ae=c(k, nt), h_re=c(k, m)))


def test_build_cascaded_examples():
    ch = _toy()
    ones = build_cascaded(ChannelSet(ch.h_ab, ch.g_ar, np.ones(3, complex), ch.h_ae, ch.h_re))
    assert np.allclose(ones.g_cb, ch.g_ar)
    e1 = build_cascaded(ChannelSet(ch.h_ab, ch.g_ar, np.eye(3)[0].astype(complex), ch.h_ae, ch.h_re))
    assert np.allclose(e1.g_cb[0], ch.g_ar[0]) and np.allclose(e1.g_cb[1:], 0)
    assert np.allclose(ch.g_cb, np.diag(ch.h_rb.conj()) @ ch.g_ar)
    for k in range(2):
        assert np.allclose(ch.g_ce[k], np.diag(ch.h_re[k].conj()) @ ch.g_ar)


def test_equivalent_channel_examples():
    ch = _toy()
    phi = np.exp(1j * np.array([0.3, 1.0, -2.0]))
    assert np.allclose(equivalent_channel(ch.h_ab, np.zeros((3, 2)), phi), ch.h_ab)
    g = np.array([[1.0 + 2j, 3.0 - 1j]])
    assert np.allclose(equivalent_channel(np.zeros(2), g, [1.0]).conj(), g[0])
    w = np.array([0.5 - 1j, 2.0])
    h = equivalent_channel(ch.h_ab, ch.g_cb, phi)
    assert h.conj() @ w == pytest.approx(ch.h_ab.conj() @ w + phi @ ch.g_cb @ w)


def test_generate_channels_shapes_and_determinism():
    cfg = ScenarioConfig(m=5, k=3, rho=0.05)
    a, b = generate_channels(cfg), generate_channels(cfg)
    assert a.h_ab.shape == (2,) and a.g_ar.shape == (5, 2) and a.g_ce.shape == (3, 5, 2)
    assert np.array_equal(a.g_ce, b.g_ce)
    assert all(2.0 <= p[0] <= 2.0 and 45 <= p[1] <= 55 for p in a.eve_positions)


def test_realizations_nested_in_m_and_k():
    small = generate_channels(ScenarioConfig(m=3, k=1, rho=0.05, seed=4))
    big = generate_channels(ScenarioConfig(m=6, k=3, rho=0.05, seed=4))
    assert np.allclose(big.g_ar[:3], small.g_ar)
    assert np.allclose(big.h_rb[:3], small.h_rb)
    assert np.allclose(big.h_ae[:1], small.h_ae)
    assert np.allclose(big.h_ab, small.h_ab)


def test_without_irs_keeps_direct_links():
    ch = generate_channels(ScenarioConfig())
    ch0 = ch.without_irs()
    assert np.allclose(ch0.g_cb, 0) and np.allclose(ch0.g_ce, 0)
    assert np.allclose(equivalent_channel(ch0.h_ab, ch0.g_cb, np.ones(ch.m)), ch.h_ab)


def test_config_validation():
    with pytest.raises(ConfigError):
        ScenarioConfig(gamma=2.0, beta=4.0)
    with pytest.raises(ConfigError):
        ScenarioConfig(rho=(0.05,))
    with pytest.raises(ConfigError):
        ScenarioConfig(m=40, nt=2)
    with pytest.raises(ConfigError):
        ScenarioConfig(sigma_b2=0.0)
    assert ScenarioConfig().with_(k=3).rho == (0.05, 0.05, 0.05)


def test_scenario_yaml_roundtrip(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text("nt: 3\nm: 2\nk: 1\nrate_bob: 2\nrate_eve: 1\nnoise_dbm: -80\ncsi: {scenario: full, delta_g: 0.02}\n")
    cfg = load_scenario(p)
    assert (cfg.nt, cfg.m, cfg.k, cfg.gamma, cfg.beta, cfg.scenario) == (3, 2, 1, 4.0, 2.0, FULL)
    assert cfg.sigma_b2 == pytest.approx(1e-11)
    with pytest.raises(ConfigError):
        scenario_from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        scenario_from_dict({"rate_bob": "x"})


def test_error_sampling_moments():
    ch = _toy(m=3, nt=2, k=2)
    eps2 = 0.04
    unc = CsiUncertainty(PARTIAL, np.stack([eps2 * np.eye(6)] * 2))
    zero = CsiUncertainty(PARTIAL, np.zeros((2, 6, 6)))
    dh, dg = sample_csi_error(zero, 0, np.random.default_rng(0), 3, 2)
    assert dh is None and np.allclose(dg, 0)
    n = 100000
    _, g1 = sample_csi_errors(unc, 0, np.random.default_rng(1), n, 3, 2)
    ratio = np.mean(np.sum(np.abs(g1.reshape(n, -1)) ** 2, axis=1)) / (eps2 * 6)
    assert 0.98 <= ratio <= 1.02
    rng = np.random.default_rng(2)
    _, a = sample_csi_errors(unc, 0, rng, n, 3, 2)
    _, b = sample_csi_errors(unc, 1, rng, n, 3, 2)
    cross = np.mean(a.reshape(n, -1) * b.reshape(n, -1).conj(), axis=0)
    band = 4 * eps2 / np.sqrt(n)
    assert np.all(np.abs(cross) <= band)
    del ch


def test_error_sampling_column_major_covariance():
    # a non-white covariance checks that vec(dG) is unstacked column-major
    rng = np.random.default_rng(3)
    b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    sig = b @ b.conj().T
    unc = CsiUncertainty(PARTIAL, sig[None])
    n = 200000
    _, dg = sample_csi_errors(unc, 0, np.random.default_rng(4), n, 2, 2)
    v = dg.transpose(0, 2, 1).reshape(n, 4)  # column-major vec per draw
    emp = v.T @ v.conj() / n
    assert np.max(np.abs(emp - sig)) <= 0.03 * np.max(np.abs(sig))


def test_paper_uncertainty_values():
    ch = _toy()
    unc = paper_uncertainty(ch, FULL, 0.1, 0.2)
    assert unc.sigma_ge[0][0, 0] == pytest.approx(0.01 * np.sum(np.abs(ch.g_ce[0]) ** 2))
    assert unc.sigma_he[1][1, 1] == pytest.approx(0.04 * np.sum(np.abs(ch.h_ae[1]) ** 2))
    with pytest.raises(ConfigError):
        CsiUncertainty(FULL, unc.sigma_ge)
