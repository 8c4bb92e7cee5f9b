"""Network geometry, Rician channel generation and statistical CSI errors.

Conventions
-----------
* Alice and the IRS carry half-wavelength uniform linear arrays.  The
  steering phase of element ``i`` is ``pi * i * sin(angle)`` where
  ``angle = atan2(dx, dy)`` is the azimuth of the target measured from the
  +y axis (the array broadside); elevation is ignored.
* LoS components are single steering vectors for MISO links and the
  rank-one product ``(c d^H)^T`` for the Alice-IRS matrix.
* All quantities are linear (watts, linear gains).  Conversions from dB
  happen only in :func:`db_to_linear` / :func:`dbm_to_watts`.
* Every random draw comes from :func:`substream`, keyed by (seed, labels),
  so adding an Eve or an IRS element never perturbs the other links.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .matrix_kit import MAX_DENSE_DIM, DimensionError, herm_sqrt, unvec

PARTIAL = "partial"
FULL = "full"
LINKS = ("ar", "rb", "re", "ab", "ae")


class ConfigError(ValueError):
    pass


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0


def _label_code(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label)
    return zlib.crc32(str(label).encode())


def substream(seed: int, *labels) -> np.random.Generator:
    """Independent generator for ``seed`` and a tuple of string/int labels."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_label_code(x) for x in labels))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class LinkFadingParams:
    l0: float = db_to_linear(-40.0)
    alpha: dict = field(default_factory=lambda: {"ar": 2.2, "rb": 2.0, "re": 2.0, "ab": 3.5, "ae": 3.5})
    rician: dict = field(default_factory=lambda: {k: 5.0 for k in LINKS})

    def __post_init__(self):
        if self.l0 <= 0:
            raise ConfigError("l0 must be positive")
        for name in LINKS:
            if self.alpha.get(name, -1) < 0 or self.rician.get(name, -1) < 0:
                raise ConfigError(f"missing or negative fading parameter for link {name!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    nt: int = 2
    m: int = 4
    k: int = 2
    gamma: float = 2.0**3
    beta: float = 2.0**1
    rho: tuple = (0.05, 0.05)
    sigma_b2: float = dbm_to_watts(-85.0)
    sigma_e2: float = dbm_to_watts(-85.0)
    alice: tuple = (5.0, 0.0, 20.0)
    irs: tuple = (0.0, 50.0, 2.0)
    bob: tuple = (3.0, 50.0, 0.0)
    eve_segment: tuple = ((2.0, 45.0, 0.0), (2.0, 55.0, 0.0))
    scenario: str = PARTIAL
    delta_g: float = 0.01
    delta_h: float = 0.01
    fading: LinkFadingParams = field(default_factory=LinkFadingParams)
    seed: int = 0

    def __post_init__(self):
        rho = self.rho
        if np.isscalar(rho):
            rho = (float(rho),) * self.k
        object.__setattr__(self, "rho", tuple(float(r) for r in rho))
        if self.nt < 1 or self.m < 0 or self.k < 0:
            raise ConfigError("nt >= 1, m >= 0, k >= 0 required")
        if self.m * self.nt > MAX_DENSE_DIM:
            raise ConfigError(f"M*Nt = {self.m * self.nt} exceeds dense cap {MAX_DENSE_DIM}")
        if len(self.rho) != self.k:
            raise ConfigError(f"need {self.k} outage probabilities, got {len(self.rho)}")
        if not all(0.0 < r <= 1.0 for r in self.rho):
            raise ConfigError("outage probabilities must lie in (0, 1]")
        if not (self.gamma >= self.beta >= 1.0):
            raise ConfigError("require gamma >= beta >= 1")
        if self.sigma_b2 <= 0 or self.sigma_e2 <= 0:
            raise ConfigError("noise powers must be positive")
        if self.scenario not in (PARTIAL, FULL):
            raise ConfigError(f"unknown CSI scenario {self.scenario!r}")
        if not (0.0 <= self.delta_g < 1.0 and 0.0 <= self.delta_h < 1.0):
            raise ConfigError("normalized CSI errors must lie in [0, 1)")

    def with_(self, **changes) -> "ScenarioConfig":
        if "k" in changes and "rho" not in changes:
            changes["rho"] = (self.rho[0] if self.rho else 0.05,) * changes["k"]
        return replace(self, **changes)


@dataclass
class ChannelSet:
    h_ab: np.ndarray  # (Nt,)
    g_ar: np.ndarray  # (M, Nt)
    h_rb: np.ndarray  # (M,)
    h_ae: np.ndarray  # (K, Nt)
    h_re: np.ndarray  # (K, M)
    g_cb: np.ndarray | None = None  # (M, Nt)
    g_ce: np.ndarray | None = None  # (K, M, Nt)
    eve_positions: np.ndarray | None = None

    @property
    def nt(self) -> int:
        return self.h_ab.shape[0]

    @property
    def m(self) -> int:
        return self.h_rb.shape[0]

    @property
    def k(self) -> int:
        return self.h_ae.shape[0]

    def scaled(self, factor: float) -> "ChannelSet":
        """All channels multiplied by ``factor`` (used for noise normalization)."""
        f = lambda a: None if a is None else a * factor
        return ChannelSet(f(self.h_ab), self.g_ar.copy(), self.h_rb * factor, f(self.h_ae),
                          self.h_re * factor, f(self.g_cb), f(self.g_ce), self.eve_positions)

    def without_irs(self) -> "ChannelSet":
        """Same realization with the reflecting path switched off (G_ar = 0)."""
        return build_cascaded(replace(self, g_ar=np.zeros_like(self.g_ar), g_cb=None, g_ce=None))

    def subset_eves(self, idx: Sequence[int]) -> "ChannelSet":
        idx = list(idx)
        return replace(self, h_ae=self.h_ae[idx], h_re=self.h_re[idx],
                       g_ce=None if self.g_ce is None else self.g_ce[idx],
                       eve_positions=None if self.eve_positions is None else self.eve_positions[idx])


@dataclass
class CsiUncertainty:
    scenario: str
    sigma_ge: np.ndarray  # (K, M*Nt, M*Nt)
    sigma_he: np.ndarray | None = None  # (K, Nt, Nt), Full only
    delta_g: float = 0.0
    delta_h: float = 0.0

    def __post_init__(self):
        if self.scenario not in (PARTIAL, FULL):
            raise ConfigError(f"unknown CSI scenario {self.scenario!r}")
        if self.scenario == FULL and self.sigma_he is None:
            raise ConfigError("full-CSI-error scenario needs sigma_he")

    @property
    def k(self) -> int:
        return self.sigma_ge.shape[0]

    @cached_property
    def sigma_ge_half(self) -> np.ndarray:
        return np.array([herm_sqrt(s) for s in self.sigma_ge]).reshape(self.sigma_ge.shape)

    @cached_property
    def sigma_he_half(self) -> np.ndarray | None:
        if self.sigma_he is None:
            return None
        return np.array([herm_sqrt(s) for s in self.sigma_he]).reshape(self.sigma_he.shape)

    def scaled(self, factor2: float) -> "CsiUncertainty":
        """Covariances multiplied by ``factor2`` (the square of a channel scale)."""
        return CsiUncertainty(self.scenario, self.sigma_ge * factor2,
                              None if self.sigma_he is None else self.sigma_he * factor2,
                              self.delta_g, self.delta_h)

    def subset_eves(self, idx: Sequence[int]) -> "CsiUncertainty":
        idx = list(idx)
        return CsiUncertainty(self.scenario, self.sigma_ge[idx],
                              None if self.sigma_he is None else self.sigma_he[idx],
                              self.delta_g, self.delta_h)


def path_gain(distance_m: float, alpha: float, l0: float) -> float:
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    return l0 * distance_m ** (-alpha)


def steering_vector(n: int, angle: float) -> np.ndarray:
    if n < 1:
        raise ValueError("array size must be >= 1")
    return np.exp(1j * np.pi * np.arange(n) * np.sin(angle))


def azimuth(src, dst) -> float:
    d = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    return float(np.arctan2(d[0], d[1]))


def distance(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def cscg(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) entries."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def gen_rician_matrix(rows: int, cols: int, gain: float, rician: float, los, rng) -> np.ndarray:
    if gain < 0 or rician < 0:
        raise ValueError("gain and Rician factor must be non-negative")
    los = np.asarray(los, dtype=complex).reshape(rows, cols)
    nlos = cscg(rng, (rows, cols))
    return np.sqrt(gain) * (np.sqrt(rician / (1.0 + rician)) * los + np.sqrt(1.0 / (1.0 + rician)) * nlos)


def _miso(n, src, dst, link, fading, rng, array_at):
    gain = path_gain(distance(src, dst), fading.alpha[link], fading.l0)
    ang = azimuth(array_at, dst if array_at is src else src)
    los = steering_vector(n, ang).reshape(n, 1)
    return gen_rician_matrix(n, 1, gain, fading.rician[link], los, rng).ravel()


def eve_positions(cfg: ScenarioConfig) -> np.ndarray:
    a, b = (np.asarray(p, dtype=float) for p in cfg.eve_segment)
    ts = [substream(cfg.seed, "eve-pos", k).uniform() for k in range(cfg.k)]
    return np.array([a + t * (b - a) for t in ts]).reshape(cfg.k, 3)


def generate_channels(cfg: ScenarioConfig) -> ChannelSet:
    """One deterministic network realization for ``cfg`` (cascaded channels filled)."""
    f, nt, m = cfg.fading, cfg.nt, cfg.m
    g_gain = path_gain(distance(cfg.alice, cfg.irs), f.alpha["ar"], f.l0)
    c = steering_vector(nt, azimuth(cfg.alice, cfg.irs))
    d = steering_vector(m, azimuth(cfg.irs, cfg.alice)) if m else np.zeros(0, complex)
    los_t = np.outer(c, d.conj())  # G_ar^T LoS = c d^H
    # one substream per IRS element row keeps realizations nested in M
    rows = [gen_rician_matrix(1, nt, g_gain, f.rician["ar"], los_t[:, i].reshape(1, nt),
                              substream(cfg.seed, "g_ar", i)) for i in range(m)]
    g_ar = np.vstack(rows) if m else np.zeros((0, nt), complex)

    def irs_link(dst, link, *labels):
        if m == 0:
            return np.zeros(0, complex)
        gain = path_gain(distance(cfg.irs, dst), f.alpha[link], f.l0)
        los = steering_vector(m, azimuth(cfg.irs, dst))
        # element-wise draws so that the first M entries do not depend on M
        nlos = np.array([cscg(substream(cfg.seed, *labels, i), ()) for i in range(m)])
        kap = f.rician[link]
        return np.sqrt(gain) * (np.sqrt(kap / (1 + kap)) * los + np.sqrt(1 / (1 + kap)) * nlos)

    h_ab = _miso(nt, cfg.alice, cfg.bob, "ab", f, substream(cfg.seed, "h_ab"), cfg.alice)
    h_rb = irs_link(cfg.bob, "rb", "h_rb")
    pos = eve_positions(cfg)
    h_ae = np.array([_miso(nt, cfg.alice, p, "ae", f, substream(cfg.seed, "h_ae", k), cfg.alice)
                     for k, p in enumerate(pos)]).reshape(cfg.k, nt)
    h_re = np.array([irs_link(p, "re", "h_re", k) for k, p in enumerate(pos)]).reshape(cfg.k, m)
    return build_cascaded(ChannelSet(h_ab=h_ab, g_ar=g_ar, h_rb=h_rb, h_ae=h_ae, h_re=h_re,
                                     eve_positions=pos))


def build_cascaded(ch: ChannelSet) -> ChannelSet:
    m, nt = ch.g_ar.shape
    if ch.h_rb.shape != (m,) or ch.h_re.shape[1:] != (m,):
        raise DimensionError("IRS-side channel lengths do not match G_ar rows")
    g_cb = ch.h_rb.conj()[:, None] * ch.g_ar
    g_ce = ch.h_re.conj()[:, :, None] * ch.g_ar[None, :, :]
    return replace(ch, g_cb=g_cb, g_ce=g_ce.reshape(ch.k, m, nt))


def equivalent_channel(direct, cascaded, phi) -> np.ndarray:
    """``h`` with ``h^H = direct^H + phi^T cascaded``, i.e. ``direct + cascaded^H phi*``."""
    direct = np.asarray(direct, dtype=complex).ravel()
    cascaded = np.asarray(cascaded, dtype=complex)
    phi = np.asarray(phi, dtype=complex).ravel()
    if cascaded.shape != (phi.size, direct.size):
        raise DimensionError(f"cascaded {cascaded.shape} vs phi {phi.size}, direct {direct.size}")
    return direct + cascaded.conj().T @ phi.conj()


def paper_uncertainty(ch: ChannelSet, scenario: str, delta_g: float, delta_h: float = 0.0) -> CsiUncertainty:
    """Scaled-identity covariances built from the normalized error levels.

    ``Sigma_ge,k = delta_g^2 ||vec(G_ce,k)||^2 I`` and, for the full scenario,
    ``Sigma_he,k = delta_h^2 ||h_ae,k||^2 I`` (no division by dimension).
    """
    m, nt, k = ch.m, ch.nt, ch.k
    eg = delta_g**2 * np.array([np.sum(np.abs(g) ** 2) for g in ch.g_ce]).reshape(k)
    sigma_ge = eg[:, None, None] * np.eye(m * nt)[None]
    sigma_he = None
    if scenario == FULL:
        eh = delta_h**2 * np.sum(np.abs(ch.h_ae) ** 2, axis=1)
        sigma_he = eh[:, None, None] * np.eye(nt)[None]
    return CsiUncertainty(scenario, sigma_ge.reshape(k, m * nt, m * nt), sigma_he, delta_g, delta_h)


def sample_csi_error(unc: CsiUncertainty, k: int, rng, m: int | None = None, nt: int | None = None):
    """One draw ``(dh, dG)``; ``dh`` is ``None`` in the partial scenario."""
    dh, dg = sample_csi_errors(unc, k, rng, 1, m, nt)
    return (None if dh is None else dh[0]), dg[0]


def sample_csi_errors(unc: CsiUncertainty, k: int, rng, n: int, m: int | None = None, nt: int | None = None):
    """``n`` i.i.d. draws; returns ``dh`` of shape (n, Nt) or ``None`` and ``dG`` of shape (n, M, Nt)."""
    d = unc.sigma_ge.shape[1]
    if m is None or nt is None:
        if unc.sigma_he is not None:
            nt = unc.sigma_he.shape[1]
            m = d // nt
        else:
            raise ValueError("m and nt are required when sigma_he is absent")
    v = cscg(rng, (n, d))
    g = v @ unc.sigma_ge_half[k].T
    dg = g.reshape(n, nt, m).transpose(0, 2, 1)  # column-major unvec of each row
    dh = None
    if unc.scenario == FULL:
        dh = cscg(rng, (n, nt)) @ unc.sigma_he_half[k].T
    return dh, dg


def unvec_error(g, m: int, nt: int) -> np.ndarray:
    return unvec(g, m, nt)


def load_scenario(path) -> ScenarioConfig:
    """Read a YAML scenario file (see ``scenarios/README`` in the repository for keys)."""
    import yaml

    raw = yaml.safe_load(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return scenario_from_dict(raw)


def scenario_from_dict(raw: dict) -> ScenarioConfig:
    raw = dict(raw)
    kw = {}
    try:
        for key in ("nt", "m", "k", "seed"):
            if key in raw:
                kw[key] = int(raw.pop(key))
        if "rate_bob" in raw:
            kw["gamma"] = 2.0 ** float(raw.pop("rate_bob"))
        if "rate_eve" in raw:
            kw["beta"] = 2.0 ** float(raw.pop("rate_eve"))
        if "rho" in raw:
            r = raw.pop("rho")
            kw["rho"] = r if np.isscalar(r) else tuple(r)
        elif "k" in kw:
            kw["rho"] = 0.05
        noise = raw.pop("noise_dbm", None)
        if noise is not None:
            kw["sigma_b2"] = kw["sigma_e2"] = dbm_to_watts(float(noise))
        if "noise_bob_dbm" in raw:
            kw["sigma_b2"] = dbm_to_watts(float(raw.pop("noise_bob_dbm")))
        if "noise_eve_dbm" in raw:
            kw["sigma_e2"] = dbm_to_watts(float(raw.pop("noise_eve_dbm")))
        csi = raw.pop("csi", {}) or {}
        for key in ("scenario", "delta_g", "delta_h"):
            if key in csi:
                kw[key] = csi[key] if key == "scenario" else float(csi[key])
        geo = raw.pop("geometry", {}) or {}
        for key in ("alice", "irs", "bob"):
            if key in geo:
                kw[key] = tuple(float(v) for v in geo[key])
        if "eve_segment" in geo:
            kw["eve_segment"] = tuple(tuple(float(v) for v in p) for p in geo["eve_segment"])
        fad = raw.pop("fading", None)
        if fad:
            base = LinkFadingParams()
            alpha = {**base.alpha, **{k: float(v) for k, v in (fad.get("alpha") or {}).items()}}
            rician = {**base.rician, **{k: float(v) for k, v in (fad.get("rician") or {}).items()}}
            l0 = db_to_linear(float(fad["l0_db"])) if "l0_db" in fad else base.l0
            kw["fading"] = LinkFadingParams(l0=l0, alpha=alpha, rician=rician)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad scenario value: {exc}") from exc
    raw.pop("name", None)
    raw.pop("ao", None)
    if raw:
        raise ConfigError(f"unknown scenario keys: {sorted(raw)}")
    return ScenarioConfig(**kw)
