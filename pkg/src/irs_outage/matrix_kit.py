"""Dense complex-matrix primitives used by the constraint algebra.

All matrices are plain ``numpy`` arrays.  ``vec`` stacks columns
(Fortran / column-major order) everywhere in the package; every remap
shape below depends on that convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Largest entry count a single Kronecker product may produce.
KRON_MAX_ENTRIES = 1 << 24
# Largest M*Nt handled by the dense robust-constraint builders.
MAX_DENSE_DIM = 64

HERMITIAN_TOL = 1e-10
PSD_CLAMP = 1e-8


class NonPsdError(ValueError):
    """A matrix that must be positive semidefinite has a clearly negative eigenvalue."""


class DimensionError(ValueError):
    """Shapes are inconsistent or an instance is too large for dense algebra."""


@dataclass(frozen=True)
class HermitianPsdFactor:
    base: np.ndarray
    factor: np.ndarray

    @property
    def rank(self) -> int:
        return self.factor.shape[1]

    def reconstruct(self) -> np.ndarray:
        return self.factor @ self.factor.conj().T


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def herm(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def kron(a, b, max_entries: int = KRON_MAX_ENTRIES) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    n = a.size * b.size
    if n > max_entries:
        raise DimensionError(f"kron would produce {n} entries (cap {max_entries})")
    return np.kron(a, b)


def vec(a) -> np.ndarray:
    """Column-major stacking, returned as an ``(rows*cols, 1)`` column."""
    a = as_matrix(a)
    return a.reshape(-1, 1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    if v.size != rows * cols:
        raise DimensionError(f"cannot reshape {v.size} entries into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def unvec_remap(sigma_half, m: int, nt: int) -> np.ndarray:
    """Refill ``vec(sigma_half)`` column-major into an ``M x M*Nt^2`` matrix.

    With ``X`` the result, ``Tr(S (Xi^T kron E) S) = phi^T X (I kron Xi) X^H phi*``
    for ``E = phi* phi^T`` and Hermitian ``S = sigma_half``.
    """
    s = as_matrix(sigma_half)
    d = m * nt
    if s.shape != (d, d):
        raise DimensionError(f"sigma_half must be {d}x{d}, got {s.shape}")
    return unvec(vec(s), m, m * nt * nt)


def is_hermitian(h, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    return bool(np.max(np.abs(h - herm(h)), initial=0.0) <= tol * scale)


def hermitize(h) -> np.ndarray:
    h = as_matrix(h)
    return 0.5 * (h + herm(h))


def _checked_eigh(h, tol: float):
    h = as_matrix(h)
    if not is_hermitian(h, tol):
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigh(hermitize(h))


def eig_extremes(h, tol: float = HERMITIAN_TOL) -> tuple[float, float]:
    w = _checked_eigh(h, tol)[0]
    return float(w[0]), float(w[-1])


def lambda_max(h) -> float:
    return eig_extremes(h)[1]


def lambda_min(h) -> float:
    return eig_extremes(h)[0]


def _psd_eigh(h, tol: float):
    w, v = _checked_eigh(h, tol)
    norm = float(np.max(np.abs(w), initial=0.0))
    if w.size and w[0] < -PSD_CLAMP * max(norm, 1e-300):
        raise NonPsdError(f"eigenvalue {w[0]:.3e} below clamp (norm {norm:.3e})")
    return np.clip(w, 0.0, None), v, norm


def herm_sqrt(sigma, tol: float = HERMITIAN_TOL) -> np.ndarray:
    w, v, _ = _psd_eigh(sigma, tol)
    return hermitize((v * np.sqrt(w)) @ herm(v))


def psd_factor(h, tol: float = HERMITIAN_TOL, rank_tol: float = 1e-12) -> HermitianPsdFactor:
    """Return ``F`` (n x r) with ``F F^H = h``; r counts eigenvalues above ``rank_tol * ||h||``."""
    base = as_matrix(h)
    w, v, norm = _psd_eigh(base, tol)
    keep = w > rank_tol * norm if norm > 0 else np.zeros_like(w, dtype=bool)
    factor = v[:, keep] * np.sqrt(w[keep])
    return HermitianPsdFactor(base=hermitize(base), factor=factor)


def spectral_norm(a) -> float:
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def project_psd(h) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues zeroed)."""
    w, v = np.linalg.eigh(hermitize(h))
    return hermitize((v * np.clip(w, 0.0, None)) @ herm(v))
