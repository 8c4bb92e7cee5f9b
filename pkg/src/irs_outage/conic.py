"""Small solver-agnostic conic modelling layer.

Decision variables are real scalars.  Expressions (:class:`Affine`) are
affine maps ``x -> C x + d`` with *complex* ``C`` and ``d`` so that complex
vectors and Hermitian matrices can be written naturally; matrices are
stored column-major like everywhere else in the package.

Cones
-----
``zero``     every row equals 0
``nonneg``   every row is >= 0
``soc``      first row >= Euclidean norm of the remaining rows
``psd``      a real symmetric ``n x n`` matrix stored column-major (n^2 rows)

Hermitian PSD constraints use the real embedding
``H -> [[Re H, -Im H], [Im H, Re H]]`` which is PSD iff ``H`` is.

Backends: Clarabel (default) and CVXOPT.  Select with ``backend=`` or the
``IRS_OUTAGE_SOLVER`` environment variable.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

OPTIMAL = "optimal"
INACCURATE = "optimal_inaccurate"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical_failure"

CONE_KINDS = ("zero", "nonneg", "soc", "psd")
DEFAULT_TOL = 1e-8
CHECK_TOL = 1e-6


class Affine:
    """Complex affine expression ``coef @ x + const`` with a column-major shape."""

    __array_priority__ = 100

    def __init__(self, coef, const, shape=None):
        self.coef = np.asarray(coef, dtype=complex)
        self.const = np.asarray(const, dtype=complex).ravel()
        if self.coef.ndim != 2 or self.coef.shape[0] != self.const.size:
            raise ValueError("coefficient/constant size mismatch")
        self.shape = tuple(shape) if shape is not None else (self.const.size,)
        if int(np.prod(self.shape)) != self.const.size:
            raise ValueError("shape does not match expression size")

    # --- construction helpers -------------------------------------------------
    @staticmethod
    def constant(value, nvars: int = 0) -> "Affine":
        v = np.asarray(value, dtype=complex)
        shape = v.shape if v.ndim else (1,)
        flat = v.reshape(-1, order="F")
        return Affine(np.zeros((flat.size, nvars), complex), flat, shape)

    @property
    def size(self) -> int:
        return self.const.size

    @property
    def nvars(self) -> int:
        return self.coef.shape[1]

    def _padded(self, n: int) -> np.ndarray:
        if self.nvars == n:
            return self.coef
        out = np.zeros((self.size, n), complex)
        out[:, : self.nvars] = self.coef
        return out

    def _rows(self):
        return self.shape[0], (self.shape[1] if len(self.shape) > 1 else 1)

    # --- arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "Affine":
        if isinstance(other, Affine):
            return other
        v = np.asarray(other, dtype=complex)
        if v.ndim == 0:
            v = np.full(self.shape, complex(v))
        return Affine.constant(v)

    def __add__(self, other):
        o = self._coerce(other)
        if o.size != self.size:
            raise ValueError(f"size mismatch {self.shape} vs {o.shape}")
        n = max(self.nvars, o.nvars)
        return Affine(self._padded(n) + o._padded(n), self.const + o.const, self.shape)

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.coef, -self.const, self.shape)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        s = complex(scalar) if not isinstance(scalar, Affine) else None
        if s is None:
            raise TypeError("only scalar multiplication is affine")
        return Affine(self.coef * s, self.const * s, self.shape)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __rmatmul__(self, left):
        """``L @ X``: ``vec(L X) = (I kron L) vec(X)``."""
        left = np.atleast_2d(np.asarray(left, dtype=complex))
        r, c = self._rows()
        if left.shape[1] != r:
            raise ValueError(f"cannot multiply {left.shape} by {self.shape}")
        op = np.kron(np.eye(c), left)
        shape = (left.shape[0], c) if len(self.shape) > 1 else (left.shape[0],)
        return Affine(op @ self.coef, op @ self.const, shape)

    def __matmul__(self, right):
        """``X @ R``: ``vec(X R) = (R^T kron I) vec(X)``."""
        right = np.asarray(right, dtype=complex)
        vec_out = right.ndim == 1
        right = right.reshape(-1, 1) if vec_out else right
        r, c = self._rows()
        if right.shape[0] != c:
            raise ValueError(f"cannot multiply {self.shape} by {right.shape}")
        op = np.kron(right.T, np.eye(r))
        shape = (r,) if vec_out else (r, right.shape[1])
        return Affine(op @ self.coef, op @ self.const, shape)

    # --- structure ----------------------------------------------------------
    @property
    def real(self):
        return Affine(self.coef.real, self.const.real, self.shape)

    @property
    def imag(self):
        return Affine(self.coef.imag, self.const.imag, self.shape)

    def conj(self):
        return Affine(self.coef.conj(), self.const.conj(), self.shape)

    def _perm_transpose(self):
        r, c = self._rows()
        idx = np.arange(r * c).reshape(r, c, order="F").T.reshape(-1, order="F")
        return idx, (c, r)

    @property
    def T(self):
        idx, shape = self._perm_transpose()
        return Affine(self.coef[idx], self.const[idx], shape)

    @property
    def H(self):
        return self.T.conj()

    def trace(self):
        r, c = self._rows()
        if r != c:
            raise ValueError("trace of non-square expression")
        idx = np.arange(r) * (r + 1)
        return Affine(self.coef[idx].sum(0, keepdims=True), [self.const[idx].sum()])

    def sum(self):
        return Affine(self.coef.sum(0, keepdims=True), [self.const.sum()])

    def vec(self):
        return Affine(self.coef, self.const, (self.size,))

    def reshape(self, rows: int, cols: int):
        return Affine(self.coef, self.const, (rows, cols))

    def __getitem__(self, item):
        if isinstance(item, tuple):
            r, _ = self._rows()
            i, j = item
            flat = j * r + i
            return Affine(self.coef[[flat]], self.const[[flat]])
        idx = np.arange(self.size)[item]
        idx = np.atleast_1d(idx)
        return Affine(self.coef[idx], self.const[idx])

    def dot(self, vec_const):
        """``sum_i v_i * expr_i`` (no conjugation)."""
        v = np.asarray(vec_const, dtype=complex).ravel()
        return Affine(v[None] @ self.coef, [v @ self.const])

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        val = self.coef @ x[: self.nvars] + self.const
        if len(self.shape) == 2:
            return val.reshape(self.shape, order="F")
        return val

    def __repr__(self):
        return f"Affine(shape={self.shape}, nvars={self.nvars})"


def vstack(*exprs) -> Affine:
    exprs = [e if isinstance(e, Affine) else Affine.constant(np.atleast_1d(e)) for e in exprs]
    n = max(e.nvars for e in exprs)
    coef = np.vstack([e._padded(n) for e in exprs])
    const = np.concatenate([e.const for e in exprs])
    return Affine(coef, const)


def bmat(blocks) -> Affine:
    """Assemble a block matrix from Affine / constant blocks (``None`` means zeros)."""
    def shape_of(b):
        if b is None:
            return None
        if isinstance(b, Affine):
            return b._rows()
        a = np.atleast_2d(np.asarray(b))
        return a.shape
    heights = [next(shape_of(b)[0] for b in row if b is not None) for row in blocks]
    widths = [next(shape_of(row[j])[1] for row in blocks if row[j] is not None) for j in range(len(blocks[0]))]
    n = max([b.nvars for row in blocks for b in row if isinstance(b, Affine)] + [0])
    rr, cc = sum(heights), sum(widths)
    coef = np.zeros((rr * cc, n), complex)
    const = np.zeros(rr * cc, complex)
    r0 = 0
    for i, row in enumerate(blocks):
        c0 = 0
        for j, b in enumerate(row):
            h, w = heights[i], widths[j]
            if b is not None:
                e = b if isinstance(b, Affine) else Affine.constant(np.atleast_2d(np.asarray(b, dtype=complex)))
                if e._rows() != (h, w):
                    raise ValueError(f"block ({i},{j}) has shape {e.shape}, expected {(h, w)}")
                ec = e._padded(n)
                for jj in range(w):
                    tgt = (c0 + jj) * rr + r0 + np.arange(h)
                    src = jj * h + np.arange(h)
                    coef[tgt] = ec[src]
                    const[tgt] = e.const[src]
            c0 += w
        r0 += heights[i]
    return Affine(coef, const, (rr, cc))


def apply_linear(op, expr: Affine, shape) -> Affine:
    """Affine image ``op @ vec(expr)`` reshaped to ``shape`` (column-major)."""
    op = np.asarray(op, dtype=complex)
    return Affine(op @ expr.coef, op @ expr.const, shape)


def quad_lin(left, expr: Affine, right) -> Affine:
    """``left^H X right`` for a constant pair and matrix expression ``X`` (scalar result)."""
    left = np.asarray(left, dtype=complex).ravel()
    right = np.asarray(right, dtype=complex).ravel()
    r, c = expr._rows()
    if left.size != r or right.size != c:
        raise ValueError("quad_lin dimension mismatch")
    return expr.dot(np.kron(right, left.conj()))


def trace_prod(const_mat, expr: Affine) -> Affine:
    """``Tr(C X)`` for constant ``C``."""
    c = np.asarray(const_mat, dtype=complex)
    return expr.dot(c.T.reshape(-1, order="F"))


def real_embed(expr: Affine) -> Affine:
    """Real symmetric embedding ``[[Re H, -Im H], [Im H, Re H]]`` of a Hermitian expression."""
    n, c = expr._rows()
    if n != c:
        raise ValueError("embedding needs a square expression")
    re = expr.real
    im = expr.imag
    idx = np.arange(n * n).reshape(n, n, order="F")
    big = np.zeros((2 * n, 2 * n), dtype=int)
    sign = np.ones((2 * n, 2 * n))
    src = np.zeros((2 * n, 2 * n), dtype=int)  # 0: real part, 1: imaginary part
    big[:n, :n] = idx
    big[n:, n:] = idx
    big[n:, :n] = idx
    big[:n, n:] = idx
    src[n:, :n] = 1
    src[:n, n:] = 1
    sign[:n, n:] = -1
    order = big.reshape(-1, order="F")
    which = src.reshape(-1, order="F")
    sgn = sign.reshape(-1, order="F")
    nv = expr.nvars
    coef = np.where(which[:, None] == 0, re.coef[order].real, im.coef[order].real) * sgn[:, None]
    const = np.where(which == 0, re.const[order].real, im.const[order].real) * sgn
    return Affine(coef.reshape(-1, nv), const, (2 * n, 2 * n))


@dataclass
class Constraint:
    kind: str
    coef: np.ndarray  # real (rows, n)
    const: np.ndarray  # real (rows,)
    dim: int
    label: str = ""


@dataclass
class SolveOutcome:
    status: str
    x: np.ndarray | None
    objective_value: float
    solver_stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in (OPTIMAL, INACCURATE) and self.x is not None

    def value(self, expr: Affine):
        if self.x is None:
            raise ValueError(f"no solution available (status {self.status})")
        v = expr.value(self.x)
        return v


class ConicProgram:
    def __init__(self):
        self.num_vars = 0
        self.var_names: list[tuple[str, int, int]] = []
        self.constraints: list[Constraint] = []
        self.objective = np.zeros(0)
        self.objective_const = 0.0
        self.sense = "min"

    # --- variables -----------------------------------------------------------
    def _new(self, n: int, name: str) -> int:
        start = self.num_vars
        self.num_vars += n
        self.var_names.append((name or f"v{len(self.var_names)}", start, n))
        return start

    def add_var(self, n: int = 1, name: str = "") -> Affine:
        start = self._new(n, name)
        coef = np.zeros((n, self.num_vars), complex)
        coef[np.arange(n), start + np.arange(n)] = 1.0
        return Affine(coef, np.zeros(n))

    def add_complex_var(self, n: int, name: str = "") -> Affine:
        start = self._new(2 * n, name)
        coef = np.zeros((n, self.num_vars), complex)
        coef[np.arange(n), start + np.arange(n)] = 1.0
        coef[np.arange(n), start + n + np.arange(n)] = 1j
        return Affine(coef, np.zeros(n))

    def add_hermitian_var(self, side: int, name: str = "") -> Affine:
        """``side^2`` real scalars: diagonal, then (Re, Im) of each upper entry."""
        if side < 1:
            raise ValueError("side must be >= 1")
        start = self._new(side * side, name)
        coef = np.zeros((side * side, self.num_vars), complex)
        pos = start
        for i in range(side):
            coef[i * side + i, pos] = 1.0
            pos += 1
        for j in range(side):
            for i in range(j):
                up, lo = j * side + i, i * side + j
                coef[up, pos] = 1.0
                coef[lo, pos] = 1.0
                coef[up, pos + 1] = 1j
                coef[lo, pos + 1] = -1j
                pos += 2
        return Affine(coef, np.zeros(side * side), (side, side))

    @staticmethod
    def hermitian_to_scalars(h) -> np.ndarray:
        """Inverse of the ``add_hermitian_var`` parameterization (for tests / warm values)."""
        h = np.asarray(h, dtype=complex)
        side = h.shape[0]
        out = [h[i, i].real for i in range(side)]
        for j in range(side):
            for i in range(j):
                out += [h[i, j].real, h[i, j].imag]
        return np.array(out)

    # --- constraints ------------------------------------------------------------
    def _push(self, kind: str, expr: Affine, dim: int, label: str):
        coef = expr._padded(self.num_vars).real.copy()
        self.constraints.append(Constraint(kind, coef, expr.const.real.copy(), dim, label))

    def add_zero(self, expr: Affine, label: str = ""):
        """Complex equality: real and imaginary parts vanish (imaginary rows dropped if identically 0)."""
        self._push("zero", expr.real, expr.size, label)
        im = expr.imag
        if np.any(im.coef != 0) or np.any(im.const != 0):
            self._push("zero", im, im.size, label + ":im")

    def add_nonneg(self, expr: Affine, label: str = ""):
        """Real part of every entry >= 0."""
        e = expr.real.vec()
        self._push("nonneg", e, e.size, label)

    def add_soc(self, t: Affine, xs, label: str = ""):
        """``||xs|| <= t``; complex entries of ``xs`` count with both parts."""
        parts = [t.real.vec()]
        for x in xs if isinstance(xs, (list, tuple)) else [xs]:
            x = x.vec()
            parts.append(x.real)
            if np.any(x.coef.imag != 0) or np.any(x.const.imag != 0):
                parts.append(x.imag)
        e = vstack(*parts)
        self._push("soc", e, e.size, label)

    def add_quad_le(self, f_mat, v: Affine, t: Affine, label: str = ""):
        """``||F v||^2 <= t`` via the rotated cone ``||[2 F v; t - 1]|| <= t + 1``."""
        fv = np.asarray(f_mat, dtype=complex) @ v.vec()
        t = t.real.vec()
        self.add_soc(t + 1.0, [2.0 * fv, t - 1.0], label)

    def add_psd(self, expr: Affine, label: str = "", hermitian: bool = True):
        """Hermitian expression PSD via the real embedding (or a real symmetric expression)."""
        if expr.shape[0] == 0:
            return  # an empty matrix is trivially PSD
        e = real_embed(expr) if hermitian else expr.real
        n = e.shape[0]
        self._push("psd", e.vec(), n, label)

    # --- objective -----------------------------------------------------------
    def minimize(self, expr: Affine):
        e = expr.real
        self.objective = e._padded(self.num_vars)[0].real.copy()
        self.objective_const = float(e.const[0].real)
        self.sense = "min"

    def maximize(self, expr: Affine):
        self.minimize(-expr)
        self.sense = "max"

    # --- evaluation ------------------------------------------------------------
    def _objective_vec(self):
        c = np.zeros(self.num_vars)
        c[: self.objective.size] = self.objective
        return c

    def _full(self, con: Constraint):
        if con.coef.shape[1] == self.num_vars:
            return con.coef
        out = np.zeros((con.coef.shape[0], self.num_vars))
        out[:, : con.coef.shape[1]] = con.coef
        return out

    def violations(self, x) -> list[tuple[str, str, float]]:
        """Per-constraint violation measures (scaled), largest first."""
        x = np.asarray(x, dtype=float)
        out = []
        for con in self.constraints:
            r = self._full(con) @ x + con.const
            scale = max(1.0, float(np.max(np.abs(con.const), initial=0.0)))
            if con.kind == "zero":
                v = float(np.max(np.abs(r), initial=0.0))
            elif con.kind == "nonneg":
                v = float(max(0.0, -np.min(r, initial=0.0)))
            elif con.kind == "soc":
                v = float(max(0.0, np.linalg.norm(r[1:]) - r[0]))
            else:
                m = r.reshape(con.dim, con.dim, order="F")
                v = float(max(0.0, -np.linalg.eigvalsh(0.5 * (m + m.T))[0]))
            out.append((con.kind, con.label, v / scale))
        return sorted(out, key=lambda t: -t[2])

    def check(self, x, tol: float = CHECK_TOL) -> bool:
        return all(v <= tol for _, _, v in self.violations(x))

    # --- solve --------------------------------------------------------------
    def solve(self, backend: str | None = None, tol: float = DEFAULT_TOL, verbose: bool = False) -> SolveOutcome:
        backend = (backend or os.environ.get("IRS_OUTAGE_SOLVER") or "clarabel").lower()
        t0 = time.perf_counter()
        if backend == "clarabel":
            out = _solve_clarabel(self, tol, verbose)
        elif backend == "cvxopt":
            out = _solve_cvxopt(self, tol, verbose)
        else:
            raise ValueError(f"unknown backend {backend!r}")
        out.solver_stats["seconds"] = time.perf_counter() - t0
        out.solver_stats["backend"] = backend
        if out.x is not None:
            obj = float(self._objective_vec() @ out.x + self.objective_const)
            out.objective_value = -obj if self.sense == "max" else obj
        return out

    # --- text dump ---------------------------------------------------------------
    def dump(self, path=None) -> str:
        lines = ["conic-program v1", f"vars {self.num_vars}", f"sense {self.sense}"]
        c = self._objective_vec()
        nz = np.flatnonzero(c)
        lines.append(f"objective {float(self.objective_const)!r} {nz.size}")
        lines += [f"{j} {float(c[j])!r}" for j in nz]
        for con in self.constraints:
            a = self._full(con)
            rows, cols = np.nonzero(a)
            lines.append(f"cone {con.kind} {con.dim} {a.shape[0]} {rows.size} {con.label or '-'}")
            lines += [f"{i} {j} {float(a[i, j])!r}" for i, j in zip(rows, cols)]
            lines.append("offset " + " ".join(repr(float(v)) for v in con.const))
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def load(cls, source) -> "ConicProgram":
        text = Path(source).read_text() if isinstance(source, Path) or "\n" not in str(source) else source
        it = iter(text.splitlines())
        if next(it).strip() != "conic-program v1":
            raise ValueError("not a conic-program dump")
        p = cls()
        p.num_vars = int(next(it).split()[1])
        p.sense = next(it).split()[1]
        _, const, nnz = next(it).split()
        p.objective = np.zeros(p.num_vars)
        p.objective_const = float(const)
        for _ in range(int(nnz)):
            j, v = next(it).split()
            p.objective[int(j)] = float(v)
        for line in it:
            if not line.strip():
                continue
            _, kind, dim, nrows, nnz, label = line.split(maxsplit=5)
            a = np.zeros((int(nrows), p.num_vars))
            for _ in range(int(nnz)):
                i, j, v = next(it).split()
                a[int(i), int(j)] = float(v)
            off = np.array([float(v) for v in next(it).split()[1:]])
            p.constraints.append(Constraint(kind, a, off, int(dim), "" if label == "-" else label))
        return p


def _sym_to_triangle(n: int):
    """Row indices (into column-major n^2) and scales for Clarabel's scaled upper triangle."""
    idx, scale = [], []
    for j in range(n):
        for i in range(j + 1):
            idx.append(j * n + i)
            scale.append(1.0 if i == j else np.sqrt(2.0))
    return np.array(idx), np.array(scale)


def _sym_rows(a: np.ndarray, b: np.ndarray, n: int):
    """Symmetrize the column-major matrix rows (average (i,j) and (j,i))."""
    perm = np.arange(n * n).reshape(n, n, order="F").T.reshape(-1, order="F")
    return 0.5 * (a + a[perm]), 0.5 * (b + b[perm])


def _solve_clarabel(p: ConicProgram, tol: float, verbose: bool) -> SolveOutcome:
    import clarabel

    blocks_a, blocks_b, cones = [], [], []
    order = {"zero": 0, "nonneg": 1, "soc": 2, "psd": 3}
    for con in sorted(p.constraints, key=lambda c: order[c.kind]):
        a, b = p._full(con), con.const
        if con.kind == "psd":
            a, b = _sym_rows(a, b, con.dim)
            idx, sc = _sym_to_triangle(con.dim)
            a, b = a[idx] * sc[:, None], b[idx] * sc
            cones.append(clarabel.PSDTriangleConeT(con.dim))
        elif con.kind == "zero":
            cones.append(clarabel.ZeroConeT(a.shape[0]))
        elif con.kind == "nonneg":
            cones.append(clarabel.NonnegativeConeT(a.shape[0]))
        else:
            cones.append(clarabel.SecondOrderConeT(a.shape[0]))
        blocks_a.append(-a)
        blocks_b.append(b)
    n = p.num_vars
    A = sp.csc_matrix(np.vstack(blocks_a)) if blocks_a else sp.csc_matrix((0, n))
    b = np.concatenate(blocks_b) if blocks_b else np.zeros(0)
    P = sp.csc_matrix((n, n))
    settings = clarabel.DefaultSettings()
    settings.verbose = verbose
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    settings.max_iter = 300
    solver = clarabel.DefaultSolver(P, p._objective_vec(), A, b, cones, settings)
    sol = solver.solve()
    name = str(sol.status)
    status = {
        "Solved": OPTIMAL,
        "AlmostSolved": INACCURATE,
        "PrimalInfeasible": INFEASIBLE,
        "AlmostPrimalInfeasible": INFEASIBLE,
        "DualInfeasible": UNBOUNDED,
        "AlmostDualInfeasible": UNBOUNDED,
    }.get(name, NUMERICAL_FAILURE)
    x = np.array(sol.x) if status in (OPTIMAL, INACCURATE, NUMERICAL_FAILURE) else None
    stats = {"iterations": sol.iterations, "raw_status": name,
             "r_prim": getattr(sol, "r_prim", np.nan), "r_dual": getattr(sol, "r_dual", np.nan)}
    return SolveOutcome(status, x, float("nan"), stats)


def _solve_cvxopt(p: ConicProgram, tol: float, verbose: bool) -> SolveOutcome:
    from cvxopt import matrix, solvers

    zero = [c for c in p.constraints if c.kind == "zero"]
    lin = [c for c in p.constraints if c.kind == "nonneg"]
    soc = [c for c in p.constraints if c.kind == "soc"]
    psd = [c for c in p.constraints if c.kind == "psd"]
    g_rows, h_rows = [], []
    for con in lin + soc:
        g_rows.append(-p._full(con))
        h_rows.append(con.const)
    for con in psd:
        a, b = _sym_rows(p._full(con), con.const, con.dim)
        g_rows.append(-a)
        h_rows.append(b)
    dims = {"l": sum(c.coef.shape[0] for c in lin), "q": [c.coef.shape[0] for c in soc],
            "s": [c.dim for c in psd]}
    n = p.num_vars
    G = matrix(np.vstack(g_rows) if g_rows else np.zeros((0, n)))
    h = matrix(np.concatenate(h_rows) if h_rows else np.zeros(0))
    kw = {}
    if zero:
        a_eq = np.vstack([-p._full(c) for c in zero])
        b_eq = np.concatenate([c.const for c in zero])
        # cvxopt needs full row rank equalities
        u, s, vt = np.linalg.svd(a_eq, full_matrices=False)
        keep = s > 1e-10 * max(s.max(initial=0.0), 1.0)
        kw = {"A": matrix(np.diag(s[keep]) @ vt[keep]), "b": matrix(u[:, keep].T @ b_eq)}
    opts = {"show_progress": verbose, "abstol": tol, "reltol": tol, "feastol": tol, "maxiters": 200}
    try:
        sol = solvers.conelp(matrix(p._objective_vec()), G, h, dims, options=opts, **kw)
    except (ValueError, ArithmeticError) as exc:
        return SolveOutcome(NUMERICAL_FAILURE, None, float("nan"), {"error": str(exc)})
    raw = sol["status"]
    status = {"optimal": OPTIMAL, "primal infeasible": INFEASIBLE, "dual infeasible": UNBOUNDED}.get(raw, INACCURATE)
    x = np.array(sol["x"]).ravel() if sol["x"] is not None and status in (OPTIMAL, INACCURATE) else None
    if raw == "unknown" and x is None:
        status = NUMERICAL_FAILURE
    stats = {"iterations": sol.get("iterations"), "raw_status": raw,
             "r_prim": sol.get("primal infeasibility"), "r_dual": sol.get("dual infeasibility")}
    return SolveOutcome(status, x, float("nan"), stats)
