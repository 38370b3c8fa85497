"""Hierarchically off-diagonal low-rank (HODLR) compression and direct solve.

The index range is bisected recursively. At every non-leaf node the two
off-diagonal blocks are stored as ``U V^T`` products found by adaptive cross
approximation (partial pivoting) followed by SVD recompression; leaves are
dense. Factorization writes each node as ``A = D (I + W V^T)`` with ``D`` the
block diagonal of the children, ``W = D^{-1} U`` and a small coupling
matrix ``K = I + V^T W``; solves recurse through the tree.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla


class HodlrError(RuntimeError):
    """Factorization state or numerical failure."""


def _recompress(u: np.ndarray, v: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Truncate ``u @ v.T`` to relative accuracy ``eps`` in the spectral norm."""
    if u.shape[1] == 0:
        return u, v
    qu, ru = np.linalg.qr(u)
    qv, rv = np.linalg.qr(v)
    w, s, zh = np.linalg.svd(ru @ rv.T)
    if s[0] == 0:
        return u[:, :0], v[:, :0]
    r = int(np.count_nonzero(s > eps * s[0]))
    return qu @ (w[:, :r] * s[:r]), qv @ zh[:r].T


def aca(entries, rows: np.ndarray, cols: np.ndarray, eps: float, rng: np.random.Generator,
        max_rank: int | None = None) -> tuple[np.ndarray, np.ndarray, bool]:
    """Low-rank approximation ``A[rows][:, cols] ~ U V^T`` by partial-pivot ACA.

    Returns ``(U, V, full)``; ``full`` is set when the rank reached the block
    size and the block was stored exactly instead.
    """
    m, n = rows.size, cols.size
    cap = min(m, n) if max_rank is None else min(m, n, max_rank)
    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    norm2 = 0.0
    used_rows = np.zeros(m, dtype=bool)
    # seed pivots: first and last rows (periodic neighbours sit in the corners)
    pending = [0, m - 1]
    i = pending.pop(0)

    def residual_row(ii):
        row = entries(rows[ii:ii + 1], cols)[0]
        for uu, vv in zip(us, vs):
            row -= uu[ii] * vv
        return row

    def residual_col(jj):
        col = entries(rows, cols[jj:jj + 1])[:, 0]
        for uu, vv in zip(us, vs):
            col -= vv[jj] * uu
        return col

    while len(us) < cap:
        used_rows[i] = True
        row = residual_row(i)
        j = int(np.argmax(np.abs(row)))
        piv = row[j]
        if piv == 0:
            # zero residual row: verify elsewhere before concluding
            cand = [p for p in pending if not used_rows[p]]
            unused = np.flatnonzero(~used_rows)
            if not cand and unused.size == 0:
                break
            if not cand:
                cand = list(rng.choice(unused, size=min(4, unused.size), replace=False))
            found = False
            for c in cand:
                used_rows[c] = True
                r2 = residual_row(c)
                if np.abs(r2).max() > 0:
                    i, row, found = c, r2, True
                    break
            if not found:
                if _converged_on_samples(residual_row, residual_col, m, n, us, vs, norm2, eps, rng):
                    break
                continue
            j = int(np.argmax(np.abs(row)))
            piv = row[j]
        v = row / piv
        u = residual_col(j)
        # running Frobenius norm estimate of the approximation
        uu = float(np.vdot(u, u).real)
        vv = float(np.vdot(v, v).real)
        cross = 0.0
        for up, vp in zip(us, vs):
            cross += 2.0 * (np.vdot(up, u) * np.vdot(vp, v)).real
        norm2 = max(norm2 + uu * vv + cross, uu * vv)
        us.append(u)
        vs.append(v)
        if uu * vv <= (eps ** 2) * norm2:
            if _converged_on_samples(residual_row, residual_col, m, n, us, vs, norm2, eps, rng):
                break
        nxt = np.abs(u)
        nxt[used_rows] = -1.0
        while pending and used_rows[pending[0]]:
            pending.pop(0)
        i = pending.pop(0) if pending else int(np.argmax(nxt))
        if used_rows[i]:
            unused = np.flatnonzero(~used_rows)
            if unused.size == 0:
                break
            i = int(unused[0])
    if len(us) >= min(m, n) and min(m, n) > 0:
        return entries(rows, cols), None, True
    if not us:
        return np.zeros((m, 0), complex), np.zeros((n, 0), complex), False
    return np.stack(us, axis=1), np.stack(vs, axis=1), False


def _converged_on_samples(residual_row, residual_col, m, n, us, vs, norm2, eps, rng) -> bool:
    """Check the current approximation on edge rows/columns and random samples."""
    tol = 10.0 * eps * np.sqrt(max(norm2, 0.0) / (m * n)) if norm2 > 0 else 0.0
    probe_rows = {0, m - 1, *rng.integers(0, m, size=min(4, m)).tolist()}
    probe_cols = {0, n - 1, *rng.integers(0, n, size=min(4, n)).tolist()}
    for ii in probe_rows:
        if np.abs(residual_row(ii)).max() > tol:
            return False
    for jj in probe_cols:
        if np.abs(residual_col(jj)).max() > tol:
            return False
    return True


@dataclass(eq=False)
class _Node:
    lo: int
    hi: int
    children: tuple["_Node", "_Node"] | None = None
    dense: np.ndarray | None = None
    lu: tuple | None = None
    # off-diagonal factors: A12 = u12 v12^T (rows of child 1, cols of child 2)
    u12: np.ndarray | None = None
    v12: np.ndarray | None = None
    u21: np.ndarray | None = None
    v21: np.ndarray | None = None
    w1: np.ndarray | None = None
    w2: np.ndarray | None = None
    k_lu: tuple | None = None

    @property
    def size(self) -> int:
        return self.hi - self.lo


@dataclass(eq=False)
class HodlrMatrix:
    """HODLR representation of an ``N x N`` matrix.

    Build with :func:`compress`, then call :meth:`factorize` before
    :meth:`solve` or :meth:`solve_transpose`.
    """

    n: int
    leaf_size: int
    eps: float
    root: _Node
    full_rank_blocks: int = 0
    factorized: bool = False
    ranks: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def _nodes(self):
        stack = [(self.root, 0)]
        while stack:
            node, lev = stack.pop()
            yield node, lev
            if node.children:
                stack.extend((c, lev + 1) for c in node.children)

    def rank_stats(self) -> dict:
        """Maximum off-diagonal rank per tree level."""
        out: dict[int, int] = {}
        for node, lev in self._nodes():
            if node.children:
                r = max(node.u12.shape[1], node.u21.shape[1])
                out[lev] = max(out.get(lev, 0), r)
        return out

    def memory(self) -> int:
        """Number of stored complex entries."""
        total = 0
        for node, _ in self._nodes():
            if node.children:
                total += node.u12.size + node.v12.size + node.u21.size + node.v21.size
            else:
                total += node.dense.size
        return total

    # -- products ------------------------------------------------------------
    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        vec = x.ndim == 1
        x2 = x.reshape(self.n, -1).astype(complex)
        y = self._matvec(self.root, x2)
        return y[:, 0] if vec else y

    def _matvec(self, node: _Node, x: np.ndarray) -> np.ndarray:
        if node.children is None:
            return node.dense @ x
        c1, c2 = node.children
        n1 = c1.size
        x1, x2 = x[:n1], x[n1:]
        y1 = self._matvec(c1, x1) + node.u12 @ (node.v12.T @ x2)
        y2 = self._matvec(c2, x2) + node.u21 @ (node.v21.T @ x1)
        return np.concatenate([y1, y2])

    # -- factorization ---------------------------------------------------------
    def factorize(self) -> "HodlrMatrix":
        self._factor(self.root)
        self.factorized = True
        return self

    def _factor(self, node: _Node) -> None:
        if node.children is None:
            lu, piv = sla.lu_factor(node.dense, check_finite=False)
            if np.any(np.diag(lu) == 0):
                raise HodlrError(f"singular leaf block [{node.lo}, {node.hi})")
            node.lu = (lu, piv)
            return
        c1, c2 = node.children
        self._factor(c1)
        self._factor(c2)
        node.w1 = self._solve(c1, node.u12)
        node.w2 = self._solve(c2, node.u21)
        r1, r2 = node.u12.shape[1], node.u21.shape[1]
        kmat = np.eye(r1 + r2, dtype=complex)
        kmat[:r1, r1:] = node.v12.T @ node.w2
        kmat[r1:, :r1] = node.v21.T @ node.w1
        if r1 + r2:
            node.k_lu = sla.lu_factor(kmat, check_finite=False)

    def _solve(self, node: _Node, b: np.ndarray) -> np.ndarray:
        if node.children is None:
            return sla.lu_solve(node.lu, b, check_finite=False)
        c1, c2 = node.children
        n1 = c1.size
        y1 = self._solve(c1, b[:n1])
        y2 = self._solve(c2, b[n1:])
        if node.k_lu is None:
            return np.concatenate([y1, y2])
        r1 = node.u12.shape[1]
        z = sla.lu_solve(node.k_lu, np.concatenate([node.v12.T @ y2, node.v21.T @ y1]),
                         check_finite=False)
        return np.concatenate([y1 - node.w1 @ z[:r1], y2 - node.w2 @ z[r1:]])

    def _solve_t(self, node: _Node, b: np.ndarray) -> np.ndarray:
        if node.children is None:
            return sla.lu_solve(node.lu, b, trans=1, check_finite=False)
        c1, c2 = node.children
        n1 = c1.size
        b1, b2 = b[:n1], b[n1:]
        if node.k_lu is not None:
            r1 = node.u12.shape[1]
            z = sla.lu_solve(node.k_lu, np.concatenate([node.w1.T @ b1, node.w2.T @ b2]),
                             trans=1, check_finite=False)
            b1 = b1 - node.v21 @ z[r1:]
            b2 = b2 - node.v12 @ z[:r1]
        return np.concatenate([self._solve_t(c1, b1), self._solve_t(c2, b2)])

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve ``A x = b`` for one right-hand side or a batch ``(N, m)``."""
        return self._apply(self._solve, b)

    def solve_transpose(self, b: np.ndarray) -> np.ndarray:
        """Solve ``A^T x = b`` (plain transpose, no conjugation)."""
        return self._apply(self._solve_t, b)

    def _apply(self, fn, b):
        if not self.factorized:
            raise HodlrError("factorize() must be called before solving")
        b = np.asarray(b)
        if b.shape[0] != self.n:
            raise ValueError(f"right-hand side has {b.shape[0]} rows, expected {self.n}")
        vec = b.ndim == 1
        x = fn(self.root, b.reshape(self.n, -1).astype(complex))
        return x[:, 0] if vec else x


def compress(entries, n: int, leaf_size: int = 128, eps: float = 1e-10,
             seed: int = 0) -> HodlrMatrix:
    """Build a HODLR approximation from an entry callback.

    Parameters
    ----------
    entries : callable
        ``entries(rows, cols)`` returns the dense sub-block ``A[rows][:, cols]``
        for integer index arrays; it must be pure.
    n : int
        Matrix size.
    leaf_size : int
        Largest diagonal block stored densely.
    eps : float
        Relative compression tolerance, in ``[1e-14, 1e-4]``.
    """
    if not 1e-14 <= eps <= 1e-4:
        raise ValueError("eps must lie in [1e-14, 1e-4]")
    if leaf_size < 1:
        raise ValueError("leaf_size must be positive")
    rng = np.random.default_rng(seed)
    full = [0]

    def build(lo: int, hi: int) -> _Node:
        node = _Node(lo, hi)
        if hi - lo <= leaf_size:
            idx = np.arange(lo, hi)
            node.dense = np.asarray(entries(idx, idx), dtype=complex)
            return node
        mid = (lo + hi) // 2
        node.children = (build(lo, mid), build(mid, hi))
        r1, r2 = np.arange(lo, mid), np.arange(mid, hi)
        node.u12, node.v12 = _lowrank(entries, r1, r2, eps, rng, full)
        node.u21, node.v21 = _lowrank(entries, r2, r1, eps, rng, full)
        return node

    root = build(0, n)
    h = HodlrMatrix(n, leaf_size, eps, root, full[0])
    if full[0]:
        warnings.warn(f"{full[0]} off-diagonal block(s) were full rank; stored exactly",
                      RuntimeWarning, stacklevel=2)
    return h


def _lowrank(entries, rows, cols, eps, rng, full_counter):
    u, v, full = aca(entries, rows, cols, eps, rng)
    if full:
        full_counter[0] += 1
        # exact storage as U = block, V = identity
        return np.asarray(u, dtype=complex), np.eye(cols.size, dtype=complex)
    return _recompress(u, v, eps)


def from_dense(a: np.ndarray, leaf_size: int = 128, eps: float = 1e-10) -> HodlrMatrix:
    """Convenience wrapper compressing an explicit matrix."""
    a = np.asarray(a)
    return compress(lambda r, c: a[np.ix_(r, c)], a.shape[0], leaf_size, eps)
