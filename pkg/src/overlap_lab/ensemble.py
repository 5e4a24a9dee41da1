"""Monte Carlo sampling of the real elliptic ensemble and overlap extraction.

Each matrix is generated from its own Philox stream keyed by (seed, index),
so a matrix never depends on how many others were drawn before it or on
which worker drew it.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.linalg import LinAlgError

from .finite_n import EllipticParams

REAL_TOL = 1e-8
RESIDUAL_TOL = 1e-8
COND_MAX = 1e12
T_CLAMP = 1e-10
_MASK64 = (1 << 64) - 1


def _generator(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one matrix: Philox keyed by (seed, index)."""
    if index < 0:
        raise ValueError("sample index must be non-negative")
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, index & _MASK64]))


def sample_elliptic(params: EllipticParams, seed: int, index: int) -> np.ndarray:
    """X = sqrt(1+tau)(G+G^T)/2 + sqrt(1-tau)(G-G^T)/2 with G standard normal.

    Gives var(x_ii) = 1 + tau, var(x_ij) = 1 and E[x_ij x_ji] = tau for i != j.
    """
    n, tau = params.n, params.tau
    G = _generator(seed, index).standard_normal((n, n))
    sym = 0.5 * (G + G.T)
    anti = 0.5 * (G - G.T)
    return math.sqrt(1 + tau) * sym + math.sqrt(1 - tau) * anti


@dataclass(frozen=True)
class SpectralSample:
    index: int
    lambdas: np.ndarray
    t: np.ndarray
    residual: float
    condition: float
    accepted: bool
    row_sum_error: float = 0.0
    min_overlap: float = math.inf
    reason: str = ""

    @property
    def pairs(self) -> List[Tuple[float, float]]:
        return list(zip(self.lambdas.tolist(), self.t.tolist()))


def _rejected(index, reason, residual=math.inf, condition=math.inf):
    empty = np.empty(0)
    return SpectralSample(index, empty, empty, residual, condition, False, reason=reason)


def overlaps(X: np.ndarray, index: int = 0) -> SpectralSample:
    """Real eigenvalues of X and their shifted self-overlaps t = O_kk - 1.

    Left eigenvectors are the rows of V^{-1}, so <L_i|R_j> = delta_ij up to
    solver error.  Samples failing the residual or conditioning guard are
    returned with ``accepted=False``; no exception escapes.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("X must be square")
    if not np.all(np.isfinite(X)):
        return _rejected(index, "non-finite entries")
    norm = np.linalg.norm(X, 2)
    scale = norm if norm > 0 else 1.0
    try:
        lam, V = np.linalg.eig(X)
        cond = np.linalg.cond(V)
        if not np.isfinite(cond) or cond > COND_MAX:
            return _rejected(index, f"eigenvector condition {cond:.3g} exceeds {COND_MAX:g}",
                             condition=cond)
        L = np.linalg.inv(V)
    except LinAlgError as exc:
        return _rejected(index, f"eigensolver failure: {exc}")
    residual = np.linalg.norm(X @ V - V * lam, 2) / scale
    if not residual <= RESIDUAL_TOL:
        return _rejected(index, f"residual {residual:.3g} exceeds {RESIDUAL_TOL:g}",
                         residual=residual, condition=cond)
    real = np.abs(lam.imag) <= REAL_TOL * scale
    # O_kl = <L_k|L_l><R_l|R_k>; the diagonal gives the self-overlaps
    Lr = L[real]
    Vr = V[:, real]
    O_rows = (Lr @ L.conj().T) * (V.conj().T @ Vr).T
    o_kk = np.einsum("ij,ij->i", Lr.conj(), Lr).real * np.einsum("ij,ij->j", Vr.conj(), Vr).real
    row_err = float(np.max(np.abs(O_rows.sum(axis=1) - 1))) if o_kk.size else 0.0
    t = o_kk - 1
    if np.any(t < -T_CLAMP):
        return _rejected(index, f"overlap below 1 by {-t.min():.3g}", residual, cond)
    t = np.maximum(t, 0.0)
    order = np.argsort(lam.real[real], kind="stable")
    return SpectralSample(index, lam.real[real][order], t[order], float(residual), float(cond),
                          True, row_err, float(o_kk.min()) if o_kk.size else math.inf)


def overlaps_batch(Xs: np.ndarray, indices: Optional[Sequence[int]] = None) -> List[SpectralSample]:
    """:func:`overlaps` for a stack of matrices with one batched eigensolve.

    Agrees with :func:`overlaps` up to rounding in the last bit (the stacked
    eigensolver path rounds differently); results do not depend on how
    matrices are grouped into batches.  Matrices that fail in the batch are
    redone one at a time.
    """
    Xs = np.asarray(Xs, dtype=float)
    m, n, _ = Xs.shape
    indices = list(range(m)) if indices is None else list(indices)
    try:
        lam, V = np.linalg.eig(Xs)
        cond = np.linalg.cond(V)
        good = np.isfinite(cond) & (cond <= COND_MAX)
        L = np.full_like(V, np.nan)
        L[good] = np.linalg.inv(V[good])
    except LinAlgError:
        return [overlaps(X, i) for X, i in zip(Xs, indices)]
    scale = np.linalg.norm(Xs, 2, axis=(1, 2))
    scale = np.where(scale > 0, scale, 1.0)
    residual = np.linalg.norm(Xs @ V - V * lam[:, None, :], 2, axis=(1, 2)) / scale
    out = []
    for j in range(m):
        if not (good[j] and residual[j] <= RESIDUAL_TOL):
            out.append(overlaps(Xs[j], indices[j]))
            continue
        real = np.abs(lam[j].imag) <= REAL_TOL * scale[j]
        Lr, Vr = L[j][real], V[j][:, real]
        O_rows = (Lr @ L[j].conj().T) * (V[j].conj().T @ Vr).T
        o_kk = (np.einsum("ij,ij->i", Lr.conj(), Lr).real
                * np.einsum("ij,ij->j", Vr.conj(), Vr).real)
        t = o_kk - 1
        if np.any(t < -T_CLAMP):
            out.append(_rejected(indices[j], f"overlap below 1 by {-t.min():.3g}",
                                 float(residual[j]), float(cond[j])))
            continue
        row_err = float(np.max(np.abs(O_rows.sum(axis=1) - 1))) if o_kk.size else 0.0
        order = np.argsort(lam[j].real[real], kind="stable")
        out.append(SpectralSample(indices[j], lam[j].real[real][order], np.maximum(t, 0.0)[order],
                                  float(residual[j]), float(cond[j]), True, row_err,
                                  float(o_kk.min()) if o_kk.size else math.inf))
    return out


def thread_count() -> int:
    """Worker cap from OVERLAP_LAB_THREADS (positive integer), default 1."""
    raw = os.environ.get("OVERLAP_LAB_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"OVERLAP_LAB_THREADS must be a positive integer, got {raw!r}")
    if value < 1:
        raise ValueError(f"OVERLAP_LAB_THREADS must be a positive integer, got {raw!r}")
    return value


def sample_overlaps(params: EllipticParams, seed: int, count: int, start: int = 0,
                    threads: Optional[int] = None, batch: int = 256) -> List[SpectralSample]:
    """SpectralSamples for indices start..start+count-1, in index order."""
    threads = thread_count() if threads is None else threads

    def chunk(lo):
        idx = range(lo, min(lo + batch, start + count))
        return overlaps_batch(np.stack([sample_elliptic(params, seed, i) for i in idx]), idx)

    starts = range(start, start + count, batch)
    if threads <= 1:
        parts = [chunk(lo) for lo in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(chunk, starts))
    return [s for part in parts for s in part]


@dataclass(frozen=True)
class RunSummary:
    matrices: int
    rejected: int
    real_count: int
    max_row_sum_error: float
    min_overlap: float

    @property
    def rejection_rate(self) -> float:
        return self.rejected / self.matrices if self.matrices else 0.0


def summarize(samples: Sequence[SpectralSample]) -> RunSummary:
    acc = [s for s in samples if s.accepted]
    return RunSummary(
        matrices=len(samples),
        rejected=len(samples) - len(acc),
        real_count=sum(s.lambdas.size for s in acc),
        max_row_sum_error=max((s.row_sum_error for s in acc), default=0.0),
        min_overlap=min((s.min_overlap for s in acc), default=math.inf),
    )


def edge_rescale(sample: SpectralSample, params: EllipticParams) -> List[Tuple[float, float]]:
    """(zeta, t) pairs with zeta = (lambda - sqrt(N)(1+tau)) N^{1/6}."""
    if not sample.accepted:
        raise ValueError("cannot rescale a rejected sample")
    zeta = to_zeta(sample.lambdas, params)
    return list(zip(zeta.tolist(), sample.t.tolist()))


def to_zeta(lam, params: EllipticParams):
    return (np.asarray(lam, dtype=float) - params.edge) * params.n ** (1 / 6)


def from_zeta(zeta, params: EllipticParams):
    return params.edge + np.asarray(zeta, dtype=float) * params.n ** (-1 / 6)


def sample_moments(params: EllipticParams, seed: int, count: int):
    """Off-diagonal correlation, off-diagonal and diagonal variances with standard errors."""
    n = params.n
    iu = np.triu_indices(n, 1)
    cross, off, diag = [], [], []
    for i in range(count):
        X = sample_elliptic(params, seed, i)
        cross.append(X[iu] * X.T[iu])
        off.append(np.concatenate([X[iu], X.T[iu]]) ** 2)
        diag.append(np.diag(X) ** 2)
    out = {}
    for name, data in (("cross", cross), ("offdiag_var", off), ("diag_var", diag)):
        # per-matrix means are independent; entries within a matrix are not pooled for the error
        per = np.array([d.mean() for d in data])
        out[name] = (float(per.mean()), float(per.std(ddof=1) / math.sqrt(count)))
    return out


@dataclass
class Histogram2D:
    x_edges: np.ndarray
    t_edges: np.ndarray
    counts: np.ndarray = None
    matrices: int = 0
    out_of_range: int = 0

    def __post_init__(self):
        self.x_edges = np.asarray(self.x_edges, dtype=float)
        self.t_edges = np.asarray(self.t_edges, dtype=float)
        for e in (self.x_edges, self.t_edges):
            if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
                raise ValueError("bin edges must be strictly increasing with at least two entries")
        if self.counts is None:
            self.counts = np.zeros((self.x_edges.size - 1, self.t_edges.size - 1), dtype=np.int64)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merge(self, other: Histogram2D) -> Histogram2D:
        if not (np.array_equal(self.x_edges, other.x_edges)
                and np.array_equal(self.t_edges, other.t_edges)):
            raise ValueError("histograms have different bins")
        return Histogram2D(self.x_edges, self.t_edges, self.counts + other.counts,
                           self.matrices + other.matrices, self.out_of_range + other.out_of_range)


def accumulate(hist: Histogram2D, pairs, matrices: int = 0) -> Histogram2D:
    """Add (x, t) pairs; ``matrices`` is the number of matrices they came from."""
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    counts, _, _ = np.histogram2d(arr[:, 0], arr[:, 1], bins=[hist.x_edges, hist.t_edges])
    inside = int(counts.sum())
    return Histogram2D(hist.x_edges, hist.t_edges, hist.counts + counts.astype(np.int64),
                       hist.matrices + matrices, hist.out_of_range + arr.shape[0] - inside)


@dataclass(frozen=True)
class Comparison:
    observed: np.ndarray
    expected: np.ndarray
    residuals: np.ndarray
    chi2: float
    dof: int
    p_value: float
    max_abs_residual: float
    min_expected: float = 10.0
    mask: np.ndarray = field(default=None, repr=False)

    def passed(self, threshold: float = 4.0) -> bool:
        return bool(self.max_abs_residual <= threshold)


def bin_integrals(density: Callable, x_edges, t_edges, order: int = 8,
                  rel_tol: float = 1e-6, abs_tol: float = 1e-12, max_depth: int = 10) -> np.ndarray:
    """Integral of density(x, t) over every bin by adaptive tensor Gauss-Legendre.

    Each cell is split 2 x 2 until the split estimate agrees with the parent
    within max(rel_tol |I|, abs_tol). For t >= 0 the t-rule runs in
    s = sqrt(t): the N = 2 density carries an integrable t^{-1/2} singularity
    at t = 0.
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    x_edges = np.asarray(x_edges, dtype=float)
    t_edges = np.asarray(t_edges, dtype=float)
    root = t_edges[0] >= 0
    u_edges = np.sqrt(t_edges) if root else t_edges
    nx, nt = x_edges.size - 1, t_edges.size - 1

    def rule(x0, x1, u0, u1):
        hx, hu = 0.5 * (x1 - x0), 0.5 * (u1 - u0)
        xs = x0[:, None] + hx[:, None] * (nodes + 1)
        us = u0[:, None] + hu[:, None] * (nodes + 1)
        wx = hx[:, None] * weights
        wu = hu[:, None] * weights
        if root:
            wu = 2 * us * wu
            us = us * us
        k = x0.size
        X = np.broadcast_to(xs[:, :, None], (k, order, order))
        T = np.broadcast_to(us[:, None, :], (k, order, order))
        vals = np.asarray(density(X, T), dtype=float)
        return np.einsum("ka,kb,kab->k", wx, wu, vals)

    def split(x0, x1, u0, u1):
        xm, um = 0.5 * (x0 + x1), 0.5 * (u0 + u1)
        return (np.concatenate([x0, x0, xm, xm]), np.concatenate([xm, xm, x1, x1]),
                np.concatenate([u0, um, u0, um]), np.concatenate([um, u1, um, u1]))

    I, J = np.meshgrid(np.arange(nx), np.arange(nt), indexing="ij")
    owner = (I * nt + J).ravel()
    cells = (x_edges[I].ravel(), x_edges[I + 1].ravel(), u_edges[J].ravel(), u_edges[J + 1].ravel())
    est = rule(*cells)
    out = np.zeros(nx * nt)
    for depth in range(max_depth + 1):
        children = split(*cells)
        parts = rule(*children)
        fine = parts.reshape(4, -1).sum(axis=0)
        done = np.abs(fine - est) <= np.maximum(rel_tol * np.abs(fine), abs_tol)
        if depth == max_depth:
            done[:] = True
        np.add.at(out, owner[done], fine[done])
        if done.all():
            break
        keep = np.tile(~done, 4)
        cells = tuple(c[keep] for c in children)
        owner = np.tile(owner, 4)[keep]
        est = parts[keep]
    return out.reshape(nx, nt)


def compare(hist: Histogram2D, theory: Callable, min_expected: float = 10.0,
            order: int = 8) -> Comparison:
    """Pearson comparison of a histogram with a density (per matrix) of (x, t).

    Expected counts are bin integrals times the number of matrices.  Only bins
    with expectation >= min_expected enter chi^2 and the residual summary.
    """
    if hist.total == 0 or hist.matrices == 0:
        raise ValueError("empty histogram")
    expected = bin_integrals(theory, hist.x_edges, hist.t_edges, order) * hist.matrices
    observed = hist.counts.astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        resid = np.where(expected > 0, (observed - expected) / np.sqrt(expected), np.nan)
    mask = expected >= min_expected
    used = int(mask.sum())
    if used == 0:
        raise ValueError("no bin reaches the minimum expected count")
    chi2 = float(np.sum(resid[mask] ** 2))
    p = float(stats.chi2.sf(chi2, used))
    return Comparison(observed, expected, resid, chi2, used, p,
                      float(np.max(np.abs(resid[mask]))), min_expected, mask)
