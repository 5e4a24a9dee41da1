"""Exact finite-N joint density of a real eigenvalue and its overlap.

Hermite layer: p_k(z) = tau^{k/2} He_k(z / sqrt(tau)), monic, obeying
p_{k+1} = z p_k - k tau p_{k-1}.  It is carried in normalised form
h_k = p_k / sqrt(k!) with a running exponent, so N in the thousands at the
spectral edge stays finite.  All sums and the density itself are assembled
in sign/log form and exponentiated once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .logvalue import LogValue, signed_logsumexp, to_float_array
from .quad import DEFAULT_CONFIG, Arc, ComplexPath, QuadratureConfig, integrate, integrate_complex

_RESCALE = 1e100
_LOG_RESCALE = math.log(_RESCALE)


@dataclass(frozen=True)
class EllipticParams:
    n: int
    tau: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"matrix size must be an integer >= 2, got {self.n}")
        if not 0 <= self.tau < 1:
            raise ValueError(f"tau must lie in [0, 1), got {self.tau}")

    @property
    def edge(self) -> float:
        return math.sqrt(self.n) * (1 + self.tau)

    @property
    def b(self) -> float:
        """Non-normality parameter of the edge scaling, (1 - tau) N^{1/3} = b^2."""
        return math.sqrt((1 - self.tau) * self.n ** (1 / 3))

    @classmethod
    def from_edge_scaling(cls, n: int, b: float) -> EllipticParams:
        return cls(n, 1 - b * b * n ** (-1 / 3))


@dataclass(frozen=True)
class ContourSpec:
    delta: float
    epsilon: float

    def __post_init__(self):
        if not self.delta > self.epsilon > 0:
            raise ValueError("need delta > epsilon > 0")

    @classmethod
    def default(cls, n: int, tau: float) -> ContourSpec:
        delta = 2 * max(1.0, 0.1 * math.sqrt(n) * math.sqrt(tau))
        return cls(delta, delta / 2)

    @classmethod
    def adapted(cls, n: int, tau: float, z: float) -> ContourSpec:
        """Contours through the real saddle points when these exist.

        s^n exp((s-z)^2/(2 tau)) has saddles s = (z +- sqrt(z^2 - 4 n tau))/2 and
        w^-n exp(-tau w^2/2 + w z) has w = (z +- sqrt(z^2 - 4 n tau))/(2 tau); the
        vertical line through the larger s-saddle and the circle through the
        smaller w-saddle avoid the cancellation that the fixed default suffers
        for z well beyond 2 sqrt(n tau).  Falls back to :meth:`default`.
        """
        base = cls.default(n, tau)
        disc = z * z - 4 * n * tau
        if z <= 0 or disc <= 0:
            return base
        root = math.sqrt(disc)
        delta = 0.5 * (z + root)
        eps = min(0.5 * (z - root) / tau, 0.75 * delta)
        if delta <= base.delta or eps <= 0:
            return base
        return cls(delta, eps)


@dataclass(frozen=True)
class HermiteSeq:
    """h_k(z) = mant[k] * exp(expo[k]) for k = 0..K-1, vectorised over z."""

    z: np.ndarray
    tau: float
    mant: np.ndarray
    expo: np.ndarray

    def log_abs(self):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.mant)) + self.expo

    def sign(self):
        return np.sign(self.mant)

    def p(self, k: int, i: int = 0) -> LogValue:
        """p_k at the i-th z point, rebuilt as h_k sqrt(k!)."""
        m = float(self.mant[k, i])
        if m == 0:
            return LogValue(0, -math.inf)
        return LogValue(1 if m > 0 else -1,
                        math.log(abs(m)) + float(self.expo[k, i]) + 0.5 * math.lgamma(k + 1))


def hermite_seq(z, params, kmax: Optional[int] = None) -> HermiteSeq:
    """Normalised monic Hermite values h_0..h_{kmax}.

    ``params`` is an :class:`EllipticParams` (default kmax = N + 1) or a bare
    tau >= 0, in which case ``kmax`` is required; tau = 1 gives He_k.
    """
    if isinstance(params, EllipticParams):
        tau = params.tau
        kmax = params.n + 1 if kmax is None else kmax
    else:
        tau = float(params)
        if not tau >= 0 or kmax is None:
            raise ValueError("a bare tau must be >= 0 and needs kmax")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    mant = np.empty((kmax + 1, z.size))
    expo = np.empty((kmax + 1, z.size))
    prev = np.zeros_like(z)          # h_{-1}
    cur = np.ones_like(z)            # h_0
    E = np.zeros_like(z)
    mant[0], expo[0] = cur, E
    for k in range(kmax):
        # h_{k+1} = (z h_k - tau sqrt(k) h_{k-1}) / sqrt(k+1)
        nxt = (z * cur - tau * math.sqrt(k) * prev) / math.sqrt(k + 1)
        big = np.maximum(np.abs(cur), np.abs(nxt))
        up = big > _RESCALE
        down = (big < 1 / _RESCALE) & (big > 0)
        if np.any(up | down):
            f = np.where(up, 1 / _RESCALE, np.where(down, _RESCALE, 1.0))
            cur = cur * f
            nxt = nxt * f
            E = E + np.where(up, _LOG_RESCALE, np.where(down, -_LOG_RESCALE, 0.0))
        prev, cur = cur, nxt
        mant[k + 1], expo[k + 1] = cur, E
    return HermiteSeq(z, tau, mant, expo)


def _pair(sa, la, sb, lb):
    """sign/log of (sa e^la) - (sb e^lb)."""
    return signed_logsumexp(np.stack([sa, -sb]), np.stack([la, lb]), axis=0)


def _term_arrays(seq: HermiteSeq, n_terms: int):
    """Per-k summands (sign, log) of the P and R sums for k = 0..n_terms-1."""
    s = seq.sign()
    l = seq.log_abs()
    k = np.arange(n_terms)[:, None].astype(float)
    neg = np.full((1, s.shape[1]), -np.inf)
    zero = np.zeros((1, s.shape[1]))
    l_m1 = np.concatenate([neg, l[: n_terms - 1]])      # log h_{k-1}
    s_m1 = np.concatenate([zero, s[: n_terms - 1]])
    with np.errstate(divide="ignore"):
        # (k+1) h_k^2 - sqrt(k(k+1)) h_{k+1} h_{k-1}
        pa_l = np.log(k + 1) + 2 * l[:n_terms]
        pa_s = s[:n_terms] ** 2
        pb_l = 0.5 * np.log(k * (k + 1)) + l[1:n_terms + 1] + l_m1
        pb_s = s[1:n_terms + 1] * s_m1
        # (k+2) sqrt(k+1) h_{k+1} h_k - sqrt(k(k+1)(k+2)) h_{k+2} h_{k-1}
        ra_l = np.log(k + 2) + 0.5 * np.log(k + 1) + l[1:n_terms + 1] + l[:n_terms]
        ra_s = s[1:n_terms + 1] * s[:n_terms]
        rb_l = 0.5 * np.log(k * (k + 1) * (k + 2)) + l[2:n_terms + 2] + l_m1
        rb_s = s[2:n_terms + 2] * s_m1
    return _pair(pa_s, pa_l, pb_s, pb_l), _pair(ra_s, ra_l, rb_s, rb_l)


def _sums_from_terms(P_terms, R_terms, order):
    """(P, R, S) sign/log arrays at a given order from precomputed summands."""
    nz = P_terms[0].shape[1]
    if order == 0:
        zero = (np.zeros(nz), np.full(nz, -np.inf))
        return zero, zero, zero
    ps, pl = P_terms[0][:order], P_terms[1][:order]
    rs, rl = R_terms[0][:order], R_terms[1][:order]
    weights = np.log(order - np.arange(order, dtype=float))[:, None]
    P = signed_logsumexp(ps, pl, axis=0)
    R = signed_logsumexp(rs, rl, axis=0)
    S = signed_logsumexp(ps, pl + weights, axis=0)
    return P, R, S


def tilde_sums_log(z, tau: float, orders):
    """sign/log arrays of (P~, R~, S~) for each requested order, vectorised in z."""
    orders = list(orders)
    top = max(orders)
    seq = hermite_seq(z, tau, kmax=max(top, 1) + 1)
    P_terms, R_terms = _term_arrays(seq, max(top, 1))
    return {m: _sums_from_terms(P_terms, R_terms, m) for m in orders}


def _lv(pair, i=0):
    s, l = pair
    s = int(np.atleast_1d(s)[i])
    return LogValue(s, float(np.atleast_1d(l)[i]) if s else -math.inf)


def tilde_sums(z: float, params: EllipticParams):
    """(P~_N, R~_N, S~_N) at order N = params.n as LogValues."""
    P, R, S = tilde_sums_log(z, params.tau, [params.n])[params.n]
    return _lv(P), _lv(R), _lv(S)


def tilde_sums_order(z: float, tau: float, order: int):
    """(P~, R~, S~) at an arbitrary order >= 0 (order 0 gives exact zeros)."""
    if order < 0:
        raise ValueError("order must be non-negative")
    P, R, S = tilde_sums_log(z, tau, [order])[order]
    return _lv(P), _lv(R), _lv(S)


def tilde_sums_contour(z: float, params: EllipticParams, spec: Optional[ContourSpec] = None,
                       cfg: Optional[QuadratureConfig] = None, order: Optional[int] = None):
    """(P~_N, R~_N, S~_N) from their double contour-integral representations.

    s runs over the vertical line delta + i y, w over the circle of radius
    epsilon; independent of the Hermite recurrence.  ``order`` overrides
    N = params.n (order 1 is admitted here).
    """
    n = params.n if order is None else int(order)
    tau = params.tau
    if n < 1:
        raise ValueError("contour order must be >= 1")
    if n > 20:
        raise ValueError("contour oracle is only intended for N <= 20")
    if tau <= 0:
        raise ValueError("the contour representation needs tau > 0")
    spec = spec or ContourSpec.adapted(n, tau, z)
    cfg = cfg or DEFAULT_CONFIG
    delta, eps = spec.delta, spec.epsilon
    circle = ComplexPath([Arc(0.0, eps, 0.0, 2 * math.pi)])

    def inner(y):
        s = (delta + 1j * y)[None, :]

        def g(w):
            w = w[:, None]
            ratio = s / w
            common = (ratio ** n * np.exp((s - z) ** 2 / (2 * tau) - tau * w * w / 2 + w * z)
                      * s / (s - w))
            lin = (z - s) / tau - w
            P = common * lin
            R = common * ratio * ((z - s) ** 2 / tau**2 + 1 / tau - w * w)
            S = common * s / (s - w) * lin
            return np.concatenate([P, R, S], axis=1)

        vals = integrate_complex(g, circle, cfg)
        m = y.size
        # ds = i dy
        return 1j * np.stack([vals[:m], vals[m:2 * m], vals[2 * m:]], axis=1)

    # |integrand| <~ exp(((delta - z)^2 - y^2) / (2 tau)) |s|^{n+3}; cut relative to y = 0
    Y = 1.0
    while -Y * Y / (2 * tau) + (n + 3) * math.log1p(Y / delta) > math.log(cfg.truncation_threshold):
        Y *= 1.25
    total = integrate(inner, -Y, Y, cfg, [0.0])
    pref = -tau ** -0.5 / (2 * math.pi) ** 1.5
    return tuple(float((pref * v).real) for v in total)


def _q_kernel_log(z, q, params: EllipticParams, sums=None):
    """sign/log of Q_N on broadcast (z, q); z must be 1-D matching sums."""
    n, tau = params.n, params.tau
    if sums is None:
        sums = tilde_sums_log(z, tau, [n - 1, n - 2])
    P1, R1, _ = sums[n - 1]
    P2, R2, S2 = sums[n - 2]
    z = np.asarray(z, dtype=float)
    q = np.asarray(q, dtype=float)
    a = 1 + q
    c = 1 + tau + q
    # (coefficient, sum) pairs; coefficients are plain floats
    parts = [
        ((1 + tau - 2 * z * z) / a, P1),
        (z / a, R1),
        (tau * z / a, R2),
        (z * z / a**2, P1),
        (tau**2 * (1 + tau) ** 2 * n / c**2, P2),
        ((1 + tau) * (1 - tau * tau) / c, S2),
        (-tau * (1 + tau) * z / (a * c), R2),
    ]
    signs, logs = [], []
    for coef, (ss, ls) in parts:
        coef = np.broadcast_to(coef, np.broadcast(z, q).shape)
        with np.errstate(divide="ignore"):
            logs.append(np.log(np.abs(coef)) + ls)
        signs.append(np.sign(coef) * ss)
    return signed_logsumexp(np.stack(signs), np.stack(logs), axis=0)


def q_kernel(z: float, q: float, params: EllipticParams) -> LogValue:
    """Q_N(z, q, tau) as a LogValue."""
    if not q > 0:
        raise ValueError("q must be positive")
    s, l = _q_kernel_log(np.atleast_1d(float(z)), np.atleast_1d(float(q)), params)
    return _lv((s, l))


def jpdf_finite_log(z, q, params: EllipticParams):
    """sign/log of P_N^tau(z, q) on broadcast arrays."""
    n, tau = params.n, params.tau
    z, q = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(q, dtype=float))
    if np.any(q <= 0):
        raise ValueError("q must be positive")
    shape = z.shape
    zf, qf = z.ravel(), q.ravel()
    uz, inv = np.unique(zf, return_inverse=True)
    sums = tilde_sums_log(uz, tau, [n - 1, n - 2])
    picked = {m: tuple((s[inv], l[inv]) for s, l in v) for m, v in sums.items()}
    qs, ql = _q_kernel_log(zf, qf, params, picked)
    lead = (-math.log(2 * (1 + tau) * math.sqrt(2 * math.pi))
            - zf * zf / (2 * (1 + tau)) * (1 + qf / (1 + qf))
            - 0.5 * np.log(qf * (qf + 1))
            + (n / 2 - 1) * np.log(qf / (qf + 1 + tau)))
    return qs.reshape(shape), (ql + lead).reshape(shape)


def jpdf_finite(z, q, params: EllipticParams):
    """P_N^tau(z, q): density of a real eigenvalue z and q = (1 - tau)(O_kk - 1)."""
    s, l = jpdf_finite_log(z, q, params)
    if np.any(s < 0):
        raise ArithmeticError("negative density: loss of precision in Q_N")
    out = to_float_array(s, l)
    return float(out) if out.ndim == 0 else out


def jpdf_finite_t(z, t, params: EllipticParams):
    """P_N(z, t) for the unscaled shifted overlap t = O_kk - 1."""
    t = np.asarray(t, dtype=float)
    scale = 1 - params.tau
    return jpdf_finite(z, t / scale, params) / scale


def edge_probe(zeta, t, n: int, b: float):
    """N^{-1/6} P_N(z_N, t) at z_N = sqrt(N)(1 + tau_N) + zeta N^{-1/6}, tau_N = 1 - b^2 N^{-1/3}."""
    params = EllipticParams.from_edge_scaling(n, b)
    z = params.edge + np.asarray(zeta, dtype=float) * n ** (-1 / 6)
    return n ** (-1 / 6) * jpdf_finite_t(z, t, params)


def expected_real_count(params: EllipticParams, cfg: Optional[QuadratureConfig] = None) -> float:
    """int int P_N^tau(z, q) dz dq, the mean number of real eigenvalues."""
    cfg = cfg or QuadratureConfig(rel_tol=1e-9, abs_tol=1e-12)
    zmax = params.edge + 12.0

    def over_q(z):
        # q-integral on the map q = u / (1 - u), u in (0, 1)
        def f(u):
            q = u / (1 - u)
            return jpdf_finite(np.full_like(u, z), q, params) / (1 - u) ** 2
        return integrate(f, 0.0, 1.0, cfg, [0.5, 0.9, 0.99])

    def outer(zs):
        return np.array([over_q(float(z)) for z in zs])

    # the density is even in z
    return 2 * integrate(outer, 0.0, zmax, cfg, list(np.linspace(0, zmax, 9)[1:-1]))
