"""Closed-form Lebesgue x counting measures with rejection Monte Carlo checks.

"mes" is Lebesgue measure in the continuous frequency times counting measure
in the integer frequency.  Every measure routine returns a
:class:`MeasureReport` holding the exact value and an independent stratified
rejection estimate: for each integer stratum a bounding box is drawn from a
widened level set (twice the band width), points are accepted on the raw
defining inequality, and the accepted fraction is scaled by the box length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.signal

from .lattice import check_dyadic

__all__ = [
    "MeasureReport",
    "ShellSpec",
    "SchurInstance",
    "make_rng",
    "xi_square_band_measure",
    "mes_B_N",
    "mes_A_N_parabolic",
    "parabolic_reduced",
    "parabolic_direct",
    "mes_A_N_hyperbolic",
    "count_hyperbola_band",
    "mes_level_shell",
    "coarea_delta_mass",
    "coarea_thickened",
    "schur_shell_sum",
    "schur_shell_mc",
    "schur_pair_value",
    "hls_ratio",
]

DEFAULT_CLIP = 8.0


def make_rng(root_seed: int, *task) -> np.random.Generator:
    """Independent stream for ``task`` derived from a 64-bit root seed."""
    ss = np.random.SeedSequence(entropy=int(root_seed), spawn_key=tuple(int(t) for t in task))
    return np.random.default_rng(ss)


@dataclass
class MeasureReport:
    exact: float
    mc_estimate: float
    mc_stderr: float
    n_samples: int
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def z_score(self) -> float:
        if self.mc_stderr == 0:
            return 0.0 if abs(self.exact - self.mc_estimate) <= 1e-12 * max(1.0, self.exact) else math.inf
        return abs(self.exact - self.mc_estimate) / self.mc_stderr

    @property
    def consistent(self) -> bool:
        return self.z_score <= 4.0

    @property
    def precise(self) -> bool:
        return self.exact == 0 or self.mc_stderr < 0.01 * self.exact

    def row(self) -> dict:
        out = dict(self.params)
        out.update(exact=self.exact, mc_estimate=self.mc_estimate, mc_stderr=self.mc_stderr,
                   n_samples=self.n_samples, z=self.z_score, consistent=self.consistent)
        out.update(self.extra)
        return out


# ---------------------------------------------------------------------------
# one-dimensional band pieces


def _root_pair(a, c):
    """Radii r_lo <= r_hi with {xi: |xi^2 - a| <= c} = {r_lo <= |xi| <= r_hi}."""
    a = np.asarray(a, float)
    hi = np.sqrt(np.maximum(a + c, 0.0))
    lo = np.sqrt(np.maximum(a - c, 0.0))
    return lo, hi


def _overlap(lo1, hi1, lo2, hi2):
    return np.maximum(0.0, np.minimum(hi1, hi2) - np.maximum(lo1, lo2))


def _band_measure(a, c, clip_lo=None, clip_hi=None):
    """Vectorized measure of {|xi^2 - a| <= c} within [clip_lo, clip_hi]."""
    a = np.asarray(a, float)
    empty = a + c < 0
    if clip_lo is None:
        # 2 (sqrt(a+c) - sqrt(a-c)) in cancellation-free form
        hi = np.sqrt(np.maximum(a + c, 0.0))
        lo = np.sqrt(np.maximum(a - c, 0.0))
        both = a - c > 0
        val = np.where(both, 2.0 * (2.0 * c) / np.where(both, hi + lo, 1.0), 2.0 * hi)
        return np.where(empty, 0.0, val)
    lo, hi = _root_pair(a, c)
    val = _overlap(lo, hi, clip_lo, clip_hi) + _overlap(-hi, -lo, clip_lo, clip_hi)
    return np.where(empty, 0.0, val)


def xi_square_band_measure(a: float, c_width: float, clip=None) -> float:
    """Lebesgue measure of {xi: |xi^2 - a| <= c_width}, optionally intersected with ``clip``."""
    if c_width <= 0:
        raise ValueError("c_width must be positive")
    if clip is None:
        return float(_band_measure(a, c_width))
    return float(_band_measure(a, c_width, float(clip[0]), float(clip[1])))


# ---------------------------------------------------------------------------
# stratified rejection Monte Carlo


def _stratified_mc(boxes_lo, boxes_hi, accept, rng, target_rel=0.004, base=4000, max_rounds=6):
    """Estimate sum_i |{x in box_i: accept(i, x)}| with per-box uniform sampling.

    ``accept(idx, x)`` evaluates the raw membership test for samples ``x``
    drawn in boxes ``idx``.  Sample counts are proportional to box length and
    are doubled until the standard error is below ``target_rel`` of the estimate.
    """
    lo = np.asarray(boxes_lo, float)
    hi = np.asarray(boxes_hi, float)
    length = np.maximum(hi - lo, 0.0)
    live = np.nonzero(length > 0)[0]
    if live.size == 0:
        return 0.0, 0.0, 0
    lengths = length[live]
    hits = np.zeros(live.size)
    counts = np.zeros(live.size)
    total = base
    for _ in range(max_rounds):
        alloc = np.maximum(16, np.ceil(total * lengths / lengths.sum())).astype(np.int64)
        idx = np.repeat(np.arange(live.size), alloc)
        x = lo[live][idx] + rng.random(idx.size) * lengths[idx]
        ok = accept(live[idx], x)
        hits += np.bincount(idx, weights=ok.astype(float), minlength=live.size)
        counts += alloc
        p = hits / counts
        est = float(np.sum(lengths * p))
        var = float(np.sum(lengths ** 2 * p * (1.0 - p) / np.maximum(counts - 1, 1)))
        se = math.sqrt(var)
        if est > 0 and se < target_rel * est:
            break
        total *= 2
    return est, se, int(counts.sum())


# ---------------------------------------------------------------------------
# B_N and A_N sets


def _n1_range(n: int, N: int) -> np.ndarray:
    lo = max(-2 * N, n - 2 * N)
    hi = min(2 * N, n + 2 * N)
    return np.arange(lo, hi + 1) if hi >= lo else np.arange(0)


def mes_B_N(tau: float, n: int, c_width: float = 1.0, N=1, seed: int | None = 0,
            mc: bool = True) -> MeasureReport:
    """mes{(xi1, n1): |tau + xi1^2 - (n - n1)^2| <= C, |n1| <= 2N, |n - n1| <= 2N}."""
    N = check_dyadic(N)
    if c_width <= 0:
        raise ValueError("c_width must be positive")
    n1 = _n1_range(int(n), N)
    a = (n - n1).astype(float) ** 2 - tau
    exact = float(np.sum(_band_measure(a, c_width)))
    params = dict(kind="B_N", tau=tau, n=int(n), c_width=c_width, N=N)
    if not mc:
        return MeasureReport(exact, float("nan"), float("nan"), 0, params)
    rng = make_rng(seed if seed is not None else 0, 1)
    # boxes: widened radii, one box per sign
    r_lo, r_hi = _root_pair(a, 2.0 * c_width)
    lo = np.concatenate([r_lo, -r_hi])
    hi = np.concatenate([r_hi, -r_lo])
    aa = np.concatenate([a, a])

    def accept(i, x):
        return np.abs(tau + x * x - (aa[i] + tau)) <= c_width

    est, se, ns = _stratified_mc(lo, hi, accept, rng)
    return MeasureReport(exact, est, se, ns, params)


def parabolic_reduced(tau: float, xi: float, n: int, c_width: float = 1.0, N=1) -> float:
    """Parabolic set measure via completing the square.

    With eta = xi1 - xi/2 and m = n1 - n/2 the condition becomes
    |eta^2 - (m^2 - tau')| <= C/2 with tau' = (tau + xi^2/2 - n^2/2)/2,
    a half-integer-shifted B_N sum.
    """
    N = check_dyadic(N)
    n1 = _n1_range(int(n), N)
    m = n1 - 0.5 * n
    tau_p = 0.5 * (tau + 0.5 * xi * xi - 0.5 * n * n)
    return float(np.sum(_band_measure(m * m - tau_p, 0.5 * c_width)))


def _parabolic_sublevel(K, c, xi):
    # {xi1: |q(xi1) - K| <= c}, q(xi1) = xi1^2 + (xi - xi1)^2; {q <= v} has length sqrt(2v - xi^2)
    up = 2.0 * (K + c) - xi * xi
    dn = 2.0 * (K - c) - xi * xi
    s_up = np.sqrt(np.maximum(up, 0.0))
    s_dn = np.sqrt(np.maximum(dn, 0.0))
    both = dn > 0
    # up - dn = 4c exactly; forming it by subtraction would cancel for large K
    return np.where(both, 4.0 * c / np.where(both, s_up + s_dn, 1.0), s_up)


def parabolic_direct(tau: float, xi: float, n: int, c_width: float = 1.0, N=1) -> float:
    """Same measure from the per-n1 sublevel sets of q(xi1) = xi1^2 + (xi - xi1)^2."""
    N = check_dyadic(N)
    n1 = _n1_range(int(n), N).astype(float)
    K = n1 ** 2 + (n - n1) ** 2 - tau
    return float(np.sum(_parabolic_sublevel(K, c_width, xi)))


def mes_A_N_parabolic(tau: float, xi: float, n: int, c_width: float = 1.0, N=1,
                      seed: int | None = 0, mc: bool = True) -> MeasureReport:
    """mes{(xi1, n1): |tau + xi1^2 + (xi - xi1)^2 - n1^2 - (n - n1)^2| <= C, |n1|, |n - n1| <= 2N}.

    ``exact`` comes from the completed-square reduction and ``extra['direct']``
    from the per-n1 sublevel sets.
    """
    if c_width <= 0:
        raise ValueError("c_width must be positive")
    N = check_dyadic(N)
    exact = parabolic_reduced(tau, xi, n, c_width, N)
    params = dict(kind="A_N_parabolic", tau=tau, xi=xi, n=int(n), c_width=c_width, N=N)
    extra = dict(direct=parabolic_direct(tau, xi, n, c_width, N))
    if not mc:
        return MeasureReport(exact, float("nan"), float("nan"), 0, params, extra)
    rng = make_rng(seed if seed is not None else 0, 5)
    n1 = _n1_range(int(n), N).astype(float)
    K = n1 ** 2 + (n - n1) ** 2 - tau
    half = 0.5 * np.sqrt(np.maximum(2.0 * (K + 2.0 * c_width) - xi * xi, 0.0))

    def accept(i, x):
        v = tau + x * x + (xi - x) ** 2 - n1[i] ** 2 - (n - n1[i]) ** 2
        return np.abs(v) <= c_width

    est, se, ns = _stratified_mc(0.5 * xi - half, 0.5 * xi + half, accept, rng)
    return MeasureReport(exact, est, se, ns, params, extra)


def mes_A_N_hyperbolic(tau: float, xi: float, n: int, c_width: float = 1.0, N=1,
                       seed: int | None = 0, mc: bool = True) -> MeasureReport:
    """mes{(xi1, n1): |tau + xi1 n1 + (xi - xi1)(n - n1)| <= C, 2 n1 != n} with clips.

    Clips: |n1|, |n - n1| <= 2N and |xi1|, |xi - xi1| <= 2N.  The resonant
    n1 = n/2 slice is excluded and reported in ``extra['resonant']``.
    """
    N = check_dyadic(N)
    if c_width <= 0:
        raise ValueError("c_width must be positive")
    n1 = _n1_range(int(n), N)
    d = (2 * n1 - n).astype(float)
    b = xi * (n - n1) + tau
    clo = max(-2.0 * N, xi - 2.0 * N)
    chi = min(2.0 * N, xi + 2.0 * N)
    res = d == 0
    resonant = 0.0
    if np.any(res):
        if abs(b[res][0]) <= c_width:
            resonant = max(0.0, chi - clo)
    dd = d[~res]
    bb = b[~res]
    lo = np.minimum((-c_width - bb) / dd, (c_width - bb) / dd)
    hi = np.maximum((-c_width - bb) / dd, (c_width - bb) / dd)
    exact = float(np.sum(_overlap(lo, hi, clo, chi)))
    params = dict(kind="A_N_hyperbolic", tau=tau, xi=xi, n=int(n), c_width=c_width, N=N)
    extra = dict(resonant=resonant)
    if not mc:
        return MeasureReport(exact, float("nan"), float("nan"), 0, params, extra)
    rng = make_rng(seed if seed is not None else 0, 2)
    mid = 0.5 * (lo + hi)
    half = (hi - lo)  # twice the half-width
    blo = np.maximum(mid - half, clo)
    bhi = np.minimum(mid + half, chi)
    n1s = n1[~res].astype(float)

    def accept(i, x):
        v = tau + x * n1s[i] + (xi - x) * (n - n1s[i])
        return (np.abs(v) <= c_width) & (np.abs(x) <= 2 * N) & (np.abs(xi - x) <= 2 * N)

    est, se, ns = _stratified_mc(blo, bhi, accept, rng)
    return MeasureReport(exact, est, se, ns, params, extra)


def count_hyperbola_band(n: int, tau: float, L: float, N=1) -> int:
    """#{n1: (n - n1)^2 - tau in [L, 2L], |n1| <= 2N, |n - n1| <= 2N}."""
    N = check_dyadic(N)
    if L < 1:
        raise ValueError("L must be >= 1")
    n1 = _n1_range(int(n), N)
    v = (n - n1).astype(float) ** 2 - tau
    return int(np.count_nonzero((v >= L) & (v <= 2 * L)))


# ---------------------------------------------------------------------------
# level shells


@dataclass(frozen=True)
class ShellSpec:
    """A_j = {(xi, k): |Phi| in [j, j+1), |xi| + |k| <= clip N},
    Phi = (xi - c_x)^2 - (k - c_y)^2 - r_offset."""

    j: int
    center: tuple
    r_offset: float
    n: int
    clip: float = DEFAULT_CLIP

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 0:
            raise ValueError("j must be a nonnegative integer")
        check_dyadic(self.n)


def _shell_strata(spec: ShellSpec):
    cx, cy = float(spec.center[0]), float(spec.center[1])
    K = int(math.floor(spec.clip * spec.n))
    k = np.arange(-K, K + 1)
    X = spec.clip * spec.n - np.abs(k)
    a = (k - cy) ** 2 + spec.r_offset
    # clip in the shifted variable eta = xi - c_x
    return k, a, -X - cx, X - cx


def mes_level_shell(spec: ShellSpec, seed: int | None = 0, mc: bool = True) -> MeasureReport:
    k, a, clo, chi = _shell_strata(spec)
    j = float(spec.j)
    outer = _band_measure(a, j + 1.0, clo, chi)
    inner = _band_measure(a, j, clo, chi) if j > 0 else np.zeros_like(outer)
    exact = float(np.sum(outer - inner))
    params = dict(kind="level_shell", j=spec.j, c_x=float(spec.center[0]),
                  c_y=float(spec.center[1]), r_offset=spec.r_offset, N=spec.n, clip=spec.clip)
    if not mc:
        return MeasureReport(exact, float("nan"), float("nan"), 0, params)
    rng = make_rng(seed if seed is not None else 0, 3)
    # one widened box per sub-band x^2 - a in [j, j+1) and (-j-1, -j], per sign
    bands = [(j - 0.5, j + 1.5), (-j - 1.5, -j + 0.5)] if j > 0 else [(-1.5, 1.5)]
    los, his = [], []
    for lo_v, hi_v in bands:
        r_lo = np.sqrt(np.maximum(a + lo_v, 0.0))
        r_hi = np.sqrt(np.maximum(a + hi_v, 0.0))
        los += [np.maximum(r_lo, clo), np.maximum(-r_hi, clo)]
        his += [np.minimum(r_hi, chi), np.minimum(-r_lo, chi)]
    lo, hi = np.concatenate(los), np.concatenate(his)
    aa = np.tile(a, 2 * len(bands))

    def accept(i, x):
        phi = np.abs(x * x - aa[i])
        return (phi >= j) & (phi < j + 1.0)

    est, se, ns = _stratified_mc(lo, hi, accept, rng)
    return MeasureReport(exact, est, se, ns, params)


# ---------------------------------------------------------------------------
# co-area


def coarea_delta_mass(a_level: float) -> float:
    """iint delta(zeta^2 + eta^2 - A) = pi for A >= 0 and 0 otherwise."""
    return math.pi if a_level >= 0 else 0.0


def coarea_thickened(a_level: float, eps: float) -> float:
    """mes{A <= zeta^2 + eta^2 <= A + eps} / eps, with exact rational bookkeeping.

    The disc of squared radius R has area pi R, so the annulus has area
    pi (max(A + eps, 0) - max(A, 0)); the bracket is formed exactly.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    A, E = Fraction(a_level), Fraction(eps)
    width = max(A + E, Fraction(0)) - max(A, Fraction(0))
    return math.pi * float(width / E)


# ---------------------------------------------------------------------------
# Schur shell sum


@dataclass(frozen=True)
class SchurInstance:
    """Level A, offsets |R|^2_-, |R'|^2_-, centers (0, c), (0, c') and band N."""

    a: float
    r: float
    r_prime: float
    c: float
    c_prime: float
    n: int
    clip: float = DEFAULT_CLIP

    def __post_init__(self):
        if self.c not in (0, 0.5) or self.c_prime not in (0, 0.5):
            raise ValueError("c and c' must lie in {0, 1/2}")
        check_dyadic(self.n)


_S_WIN = 10.0  # Gaussian window half-width in u = xi^2 (e^{-100} beyond)


def _schur_axes(inst: SchurInstance):
    K = int(math.floor(inst.clip * inst.n))
    k = np.arange(-K, K + 1).astype(float)
    X2 = (inst.clip * inst.n - np.abs(k)) ** 2
    d = 0.5 * (inst.a + inst.r - inst.r_prime)
    dp = 0.5 * (inst.a + inst.r_prime - inst.r)
    m = (k - inst.c) ** 2 + d
    M = (k - inst.c_prime) ** 2 + dp
    return k, X2, m, M


def _classify(center, X2):
    dead = (center < -_S_WIN) | (X2 < center - _S_WIN)
    regular = (center >= 3 * _S_WIN) & (X2 >= center + _S_WIN)
    irregular = ~dead & ~regular
    return regular, irregular


def _pair_theta(m, M, X2, Xp2, nodes):
    """Per-pair integral of e^{-(u-m)^2} / sqrt(u (B-u)) over the admissible u-range,
    evaluated as 2 int e^{-(B cos^2 th - m)^2} dth with Gauss-Legendre in theta."""
    B = m + M
    u_lo = np.maximum.reduce([np.zeros_like(B), m - _S_WIN, B - Xp2])
    u_hi = np.minimum.reduce([B, m + _S_WIN, X2])
    ok = (B > 0) & (u_hi > u_lo)
    out = np.zeros_like(B)
    if not np.any(ok):
        return out
    Bo, mo = B[ok], m[ok]
    th_a = np.arccos(np.sqrt(np.clip(u_hi[ok] / Bo, 0.0, 1.0)))
    th_b = np.arccos(np.sqrt(np.clip(u_lo[ok] / Bo, 0.0, 1.0)))
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (th_b - th_a)
    th = (th_a + th_b)[:, None] * 0.5 + half[:, None] * x[None, :]
    u = Bo[:, None] * np.cos(th) ** 2
    val = np.exp(-(u - mo[:, None]) ** 2) @ w
    out[ok] = 2.0 * half * val
    return out


def schur_shell_sum(inst: SchurInstance, nodes: int = 256) -> float:
    """Sum over (k, k') of the Gaussian-weighted circle integral

        iint e^{-((xi^2-(k-c)^2-r)^2 + (xi'^2-(k'-c')^2-r')^2)/2}
             delta(xi^2 - (k-c)^2 + xi'^2 - (k'-c')^2 - A) dxi dxi',

    restricted to |xi| + |k| <= clip N and |xi'| + |k'| <= clip N.  On the
    circle xi^2 + xi'^2 = B the two Gaussians combine to
    exp(-(r + r' - A)^2 / 4) exp(-(u - m_k)^2) with u = xi^2 and
    m_k = (k-c)^2 + (A + r - r')/2; the measure is du / sqrt(u (B - u)).
    Pairs with both centers far from the endpoints and the clip separate and
    are summed through a shared Gauss-Legendre rule in s = u - m_k; the
    remaining pairs use ``nodes``-point Gauss-Legendre in the circle angle.
    """
    k, X2, m, M = _schur_axes(inst)
    pref = math.exp(-0.25 * (inst.r + inst.r_prime - inst.a) ** 2)
    reg, irr = _classify(m, X2)
    regp, irrp = _classify(M, X2)
    total = 0.0
    if np.any(reg) and np.any(regp):
        s, w = np.polynomial.legendre.leggauss(96)
        s = s * _S_WIN
        w = w * _S_WIN
        F = np.sum((m[reg][:, None] + s[None, :]) ** -0.5, axis=0)
        G = np.sum((M[regp][:, None] - s[None, :]) ** -0.5, axis=0)
        total += float(np.sum(w * np.exp(-s * s) * F * G))
    # pairs involving at least one irregular index
    rows = []
    ii = np.nonzero(irr)[0]
    live_q = np.nonzero(regp | irrp)[0]
    if ii.size:
        a, b = np.meshgrid(ii, live_q, indexing="ij")
        rows.append((a.ravel(), b.ravel()))
    jj = np.nonzero(irrp)[0]
    rr = np.nonzero(reg)[0]
    if jj.size and rr.size:
        a, b = np.meshgrid(rr, jj, indexing="ij")
        rows.append((a.ravel(), b.ravel()))
    for ia, ib in rows:
        for s0 in range(0, ia.size, 4096):
            sa, sb = ia[s0:s0 + 4096], ib[s0:s0 + 4096]
            total += float(np.sum(_pair_theta(m[sa], M[sb], X2[sa], X2[sb], nodes)))
    return pref * total


def schur_pair_value(inst: SchurInstance, k: int, k_prime: int, nodes: int = 256) -> float:
    """Circle integral for a single (k, k') pair, clipped."""
    K = int(math.floor(inst.clip * inst.n))
    if abs(k) > K or abs(k_prime) > K:
        return 0.0
    X2 = np.array([(inst.clip * inst.n - abs(k)) ** 2])
    Xp2 = np.array([(inst.clip * inst.n - abs(k_prime)) ** 2])
    m = np.array([(k - inst.c) ** 2 + 0.5 * (inst.a + inst.r - inst.r_prime)])
    M = np.array([(k_prime - inst.c_prime) ** 2 + 0.5 * (inst.a + inst.r_prime - inst.r)])
    pref = math.exp(-0.25 * (inst.r + inst.r_prime - inst.a) ** 2)
    return pref * float(_pair_theta(m, M, X2, Xp2, nodes)[0])


def schur_shell_mc(inst: SchurInstance, n_per_pair: int = 4000, eps: float = 1e-3,
                   seed: int = 0, pairs=None) -> tuple[float, float]:
    """Thickened-shell Monte Carlo for :func:`schur_shell_sum` (small N only).

    For every (k, k') the weight is averaged over uniform points of the
    annulus B <= xi^2 + xi'^2 <= B + eps (area pi eps), with the clip applied
    as an indicator; the sum of pi * mean over pairs estimates the shell sum.
    """
    rng = make_rng(seed, 4)
    K = int(math.floor(inst.clip * inst.n))
    ks = np.arange(-K, K + 1).astype(float)
    if pairs is None:
        pairs = [(k, kp) for k in ks for kp in ks]
    est = 0.0
    var = 0.0
    for k, kp in pairs:
        X = inst.clip * inst.n - abs(k)
        Xp = inst.clip * inst.n - abs(kp)
        B = inst.a + (k - inst.c) ** 2 + (kp - inst.c_prime) ** 2
        if B + eps <= 0:
            continue
        lo = max(B, 0.0)
        rho2 = lo + rng.random(n_per_pair) * (B + eps - lo)
        th = rng.random(n_per_pair) * 2 * np.pi
        xi = np.sqrt(rho2) * np.cos(th)
        xp = np.sqrt(rho2) * np.sin(th)
        phi1 = xi ** 2 - (k - inst.c) ** 2 - inst.r
        phi2 = xp ** 2 - (kp - inst.c_prime) ** 2 - inst.r_prime
        wgt = np.exp(-0.5 * (phi1 ** 2 + phi2 ** 2)) * (np.abs(xi) <= X) * (np.abs(xp) <= Xp)
        frac = (B + eps - lo) / eps
        est += math.pi * frac * wgt.mean()
        var += (math.pi * frac) ** 2 * wgt.var() / n_per_pair
    return est, math.sqrt(var)


# ---------------------------------------------------------------------------
# discrete HLS


def hls_ratio(a: Sequence[float], b: Sequence[float], alpha: float, p: float, r: float) -> float:
    """sum_{j != k} a_j b_k |j - k|^{-alpha} / (||a||_p ||b||_r)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if abs(1.0 / p + 1.0 / r + alpha - 2.0) > 1e-9:
        raise ValueError("scaling condition 1/p + 1/r + alpha = 2 violated")
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("sequences must be nonnegative")
    na = np.sum(a ** p) ** (1.0 / p)
    nb = np.sum(b ** r) ** (1.0 / r)
    if na == 0 or nb == 0:
        raise ValueError("zero sequence")
    n = max(a.size, b.size)
    d = np.arange(-(n - 1), n).astype(float)
    ker = np.zeros_like(d)
    nz = d != 0
    ker[nz] = np.abs(d[nz]) ** -alpha
    # sum_j a_j (ker * b)_j with (ker * b)_j = sum_k ker[j - k] b_k
    conv = scipy.signal.fftconvolve(b, ker) if b.size * ker.size > 4096 else np.convolve(b, ker)
    # index of (j) in the full convolution is j + (n - 1)
    total = float(np.dot(a, conv[n - 1:n - 1 + a.size]))
    return total / (na * nb)
