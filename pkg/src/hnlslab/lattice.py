"""Discretization of R x T, Fourier transforms, frequency projectors and norms.

Conventions
-----------
The transform is ``f^(xi, k) = int e^{-2 pi i (xi x + k y)} f(x, y) dx dy`` with
the torus of period 1.  The real line is truncated to the box
``[-L/2, L/2)`` of period ``L``; the x-frequencies are ``xi_m = m / L``.

Spectral coefficients carry the density convention::

    f(x, y) = sum_m sum_k coeff[m, k] e^{2 pi i (xi_m x + k y)} / L

so that a single unit coefficient is a plane wave of height ``1/L`` and the
l2 weight of the coefficients (with ``dxi = 1/L``) equals the squared L2 norm
of the physical field.  Arrays are stored in FFT order along both axes; use
:func:`DomainSpec.m_index` / :func:`DomainSpec.k_index` for the integer labels.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft as sfft

__all__ = [
    "BandOverflowError",
    "DomainSpec",
    "SpectralField",
    "PhysicalField",
    "bump_phi",
    "critical_index",
    "check_dyadic",
    "forward_transform",
    "inverse_transform",
    "project_leq",
    "project_dyadic",
    "project_set",
    "cube_predicate",
    "sobolev_norm",
    "mixed_l4n_l2xi_norm",
    "l2_norm",
    "spatial_lp_norm",
    "field_to_bytes",
    "field_from_bytes",
    "field_to_json",
    "field_from_json",
]

_MAGIC = b"HNLF"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIId")


class BandOverflowError(ValueError):
    """Requested band is not resolved by the grid."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def check_dyadic(n) -> int:
    """Validate a dyadic scale N in {1, 2, 4, ...} and return it as int."""
    ni = int(n)
    if ni != n or not _is_pow2(ni):
        raise ValueError(f"dyadic scale must be a power of two >= 1, got {n!r}")
    return ni


def critical_index(k: int) -> float:
    """Scaling-critical Sobolev index 1 - 1/k for the degree 2k+1 nonlinearity."""
    if int(k) != k or k < 1:
        raise ValueError("k must be an integer >= 1")
    return 1.0 - 1.0 / k


def _bridge(s):
    # e^{-1/s} for s > 0, else 0
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def bump_phi(x):
    """Smooth even cutoff: 1 on |x| <= 1, 0 on |x| >= 2.

    On 1 < |x| < 2 the transition is the C-infinity quotient
    ``g(2 - |x|) / (g(2 - |x|) + g(|x| - 1))`` with ``g(s) = exp(-1/s)``.
    It is monotone on [1, 2] and symmetric about 1.5, so ``phi(1.5) = 1/2`` and
    ``int phi = 3``.
    """
    a = np.abs(np.asarray(x, dtype=float))
    scalar = a.ndim == 0
    a = np.atleast_1d(a)
    out = np.zeros_like(a)
    out[a <= 1.0] = 1.0
    mid = (a > 1.0) & (a < 2.0)
    if np.any(mid):
        am = a[mid]
        g_in = _bridge(2.0 - am)
        g_out = _bridge(am - 1.0)
        out[mid] = g_in / (g_in + g_out)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class DomainSpec:
    """Grid contract for the truncated domain [-L/2, L/2) x [0, 1).

    Invariants: ``n_x``, ``n_y`` powers of two, ``n_max`` dyadic, and both
    resolvable bands (``n_x / (2L)`` and ``n_y / 2``) at least ``2 n_max``.
    """

    x_period: float
    n_x: int
    n_y: int
    n_max: int

    def __post_init__(self):
        if not (self.x_period > 0 and math.isfinite(self.x_period)):
            raise ValueError("x_period must be a positive finite real")
        for name in ("n_x", "n_y"):
            v = getattr(self, name)
            if int(v) != v or not _is_pow2(int(v)) or v < 2:
                raise ValueError(f"{name} must be a power of two >= 2, got {v!r}")
        check_dyadic(self.n_max)
        if self.x_band < 2 * self.n_max:
            need = 4 * self.n_max * self.x_period
            raise BandOverflowError(
                f"x band {self.x_band:g} < 2*n_max={2 * self.n_max}; need n_x >= {need:g}"
            )
        if self.y_band < 2 * self.n_max:
            raise BandOverflowError(
                f"y band {self.y_band:g} < 2*n_max={2 * self.n_max}; need n_y >= {4 * self.n_max}"
            )

    @classmethod
    def for_band(cls, n_max: int, t_max: float = 1.0, support: float = 8.0,
                 oversample: int = 1) -> "DomainSpec":
        """Smallest grid for band ``n_max`` with no wrap-around up to ``t_max``.

        The box length is ``L >= 8 n_max t_max + support`` (band-N packets move
        with speed at most 4N), rounded up to a power of two.
        """
        n_max = check_dyadic(n_max)
        length = 8.0 * n_max * abs(t_max) + support
        x_period = float(2 ** math.ceil(math.log2(max(length, 1.0))))
        n_x = int(2 ** math.ceil(math.log2(4 * n_max * x_period * oversample)))
        n_y = int(2 ** math.ceil(math.log2(4 * n_max * oversample)))
        return cls(x_period, max(n_x, 2), max(n_y, 2), n_max)

    @property
    def x_band(self) -> float:
        return self.n_x / (2.0 * self.x_period)

    @property
    def y_band(self) -> float:
        return self.n_y / 2.0

    @property
    def dxi(self) -> float:
        return 1.0 / self.x_period

    @property
    def dx(self) -> float:
        return self.x_period / self.n_x

    @property
    def dy(self) -> float:
        return 1.0 / self.n_y

    def m_index(self) -> np.ndarray:
        return np.rint(sfft.fftfreq(self.n_x, 1.0 / self.n_x)).astype(np.int64)

    def k_index(self) -> np.ndarray:
        return np.rint(sfft.fftfreq(self.n_y, 1.0 / self.n_y)).astype(np.int64)

    def xi(self) -> np.ndarray:
        return self.m_index() / self.x_period

    def x_grid(self) -> np.ndarray:
        return -0.5 * self.x_period + self.dx * np.arange(self.n_x)

    def y_grid(self) -> np.ndarray:
        return self.dy * np.arange(self.n_y)

    def to_dict(self) -> dict:
        return {"x_period": self.x_period, "n_x": self.n_x, "n_y": self.n_y,
                "n_max": self.n_max}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpectralField:
    domain: DomainSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = _frozen(self.coeffs)
        if c.shape != (self.domain.n_x, self.domain.n_y):
            raise ValueError(f"coeffs shape {c.shape} does not match domain")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, domain: DomainSpec) -> "SpectralField":
        return cls(domain, np.zeros((domain.n_x, domain.n_y), complex))

    def with_coeffs(self, coeffs) -> "SpectralField":
        return SpectralField(self.domain, coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coeffs(self.coeffs - other.coeffs)

    def scale(self, c) -> "SpectralField":
        return self.with_coeffs(c * self.coeffs)


@dataclass(frozen=True)
class PhysicalField:
    domain: DomainSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.domain.n_x, self.domain.n_y):
            raise ValueError(f"values shape {v.shape} does not match domain")
        object.__setattr__(self, "values", v)


def _sign_m(domain: DomainSpec) -> np.ndarray:
    # e^{-2 pi i xi_m x_0} with x_0 = -L/2
    return np.where(domain.m_index() % 2 == 0, 1.0, -1.0)[:, None]


def forward_transform(f: PhysicalField) -> SpectralField:
    d = f.domain
    w = d.dx * d.dy
    c = sfft.fft2(f.values) * (w * _sign_m(d))
    return SpectralField(d, c)


def inverse_transform(F: SpectralField) -> PhysicalField:
    d = F.domain
    scale = d.n_x * d.n_y / d.x_period
    v = sfft.ifft2(F.coeffs * _sign_m(d)) * scale
    return PhysicalField(d, v)


def _check_band(domain: DomainSpec, n: int) -> None:
    if 2 * n > domain.x_band:
        need = int(2 ** math.ceil(math.log2(4 * n * domain.x_period)))
        raise BandOverflowError(
            f"2N={2 * n} exceeds x band {domain.x_band:g}; need n_x >= {need}")
    if 2 * n > domain.y_band:
        need = int(2 ** math.ceil(math.log2(4 * n)))
        raise BandOverflowError(
            f"2N={2 * n} exceeds y band {domain.y_band:g}; need n_y >= {need}")


def leq_symbol(domain: DomainSpec, n: int) -> np.ndarray:
    """Multiplier phi(xi/N) phi(k/N) on the grid (FFT order)."""
    return bump_phi(domain.xi() / n)[:, None] * bump_phi(domain.k_index() / n)[None, :]


def project_leq(F: SpectralField, N) -> SpectralField:
    n = check_dyadic(N)
    _check_band(F.domain, n)
    return F.with_coeffs(F.coeffs * leq_symbol(F.domain, n))


def project_dyadic(F: SpectralField, N) -> SpectralField:
    """Littlewood-Paley piece P_N = P_{<=N} - P_{<=N/2}, with P_1 = P_{<=1}."""
    n = check_dyadic(N)
    _check_band(F.domain, n)
    sym = leq_symbol(F.domain, n)
    if n > 1:
        sym = sym - leq_symbol(F.domain, n // 2)
    return F.with_coeffs(F.coeffs * sym)


def project_set(F: SpectralField, S: Callable) -> SpectralField:
    """Sharp projection onto the frequency set ``{(xi, k): S(xi, k)}``.

    ``S`` receives broadcastable arrays of xi (column) and k (row) values and
    returns a boolean mask.
    """
    d = F.domain
    mask = np.broadcast_to(np.asarray(S(d.xi()[:, None], d.k_index()[None, :]), bool),
                           F.coeffs.shape)
    return F.with_coeffs(np.where(mask, F.coeffs, 0.0))


def cube_predicate(z, side: float = 1.0) -> Callable:
    """Indicator of the half-open cube ``z + [0, side)^2`` in (xi, k)."""
    zx, zk = float(z[0]), float(z[1])

    def S(xi, k):
        return (xi >= zx) & (xi < zx + side) & (k >= zk) & (k < zk + side)
    return S


def sobolev_norm(F: SpectralField, s: float) -> float:
    d = F.domain
    w = (1.0 + d.xi()[:, None] ** 2 + d.k_index()[None, :] ** 2) ** s
    return math.sqrt(float(np.sum(w * np.abs(F.coeffs) ** 2)) * d.dxi)


def l2_norm(F: SpectralField) -> float:
    return math.sqrt(float(np.sum(np.abs(F.coeffs) ** 2)) * F.domain.dxi)


def mixed_l4n_l2xi_norm(F: SpectralField) -> float:
    """(sum_k (int |F(xi, k)|^2 dxi)^2)^{1/4}."""
    rows = np.sum(np.abs(F.coeffs) ** 2, axis=0) * F.domain.dxi
    return float(np.sum(rows ** 2)) ** 0.25


def spatial_lp_norm(f: PhysicalField, p) -> float:
    a = np.abs(f.values)
    if p == np.inf:
        return float(a.max())
    if p < 1:
        raise ValueError("p must be >= 1")
    d = f.domain
    return float(np.sum(a ** p) * d.dx * d.dy) ** (1.0 / p)


def field_to_bytes(F: SpectralField) -> bytes:
    """Binary container: header then interleaved re/im doubles, (m, k) row-major.

    Header (little-endian): magic ``HNLF``, uint32 version, uint32 n_x,
    uint32 n_y, uint32 n_max, float64 x_period.  Rows run over
    m = -n_x/2 .. n_x/2-1 and columns over k = -n_y/2 .. n_y/2-1.
    """
    d = F.domain
    head = _HEADER.pack(_MAGIC, _VERSION, d.n_x, d.n_y, d.n_max, d.x_period)
    body = np.ascontiguousarray(sfft.fftshift(F.coeffs)).astype("<c16").tobytes()
    return head + body


def field_from_bytes(buf: bytes) -> SpectralField:
    magic, version, n_x, n_y, n_max, x_period = _HEADER.unpack_from(buf, 0)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError("not a field container")
    d = DomainSpec(x_period, n_x, n_y, n_max)
    body = np.frombuffer(buf, dtype="<c16", offset=_HEADER.size, count=n_x * n_y)
    return SpectralField(d, sfft.ifftshift(body.reshape(n_x, n_y)))


def field_to_json(F: SpectralField) -> str:
    c = sfft.fftshift(F.coeffs)
    doc = {"domain": F.domain.to_dict(), "re": c.real.tolist(), "im": c.imag.tolist()}
    return json.dumps(doc, sort_keys=True)


def field_from_json(text: str) -> SpectralField:
    doc = json.loads(text)
    d = DomainSpec(**doc["domain"])
    c = np.asarray(doc["re"]) + 1j * np.asarray(doc["im"])
    return SpectralField(d, sfft.ifftshift(c))
