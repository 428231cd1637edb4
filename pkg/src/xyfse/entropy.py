"""Spectrum of ``i Gamma`` and the Renyi entropies built from it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg
from scipy.special import xlogy

from .corr_matrix import CorrMatrix
from .errors import EigensolveFailed, InvalidAlpha, SpectrumOutOfRange, VectorsMissing
from .intervals import IntervalSet
from .xy_model import PhasePoint

NU_TOLERANCE = 1e-6
# 1 - |nu| below this is treated as exactly saturated; it is the resolution of
# a near-unit singular value when Gamma entries carry ~1e-16 absolute error and
# L_A ~ 10^3.  Matters only for alpha < 1, where each such mode adds ~sqrt(1 - nu).
SATURATION_FLOOR = 1e-13
SHANNON_WINDOW = 1e-9
LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class NuSpectrum:
    """Eigenvalues of ``i Gamma`` in descending order, with optional eigenvectors.

    ``pairs`` holds the ``L_A`` non-negative members of the ``+-nu`` pairs, so
    ``nus == concat(pairs, -pairs[::-1])``.  Column ``j`` of ``vectors`` is the
    eigenvector of ``nus[j]`` in interleaved Majorana ordering.
    """

    pairs: np.ndarray
    vectors: np.ndarray | None = None
    sites: np.ndarray | None = None
    interval_set: IntervalSet | None = None

    @property
    def nus(self) -> np.ndarray:
        return np.concatenate([self.pairs, -self.pairs[::-1]])

    @property
    def n_sites(self) -> int:
        return int(self.pairs.size)


def _svd(block, with_vectors):
    try:
        if with_vectors:
            return scipy.linalg.svd(block, lapack_driver="gesdd")
        return scipy.linalg.svd(block, compute_uv=False, lapack_driver="gesdd")
    except (np.linalg.LinAlgError, ValueError):
        pass
    try:
        if with_vectors:
            return scipy.linalg.svd(block, lapack_driver="gesvd")
        return scipy.linalg.svd(block, compute_uv=False, lapack_driver="gesvd")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolveFailed(f"SVD of a {block.shape} block failed: {exc}") from exc


def _fix_phase(v):
    # make the first component of (near) maximal modulus real and positive
    mag = np.abs(v)
    idx = int(np.argmax(mag > mag.max() * (1 - 1e-9)))
    return v * (np.conj(v[idx]) / mag[idx])


def nu_spectrum(m: CorrMatrix, with_vectors: bool = False) -> NuSpectrum:
    """Spectrum of ``i Gamma``.

    ``Gamma = [[0, T], [-T^T, 0]]`` in (odd, even) Majorana ordering, so the
    eigenvalues of ``i Gamma`` are ``+-`` the singular values of ``T``, and for
    ``T = U S V^T`` the eigenvector of ``+s_l`` is ``(U_l, -i V_l) / sqrt(2)``.
    """
    if not np.all(np.isfinite(m.block)):
        raise EigensolveFailed("correlation matrix has non-finite entries")
    if with_vectors:
        u, s, vh = _svd(m.block, True)
    else:
        s = _svd(m.block, False)
    if s.size and s[0] > 1.0 + NU_TOLERANCE:
        raise SpectrumOutOfRange(f"|nu| = {s[0]!r} exceeds 1 by more than {NU_TOLERANCE}")
    pairs = np.where(1.0 - s < SATURATION_FLOOR, 1.0, s)
    vectors = None
    if with_vectors:
        n = pairs.size
        v = vh.T
        vectors = np.zeros((2 * n, 2 * n), dtype=complex)
        scale = 1.0 / math.sqrt(2.0)
        for l in range(n):
            plus = np.empty(2 * n, dtype=complex)
            plus[0::2] = u[:, l]
            plus[1::2] = -1j * v[:, l]
            minus = plus.copy()
            minus[1::2] *= -1
            vectors[:, l] = _fix_phase(plus * scale)
            vectors[:, 2 * n - 1 - l] = _fix_phase(minus * scale)
    return NuSpectrum(pairs=pairs, vectors=vectors, sites=m.sites, interval_set=m.interval_set)


def _check_alpha(alpha):
    if not (alpha > 0):
        raise InvalidAlpha(f"alpha must be > 0, got {alpha!r}")


def renyi_from_pairs(pairs: np.ndarray, alpha: float) -> float:
    """Renyi entropy in bits from the non-negative ``nu`` of each pair."""
    _check_alpha(alpha)
    p = 0.5 * (1.0 + pairs)
    q = 0.5 * (1.0 - pairs)
    if math.isinf(alpha):
        return float(-np.sum(np.log2(p)))
    if abs(alpha - 1.0) <= SHANNON_WINDOW:
        return float(-np.sum(xlogy(p, p) + xlogy(q, q)) / LN2)
    return float(np.sum(np.log2(p**alpha + q**alpha)) / (1.0 - alpha))


@dataclass(frozen=True)
class EntropyResult:
    alpha: float
    value_bits: float
    interval_set: IntervalSet | None = None
    phase_point: PhasePoint | None = None

    @property
    def value_nats(self) -> float:
        return self.value_bits * LN2

    def value(self, units: str = "bits") -> float:
        if units == "bits":
            return self.value_bits
        if units == "nats":
            return self.value_nats
        raise ValueError(f"unknown units {units!r}")

    def to_record(self, pattern: Any = None, lam: int = 1) -> dict:
        p = self.phase_point
        return {
            "gamma": None if p is None else p.gamma,
            "h": None if p is None else p.h,
            "pattern": None if pattern is None else str(pattern),
            "lambda": lam,
            "alpha": "inf" if math.isinf(self.alpha) else self.alpha,
            "entropy_bits": self.value_bits,
        }


def renyi_entropy(s: NuSpectrum, alpha: float, phase_point: PhasePoint | None = None) -> EntropyResult:
    """Renyi entropy (bits); ``alpha=math.inf`` gives the saturated value."""
    return EntropyResult(alpha, renyi_from_pairs(s.pairs, alpha), s.interval_set, phase_point)


@dataclass(frozen=True, eq=False)
class LocalizationReport:
    edge_weight: np.ndarray
    entangling: np.ndarray
    mean_edge_entangling: float
    mean_edge_bulk: float
    baseline: float
    degenerate: bool

    @property
    def inconclusive(self) -> bool:
        return self.degenerate


def edge_localization(s: NuSpectrum, width: int, bulk_threshold: float = 1e-3) -> LocalizationReport:
    """Fraction of each mode's weight within ``width`` sites of an open end.

    Modes with ``|nu| < 1 - bulk_threshold`` are classed as entangling, the
    rest as bulk.  A degenerate entangling spectrum makes the eigenbasis
    arbitrary; the report is then flagged inconclusive rather than failing.
    """
    if s.vectors is None:
        raise VectorsMissing("edge_localization needs a spectrum computed with_vectors=True")
    if s.interval_set is None:
        raise ValueError("spectrum carries no interval set")
    blocks = s.interval_set.blocks
    if width < 1 or width >= min(n for _, n in blocks):
        raise ValueError(f"width must be in [1, min block length), got {width}")
    sites = s.sites
    near = np.zeros(sites.size, dtype=bool)
    for offset, length in blocks:
        near |= (sites >= offset) & (sites < offset + width)
        near |= (sites > offset + length - 1 - width) & (sites <= offset + length - 1)
    amp = np.abs(s.vectors) ** 2
    per_site = amp[0::2] + amp[1::2]
    weight = per_site[near].sum(axis=0)
    nus = s.nus
    entangling = np.abs(nus) < 1.0 - bulk_threshold
    ent_pairs = np.sort(s.pairs[s.pairs < 1.0 - bulk_threshold])
    degenerate = bool(ent_pairs.size > 1 and np.any(np.diff(ent_pairs) < 1e-8))

    def mean(mask):
        return float(weight[mask].mean()) if mask.any() else float("nan")

    return LocalizationReport(
        edge_weight=weight,
        entangling=entangling,
        mean_edge_entangling=mean(entangling),
        mean_edge_bulk=mean(~entangling),
        baseline=float(near.sum() / sites.size),
        degenerate=degenerate,
    )
