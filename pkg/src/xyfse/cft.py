"""CFT reference entropies, the Jin-Korepin correction and ``s0`` calibration.

All entropies are in bits.  The logarithmic coefficient per ``log2 L`` has two
candidate forms:

* ``standard``:       (c + cbar)(1 + 1/alpha) / 12
* ``paper_printed``:  (c + cbar) / (12 (1 + alpha))

``calibrate_s0`` fits the numerical slope and :func:`select_mode` picks the
form that it matches; on both critical lines the standard form wins.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gamma as euler_gamma

from .errors import FitIllConditioned, InvalidAlpha, InvalidKf, PatternTooSmall
from .intervals import Pattern, constituents
from .xy_model import PhasePoint

LN2 = math.log(2.0)
ALPHA_ONE_WINDOW = 1e-9


class CoefficientMode(str, enum.Enum):
    PAPER_PRINTED = "paper_printed"
    STANDARD = "standard"


@dataclass(frozen=True)
class CftParams:
    """CFT data for one Renyi index; ``s0`` is ``None`` until calibrated."""

    c_plus_cbar: float
    s0: float | None = None
    log_coefficient_mode: CoefficientMode = CoefficientMode.STANDARD

    def __post_init__(self):
        if self.c_plus_cbar not in (1.0, 2.0):
            raise ValueError(f"c + cbar must be 1 or 2, got {self.c_plus_cbar}")
        object.__setattr__(self, "log_coefficient_mode", CoefficientMode(self.log_coefficient_mode))

    @classmethod
    def for_point(cls, p: PhasePoint, s0: float | None = None, mode=CoefficientMode.STANDARD) -> "CftParams":
        return cls(p.central_charge_sum, s0, mode)

    def with_s0(self, s0: float) -> "CftParams":
        return CftParams(self.c_plus_cbar, float(s0), self.log_coefficient_mode)

    def to_dict(self) -> dict:
        return {
            "c_plus_cbar": self.c_plus_cbar,
            "s0": self.s0,
            "log_coefficient_mode": self.log_coefficient_mode.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CftParams":
        return cls(float(d["c_plus_cbar"]), d.get("s0"), CoefficientMode(d["log_coefficient_mode"]))


def _check_alpha(alpha):
    if not (alpha > 0) or math.isinf(alpha):
        raise InvalidAlpha(f"alpha must be finite and > 0, got {alpha!r}")


def log_coefficient(c_plus_cbar: float, alpha: float, mode=CoefficientMode.STANDARD) -> float:
    """Coefficient of ``log2 L`` in the single-interval entropy (bits)."""
    _check_alpha(alpha)
    if CoefficientMode(mode) is CoefficientMode.STANDARD:
        return c_plus_cbar * (1.0 + 1.0 / alpha) / 12.0
    return c_plus_cbar / (12.0 * (1.0 + alpha))


def cft_single_interval(p: CftParams, L: float, alpha: float) -> float:
    if L < 1:
        raise ValueError(f"interval length must be >= 1, got {L}")
    s0 = 0.0 if p.s0 is None else p.s0
    return log_coefficient(p.c_plus_cbar, alpha, p.log_coefficient_mode) * math.log2(L) + s0


def cft_multi_interval(p: CftParams, a: Pattern, alpha: float) -> float:
    """Signed inclusion-exclusion sum of single-interval references."""
    if a.n_blocks == 1:
        return cft_single_interval(p, a.total_sites, alpha)
    return math.fsum(t.sign * cft_single_interval(p, t.length, alpha) for t in constituents(a))


def q_factor(alpha: float) -> float:
    """``Gamma(1/2 + 1/(2 alpha))^2 / Gamma(1/2 - 1/(2 alpha))^2``; zero at alpha = 1."""
    _check_alpha(alpha)
    if abs(alpha - 1.0) <= ALPHA_ONE_WINDOW:
        return 0.0
    den = euler_gamma(0.5 - 0.5 / alpha)
    if not math.isfinite(den):
        return 0.0
    return float(euler_gamma(0.5 + 0.5 / alpha) ** 2 / den**2)


def jk_coefficients(alpha: float, k_f: float, L: int) -> tuple[float, float]:
    """``(A1, A2)`` of the Jin-Korepin expansion, natural-log units."""
    s2 = math.sin(k_f) ** 2
    a1 = (12.0 * (3.0 * alpha**2 - 7.0) + (49.0 - alpha**2) * s2) * (1.0 + alpha) / (285.0 * alpha**3)
    if abs(alpha - 1.0) <= ALPHA_ONE_WINDOW:
        a2 = 0.0
    else:
        a2 = 2.0 * q_factor(alpha) * math.cos(2.0 * k_f * L) / (1.0 - alpha)
    return a1, a2


def jk_delta(alpha: float, L: int, k_f: float, units: str = "bits") -> float:
    """Leading Jin-Korepin finite-size correction of a single XX interval.

    The expansion is a correction to the natural-log entropy; with the
    default ``units="bits"`` it is divided by ``ln 2`` to compare with the
    bit-valued entropies used everywhere else.
    """
    _check_alpha(alpha)
    if not (0.0 < k_f < math.pi):
        raise InvalidKf(f"k_F must lie in (0, pi), got {k_f!r}")
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    a1, a2 = jk_coefficients(alpha, k_f, L)
    scale = 2.0 * L * abs(math.sin(k_f))
    value = a1 / scale**2 + a2 / scale ** (2.0 / alpha)
    if units == "nats":
        return value
    if units == "bits":
        return value / LN2
    raise ValueError(f"unknown units {units!r}")


class Calibration(NamedTuple):
    s0: float
    slope: float
    residual: float


def correction_regressors(L: np.ndarray, alpha: float, k_f: float | None) -> np.ndarray:
    """Leading finite-size terms used as nuisance columns in ``fit_s0``.

    ``L^-2`` always, and ``L^(-2/alpha)`` when it decays slower than ``L^-3``;
    for ``0 < k_F < pi`` the latter is split into ``cos`` and ``sin`` of
    ``2 k_F L`` so the oscillation phase is free.
    """
    L = np.asarray(L, dtype=float)
    cols = [L**-2.0]
    if abs(alpha - 1.0) > ALPHA_ONE_WINDOW and 2.0 / alpha < 3.0:
        env = L ** (-2.0 / alpha)
        if k_f is not None and 0.0 < k_f < math.pi:
            cols += [env * np.cos(2.0 * k_f * L), env * np.sin(2.0 * k_f * L)]
        else:
            cols.append(env)
    return np.column_stack(cols)


def fit_s0(
    lengths: Sequence[int],
    entropies: Sequence[float],
    *,
    slope: float | None = None,
    alpha: float | None = None,
    k_f: float | None = None,
    corrections: bool = False,
) -> Calibration:
    """Least-squares fit of ``S(L)`` against ``log2 L``.

    With ``slope=None`` both slope and intercept are free.  With a fixed
    ``slope`` only ``s0`` is fitted, optionally together with the leading
    finite-size terms of :func:`correction_regressors` (needs ``alpha``).
    """
    L = np.asarray(lengths, dtype=float)
    S = np.asarray(entropies, dtype=float)
    if np.unique(L).size < 4:
        raise FitIllConditioned(f"need >= 4 distinct lengths, got {np.unique(L).size}")
    x = np.log2(L)
    if slope is None:
        design = np.column_stack([np.ones_like(x), x])
        target = S
    else:
        design = np.ones((L.size, 1))
        target = S - slope * x
        if corrections:
            if alpha is None:
                raise ValueError("corrections need alpha")
            design = np.column_stack([design, correction_regressors(L, alpha, k_f)])
    if design.shape[1] >= L.size:
        raise FitIllConditioned(f"{design.shape[1]} parameters for {L.size} points")
    scale = np.abs(design).max(axis=0)
    coef, *_ = np.linalg.lstsq(design / scale, target, rcond=None)
    coef = coef / scale
    if np.linalg.cond(design / scale) > 1e12:
        raise FitIllConditioned("calibration design matrix is numerically singular")
    resid = target - design @ coef
    fitted_slope = float(coef[1]) if slope is None else float(slope)
    return Calibration(float(coef[0]), fitted_slope, float(np.abs(resid).max()))


def select_mode(slope: float, c_plus_cbar: float, alpha: float, rel_tol: float = 0.03) -> CoefficientMode | None:
    """Coefficient form matched by a fitted slope within ``rel_tol``, if unique."""
    hits = [
        mode
        for mode in CoefficientMode
        if abs(slope - log_coefficient(c_plus_cbar, alpha, mode)) <= rel_tol * log_coefficient(c_plus_cbar, alpha, mode)
    ]
    return hits[0] if len(hits) == 1 else None


DEFAULT_CALIBRATION_LENGTHS = (256, 362, 512, 724, 1024)


def commensurate_lengths(lengths: Sequence[int], k_f: float | None, max_denominator: int = 8) -> list[int]:
    """Drop lengths where ``2 k_F L`` is a multiple of ``2 pi`` for rational ``k_F / pi``."""
    if k_f is None or not (0.0 < k_f < math.pi):
        return list(lengths)
    from fractions import Fraction

    frac = Fraction(k_f / math.pi).limit_denominator(max_denominator)
    if abs(float(frac) - k_f / math.pi) > 1e-12:
        return list(lengths)
    return [L for L in lengths if (frac * L).denominator != 1]


def calibrate_s0(
    p: PhasePoint,
    alpha: float,
    L_list: Sequence[int] = DEFAULT_CALIBRATION_LENGTHS,
    *,
    engine=None,
    mode: CoefficientMode | str | None = None,
    corrections: bool = False,
) -> Calibration:
    """Fit numerically computed single-interval entropies against ``log2 L``.

    ``mode=None`` fits the slope freely.  Passing a coefficient mode (or
    ``"auto"``, which first runs the free fit and selects the matching mode)
    fixes the slope and returns the intercept, with the leading finite-size
    terms as nuisance regressors when ``corrections`` is set.
    """
    from .fse import EntropyEngine

    p.require_critical()
    _check_alpha(alpha)
    lengths = commensurate_lengths(sorted(set(int(L) for L in L_list)), p.k_fermi)
    if len(lengths) < 4 or max(lengths) < 256:
        raise FitIllConditioned(f"calibration needs >= 4 distinct lengths with max >= 256, got {lengths}")
    engine = engine or EntropyEngine(p)
    S = [engine.single(L, alpha) for L in lengths]
    free = fit_s0(lengths, S)
    if mode is None:
        return free
    if mode == "auto":
        mode = select_mode(free.slope, p.central_charge_sum, alpha)
        if mode is None:
            raise FitIllConditioned(f"slope {free.slope:.5f} matches neither coefficient form at alpha={alpha}")
    slope = log_coefficient(p.central_charge_sum, alpha, CoefficientMode(mode))
    return fit_s0(lengths, S, slope=slope, alpha=alpha, k_f=p.k_fermi, corrections=corrections)
