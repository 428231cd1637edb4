"""Finite-size effects of Renyi entropies and their scaling under dilation.

Three FSE families are computed:

* ``single``     S(L) minus the CFT reference of one interval,
* ``extrinsic``  joint entropy of a disjoint pattern minus the signed sum of its
                 contiguous constituents (everything numerical),
* ``intrinsic``  joint entropy minus the CFT multi-interval reference.

They obey ``intrinsic = sum(sign * single) + extrinsic`` exactly.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cft import CftParams, cft_multi_interval, cft_single_interval
from .corr_matrix import build
from .entropy import nu_spectrum, renyi_from_pairs
from .errors import AllPointsNearZeroCrossing, MalformedInput, PatternTooSmall, TooFewPoints, UncalibratedS0
from .intervals import IntervalSet, Pattern, PatternFamily, constituents
from .xy_model import Correlator, PhasePoint

CSV_COLUMNS = ("pattern", "lambda", "alpha", "kind", "delta_bits", "sign")
ALPHA_EXCLUSION = (0.8, 1.25)


class Kind(str, enum.Enum):
    SINGLE = "single"
    EXTRINSIC = "extrinsic"
    INTRINSIC = "intrinsic"


class EntropyEngine:
    """Shared correlator plus a cache of ``nu`` pair spectra per interval set.

    Spectra are keyed by the translation-canonical block tuple, so every
    Renyi index reuses one eigensolve.  Safe to share between threads.
    """

    def __init__(self, point: PhasePoint, correlator: Correlator | None = None):
        self.point = point
        self.correlator = correlator or Correlator(point)
        self._spectra: dict[tuple, np.ndarray] = {}
        self._lock = threading.Lock()

    @staticmethod
    def _key(iset: IntervalSet):
        first = iset.blocks[0][0]
        return tuple((o - first, n) for o, n in iset.blocks)

    def pairs(self, a: IntervalSet | Pattern) -> np.ndarray:
        iset = a.interval_set() if isinstance(a, Pattern) else a
        key = self._key(iset)
        cached = self._spectra.get(key)
        if cached is not None:
            return cached
        pairs = nu_spectrum(build(self.correlator, iset.translate(-iset.blocks[0][0]))).pairs
        with self._lock:
            return self._spectra.setdefault(key, pairs)

    def entropy(self, a: IntervalSet | Pattern, alpha: float) -> float:
        return renyi_from_pairs(self.pairs(a), alpha)

    def single(self, L: int, alpha: float) -> float:
        return self.entropy(IntervalSet(((0, int(L)),)), alpha)


@dataclass(frozen=True)
class FseRecord:
    pattern: Pattern
    lam: int
    alpha: float
    kind: Kind
    delta_bits: float
    sign: int
    label: str = ""

    def __post_init__(self):
        if not math.isfinite(self.delta_bits):
            raise ValueError(f"non-finite FSE {self.delta_bits!r}")
        if self.kind is Kind.SINGLE and self.pattern.n_blocks != 1:
            raise ValueError("single-interval records need a one-block pattern")
        if not self.label:
            object.__setattr__(self, "label", str(self.pattern))

    def row(self) -> dict:
        return {
            "pattern": self.label,
            "lambda": self.lam,
            "alpha": repr(float(self.alpha)),
            "kind": self.kind.value,
            "delta_bits": repr(float(self.delta_bits)),
            "sign": self.sign,
        }


def _sign(v: float) -> int:
    return int(np.sign(v))


def _require_s0(cft: CftParams | None):
    if cft is None or cft.s0 is None:
        raise UncalibratedS0("s0 must be calibrated before CFT-referenced FSEs are computed")


def delta_single(p: PhasePoint, L: int, alpha: float, cft: CftParams, engine: EntropyEngine | None = None) -> FseRecord:
    _require_s0(cft)
    p.require_critical()
    engine = engine or EntropyEngine(p)
    delta = engine.single(L, alpha) - cft_single_interval(cft, L, alpha)
    return FseRecord(Pattern((int(L),)), 1, alpha, Kind.SINGLE, delta, _sign(delta))


def _extrinsic_value(engine, a, alpha):
    joint = engine.entropy(a, alpha)
    parts = math.fsum(t.sign * engine.single(t.length, alpha) for t in constituents(a))
    return joint - parts


def delta_extrinsic(p: PhasePoint, a: Pattern, alpha: float, engine: EntropyEngine | None = None) -> FseRecord:
    if a.n_blocks < 2:
        raise PatternTooSmall(f"extrinsic FSE needs >= 2 blocks, got pattern {a}")
    engine = engine or EntropyEngine(p)
    delta = _extrinsic_value(engine, a, alpha)
    return FseRecord(a, 1, alpha, Kind.EXTRINSIC, delta, _sign(delta))


def delta_intrinsic(p: PhasePoint, a: Pattern, alpha: float, cft: CftParams, engine: EntropyEngine | None = None) -> FseRecord:
    _require_s0(cft)
    p.require_critical()
    engine = engine or EntropyEngine(p)
    delta = engine.entropy(a, alpha) - cft_multi_interval(cft, a, alpha)
    return FseRecord(a, 1, alpha, Kind.INTRINSIC, delta, _sign(delta))


def single_pattern(a: Pattern) -> Pattern:
    """The one-interval pattern used for ``single`` records of ``a``: its full span."""
    return Pattern((a.span,))


def evaluate(p: PhasePoint, a: Pattern, alpha: float, kind: Kind | str, cft: CftParams | None, engine: EntropyEngine) -> float:
    kind = Kind(kind)
    if kind is Kind.SINGLE:
        return delta_single(p, single_pattern(a).span, alpha, cft, engine).delta_bits
    if kind is Kind.EXTRINSIC:
        return delta_extrinsic(p, a, alpha, engine).delta_bits
    return delta_intrinsic(p, a, alpha, cft, engine).delta_bits


def _family(a) -> PatternFamily:
    if isinstance(a, PatternFamily):
        return a
    if isinstance(a, Pattern):
        return PatternFamily.from_pattern(a)
    return PatternFamily.parse(str(a))


def dilation_sweep(
    p: PhasePoint,
    a: Pattern | PatternFamily | str,
    alpha: float,
    kind: Kind | str,
    lambdas: Sequence[int],
    *,
    cft: CftParams | None = None,
    engine: EntropyEngine | None = None,
    threads: int = 1,
    manifest: str | Path | None = None,
) -> list[FseRecord]:
    """FSE records of one pattern family over ``lambdas``, sorted by ``lambda``.

    A :class:`Pattern` is dilated uniformly; a :class:`PatternFamily` with
    ``*`` entries gives the non-uniform variant.  Evaluation order does not
    affect the output.
    """
    kind = Kind(kind)
    lambdas = [int(v) for v in lambdas]
    if len(lambdas) < 6:
        raise TooFewPoints(f"a sweep needs >= 6 dilation factors, got {len(lambdas)}")
    if lambdas != sorted(set(lambdas)):
        raise ValueError("dilation factors must be strictly ascending")
    family = _family(a)
    engine = engine or EntropyEngine(p)
    label = str(family)

    def one(lam):
        pat = family.at(lam)
        delta = evaluate(p, pat, alpha, kind, cft, engine)
        shown = single_pattern(pat) if kind is Kind.SINGLE else pat
        return FseRecord(shown, lam, alpha, kind, delta, _sign(delta), label)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(one, lambdas))
    else:
        records = [one(lam) for lam in lambdas]
    records.sort(key=lambda r: r.lam)
    if manifest is not None:
        write_manifest(manifest, run_manifest(p, label, kind, [alpha], lambdas, {alpha: cft}, engine.correlator))
    return records


@dataclass(frozen=True)
class ScalingFit:
    eta: float
    amplitude: float
    r_squared: float
    used_points: list[int]
    oscillation_period: float | None = None

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "amplitude": self.amplitude,
            "r_squared": self.r_squared,
            "used_points": list(self.used_points),
            "oscillation_period": self.oscillation_period,
        }


def _upper_hull(x, y):
    # monotone-chain upper hull; x strictly increasing
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (x[i1] - x[i0]) * (y[i] - y[i0]) - (y[i1] - y[i0]) * (x[i] - x[i0])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def envelope_points(lams: np.ndarray, mags: np.ndarray, tolerance: float = 0.2) -> np.ndarray:
    """Indices of local maxima of ``mags`` lying within ``tolerance`` of the upper envelope.

    The envelope is the upper convex hull, in log-log, of the interior local
    maxima (points not below either neighbour).  End points cannot be
    confirmed as extrema, so they only join if they lie within ``tolerance``
    of the hull extrapolated linearly from its nearest segment.
    """
    n = mags.size
    inner = [i for i in range(1, n - 1) if mags[i] >= mags[i - 1] and mags[i] >= mags[i + 1]]
    if not inner:
        return np.zeros(0, dtype=int)
    x, y = np.log(lams), np.log(mags)
    xi, yi = x[inner], y[inner]
    hull = _upper_hull(xi, yi)
    hx, hy = xi[hull], yi[hull]

    def envelope(v):
        if hx.size == 1:
            return np.full_like(v, hy[0])
        lo = (v - hx[0]) * (hy[1] - hy[0]) / (hx[1] - hx[0]) + hy[0]
        hi = (v - hx[-1]) * (hy[-1] - hy[-2]) / (hx[-1] - hx[-2]) + hy[-1]
        return np.where(v < hx[0], lo, np.where(v > hx[-1], hi, np.interp(v, hx, hy)))

    cand = list(inner)
    if n > 1 and mags[0] >= mags[1]:
        cand.insert(0, 0)
    if n > 1 and mags[-1] >= mags[-2]:
        cand.append(n - 1)
    cand = np.asarray(cand)
    keep = y[cand] >= envelope(x[cand]) + math.log(1.0 - tolerance)
    return cand[keep]


def fit_eta(
    records: Iterable[FseRecord],
    k_f: float | None = None,
    *,
    min_lambda: int = 1,
    envelope_tolerance: float = 0.2,
) -> ScalingFit:
    """Fit ``|Delta| = amplitude * lambda^-eta`` by least squares in log-log.

    If ``k_f`` is given and the signs of the records change, only envelope
    points (see :func:`envelope_points`) enter the fit.
    """
    recs = sorted(
        (r for r in records if r.lam >= min_lambda and r.delta_bits != 0.0),
        key=lambda r: r.lam,
    )
    if len(recs) < 4:
        raise TooFewPoints(f"need >= 4 nonzero records with lambda >= {min_lambda}, got {len(recs)}")
    lams = np.array([r.lam for r in recs], dtype=float)
    mags = np.array([abs(r.delta_bits) for r in recs])
    signs = np.array([r.sign for r in recs])
    oscillating = k_f is not None and bool(np.any(signs[1:] != signs[:-1]))
    if oscillating:
        idx = envelope_points(lams, mags, envelope_tolerance)
        if idx.size < 4:
            raise AllPointsNearZeroCrossing(f"only {idx.size} envelope points among {len(recs)} records")
    else:
        idx = np.arange(len(recs))
    x, y = np.log(lams[idx]), np.log(mags[idx])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    period = math.pi / k_f if oscillating else None
    return ScalingFit(float(-slope), float(math.exp(intercept)), r2, [int(v) for v in lams[idx]], period)


def expected_eta(alpha: float) -> float:
    return min(2.0, 2.0 / alpha)


def in_exclusion_window(alpha: float, window=ALPHA_EXCLUSION) -> bool:
    return window[0] < alpha < window[1]


@dataclass(frozen=True)
class BoundReport:
    b_values: dict[int, float]
    max_violation_ratio: float
    passed: bool
    skipped: bool = False
    reason: str = ""


def scaling_bound_check(
    base: FseRecord,
    dilated: Sequence[FseRecord],
    eta: float,
    slack: float = 0.15,
    window=ALPHA_EXCLUSION,
) -> BoundReport:
    """Check ``|Delta(lambda A)| <= |Delta(A)| lambda^-eta (1 + slack)``.

    ``b_values`` maps each ``lambda`` to ``B = Delta(lambda A) / (Delta(A) lambda^-eta)``;
    ``max_violation_ratio`` is the largest ``|B|``.
    """
    if in_exclusion_window(base.alpha, window):
        return BoundReport({}, float("nan"), True, True, f"alpha={base.alpha} inside cancellation window {window}")
    if base.delta_bits == 0.0:
        return BoundReport({}, float("inf"), False, False, "base record has zero FSE")
    b = {r.lam: r.delta_bits / (base.delta_bits * r.lam**-eta) for r in sorted(dilated, key=lambda r: r.lam)}
    worst = max((abs(v) for v in b.values()), default=0.0)
    return BoundReport(b, worst, worst <= 1.0 + slack)


def records_to_csv(records: Iterable[FseRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(r.row())
    return buf.getvalue()


def write_records_csv(path, records: Iterable[FseRecord], append: bool = False):
    path = Path(path)
    text = records_to_csv(records)
    if append and path.exists() and path.stat().st_size:
        text = text.split("\n", 1)[1]
        with path.open("a") as fh:
            fh.write(text)
    else:
        path.write_text(text)


def read_records_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
            raise MalformedInput(f"{path}: expected columns {','.join(CSV_COLUMNS)}, got {reader.fieldnames}")
        return list(reader)


def header_hash(header: str) -> str:
    """Git blob hash of a correlator cache header."""
    data = header.encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def run_manifest(p, pattern, kind, alphas, lambdas, cft_params: dict, correlator: Correlator) -> dict:
    return {
        "phase_point": {"gamma": p.gamma, "h": p.h},
        "pattern": str(pattern),
        "kind": Kind(kind).value,
        "alpha_list": [float(a) for a in alphas],
        "lambda_list": [int(v) for v in lambdas],
        "cft_params": {repr(float(a)): (None if c is None else c.to_dict()) for a, c in cft_params.items()},
        "correlator_header_hash": header_hash(correlator.header),
    }


def write_manifest(path, manifest: dict):
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
