"""XY chain ground-state data: phase classification, dispersion and the
Majorana two-point function ``G(x)``.

``G(x)`` is the single momentum integral

    G(x) = 1/(2 pi) int_{-pi}^{pi} [gamma sin k sin kx - e_k cos kx] / eps_k dk,
    e_k = h - cos k,  eps_k = sqrt((cos k - h)^2 + gamma^2 sin^2 k),

from which every correlation matrix in this package is assembled.  Closed
forms are used on the lines where they are exact; everywhere else the integral
is folded onto ``[0, pi]`` (the integrand is even in k) and evaluated with
composite Gauss-Legendre panels split at the Fermi points and, for large
``|x|``, at the nodes of the trigonometric factor.
"""

from __future__ import annotations

import enum
import logging
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NonConformalPoint, NotGapped, QuadratureNotConverged

logger = logging.getLogger(__name__)


class Phase(enum.Enum):
    GAPLESS_FERMION = "gapless-fermion"
    GAPLESS_BOSON = "gapless-boson"
    KITAEV = "kitaev-point"
    NON_CONFORMAL = "non-conformal-gapless"
    GAPPED = "gapped"


@dataclass(frozen=True)
class PhasePoint:
    """Model parameters ``(gamma, h)`` of the XY chain."""

    gamma: float
    h: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and math.isfinite(self.h)):
            raise ValueError(f"non-finite phase point ({self.gamma}, {self.h})")
        # normalise -0.0 so equality and cache headers are stable
        object.__setattr__(self, "gamma", float(self.gamma) + 0.0)
        object.__setattr__(self, "h", float(self.h) + 0.0)

    @property
    def phase(self) -> Phase:
        g, h = self.gamma, self.h
        if g == 0.0 and abs(h) < 1.0:
            return Phase.GAPLESS_FERMION
        if g == 0.0 and abs(h) == 1.0:
            return Phase.NON_CONFORMAL
        if abs(h) == 1.0:
            return Phase.GAPLESS_BOSON
        if h == 0.0 and abs(g) == 1.0:
            return Phase.KITAEV
        return Phase.GAPPED

    @property
    def is_critical(self) -> bool:
        return self.phase in (Phase.GAPLESS_FERMION, Phase.GAPLESS_BOSON)

    @property
    def k_fermi(self) -> float | None:
        """Fermi momentum; ``pi`` by convention on the boson line."""
        phase = self.phase
        if phase is Phase.GAPLESS_FERMION:
            return math.acos(abs(self.h))
        if phase is Phase.GAPLESS_BOSON:
            return math.pi
        return None

    @property
    def central_charge_sum(self) -> float:
        """``c + cbar`` of the critical line the point sits on."""
        phase = self.phase
        if phase is Phase.GAPLESS_FERMION:
            return 2.0
        if phase is Phase.GAPLESS_BOSON:
            return 1.0
        raise NonConformalPoint(f"{self} is not on a conformal critical line ({phase.value})")

    def require_critical(self):
        if not self.is_critical:
            raise NonConformalPoint(f"{self} is not on a conformal critical line ({self.phase.value})")

    def __str__(self):
        return f"(gamma={self.gamma!r}, h={self.h!r})"


def dispersion(p: PhasePoint, k):
    """Excitation energy ``eps_k``; accepts scalars or arrays."""
    k = np.asarray(k, dtype=float)
    eps = np.sqrt((np.cos(k) - p.h) ** 2 + p.gamma**2 * np.sin(k) ** 2)
    return float(eps) if eps.ndim == 0 else eps


def decay_length(p: PhasePoint) -> float:
    """Correlation length ``|gamma| / (sqrt(2) min|h -+ 1|)`` of a gapped point.

    At the Kitaev points the formula gives ``1/sqrt(2)`` although ``G`` is
    nonzero only at a single separation there; the closed form takes
    precedence for anything computed from ``G``.
    """
    if p.phase not in (Phase.GAPPED, Phase.KITAEV):
        raise NotGapped(f"{p} is in the {p.phase.value} phase")
    return abs(p.gamma) / (math.sqrt(2.0) * min(abs(p.h - 1.0), abs(p.h + 1.0)))


@dataclass(frozen=True)
class QuadratureConfig:
    nodes: int = 16
    tol: float = 1e-12
    max_depth: int = 30
    base_panels: int = 1
    max_panels: int = 200_000


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _integrand(k, gamma, h, x):
    eps = np.sqrt((np.cos(k) - h) ** 2 + gamma * gamma * np.sin(k) ** 2)
    num = gamma * np.sin(k) * np.sin(k * x) - (h - np.cos(k)) * np.cos(k * x)
    return num / (math.pi * eps)


def _breakpoints(gamma, h, x, base_panels):
    points = [0.0, math.pi]
    if gamma == 0.0 and abs(h) < 1.0:
        points.append(math.acos(h))
    ax = abs(x)
    if ax > 4:
        points.extend(np.arange(1, ax) * (math.pi / ax))
    points = np.unique(np.asarray(points, dtype=float))
    if base_panels > 1:
        t = np.linspace(0.0, 1.0, base_panels + 1)[:-1]
        a, b = points[:-1], points[1:]
        points = np.unique(np.concatenate([(a[:, None] + (b - a)[:, None] * t).ravel(), [math.pi]]))
    return points


def integrate_g(gamma: float, h: float, x: int, config: QuadratureConfig = QuadratureConfig()) -> float:
    """Evaluate ``G(x)`` by adaptive composite Gauss-Legendre quadrature."""
    nodes, weights = _gauss_legendre(config.nodes)
    pts = _breakpoints(gamma, h, x, config.base_panels)
    a, b = pts[:-1], pts[1:]

    def panels(lo, hi):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        k = mid[:, None] + half[:, None] * nodes[None, :]
        return (_integrand(k, gamma, h, x) @ weights) * half

    pieces = []
    for _ in range(config.max_depth):
        mid = 0.5 * (a + b)
        whole = panels(a, b)
        halves = panels(a, mid) + panels(mid, b)
        ok = np.abs(whole - halves) <= config.tol * (b - a) / math.pi
        pieces.append(halves[ok])
        if ok.all():
            return float(math.fsum(np.concatenate(pieces)))
        a, b = np.concatenate([a[~ok], mid[~ok]]), np.concatenate([mid[~ok], b[~ok]])
        if a.size > config.max_panels:
            break
    raise QuadratureNotConverged(
        f"G({x}) at gamma={gamma}, h={h}: {a.size} panels still above tol {config.tol}"
    )


def closed_form_g(p: PhasePoint, x: int) -> float | None:
    """``G(x)`` on the lines with an exact closed form, else ``None``."""
    x = int(x)
    g, h = p.gamma, p.h
    if g == 0.0 and abs(h) <= 1.0:
        kf = math.acos(h)
        if x == 0:
            return (2.0 * kf - math.pi) / math.pi
        # the sin(pi x) term vanishes identically at integer x
        return 2.0 * math.sin(kf * x) / (math.pi * x)
    if g == 0.0:
        return -math.copysign(1.0, h) if x == 0 else 0.0
    if h == 0.0 and abs(g) == 1.0:
        return 1.0 if x == int(math.copysign(1, g)) else 0.0
    return None


def cache_header(p: PhasePoint, tol: float) -> str:
    return f"gamma={p.gamma!r} h={p.h!r} tol={tol!r}"


class Correlator:
    """Memoised ``G(x)`` for one phase point.

    Parameters
    ----------
    point : PhasePoint
    config : QuadratureConfig
    method : {"auto", "quadrature"}
        ``"auto"`` uses a closed form when the point lies exactly on a special
        line, ``"quadrature"`` always integrates.

    Reads are lock-free; insertions are serialised so concurrent sweeps can
    share one instance.
    """

    def __init__(self, point: PhasePoint, config: QuadratureConfig = QuadratureConfig(), method: str = "auto"):
        if method not in ("auto", "quadrature"):
            raise ValueError(f"unknown method {method!r}")
        self.point = point
        self.config = config
        self.method = method
        self._cache: dict[int, float] = {}
        self._lock = threading.Lock()

    @property
    def header(self) -> str:
        tag = "" if self.method == "auto" else " method=quadrature"
        return cache_header(self.point, self.config.tol) + tag

    def __len__(self):
        return len(self._cache)

    def _compute(self, x):
        if self.method == "auto":
            value = closed_form_g(self.point, x)
            if value is not None:
                return value
        return integrate_g(self.point.gamma, self.point.h, x, self.config)

    def __call__(self, x) -> float:
        x = int(x)
        try:
            return self._cache[x]
        except KeyError:
            pass
        value = self._compute(x)
        with self._lock:
            # first writer wins so every reader sees one value
            return self._cache.setdefault(x, value)

    def values(self, xs) -> np.ndarray:
        """Vector of ``G`` over an integer array (any shape)."""
        xs = np.asarray(xs, dtype=np.int64)
        uniq, inverse = np.unique(xs, return_inverse=True)
        table = np.fromiter((self(x) for x in uniq), dtype=float, count=uniq.size)
        return table[inverse].reshape(xs.shape)

    def warm(self, xmax: int):
        """Fill the cache for every separation in ``[-xmax, xmax]``."""
        for x in range(-xmax, xmax + 1):
            self(x)

    def snapshot(self) -> dict[int, float]:
        with self._lock:
            return dict(self._cache)

    def save(self, path):
        path = Path(path)
        items = sorted(self.snapshot().items())
        lines = [self.header] + [f"{x} {float(v)!r}" for x, v in items]
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text("\n".join(lines) + "\n")
        tmp.replace(path)

    def load(self, path) -> bool:
        """Merge a cache file; ignored unless its header matches exactly."""
        path = Path(path)
        if not path.exists():
            return False
        with path.open() as fh:
            header = fh.readline().rstrip("\n")
            if header != self.header:
                logger.warning("ignoring correlator cache %s: header %r != %r", path, header, self.header)
                return False
            loaded = {}
            for line in fh:
                if line.strip():
                    x, v = line.split()
                    loaded[int(x)] = float(v)
        with self._lock:
            for x, v in loaded.items():
                self._cache.setdefault(x, v)
        return True


def correlator_g(c: Correlator, x: int) -> float:
    return c(x)


def cache_filename(c: Correlator) -> str:
    p = c.point
    suffix = "" if c.method == "auto" else "_quad"
    return f"G_gamma{p.gamma!r}_h{p.h!r}_tol{c.config.tol!r}{suffix}.txt"


def ring_momenta(n: int) -> np.ndarray:
    return 2.0 * math.pi * (np.arange(n) + 0.5) / n


def ring_values(p: PhasePoint, n: int) -> np.ndarray:
    """``G_N(x)`` for ``x = -(N-1) .. N-1`` on an antiperiodic ring of ``N`` sites.

    Index ``x + N - 1`` of the returned array holds ``G_N(x)``.
    """
    if n < 2 or n % 2:
        raise ValueError(f"ring size must be even and >= 2, got {n}")
    k = ring_momenta(n)
    eps = dispersion(p, k)
    if np.any(eps == 0.0):
        raise ValueError(f"a ring momentum of N={n} sits on a gap closing of {p}")
    xs = np.arange(-(n - 1), n)
    kx = np.outer(xs, k)
    num = p.gamma * np.sin(k) * np.sin(kx) - (p.h - np.cos(k)) * np.cos(kx)
    return (num / eps).mean(axis=1)


def correlator_g_ring(c: Correlator, x: int, n: int) -> float:
    """Finite-ring analogue of ``G(x)`` with momenta ``2 pi (m + 1/2) / N``."""
    x = int(x)
    if not abs(x) < n:
        raise ValueError(f"|x| must be < N, got x={x}, N={n}")
    return float(ring_values(c.point, n)[x + n - 1])
