"""Restricted Majorana correlation matrix ``Gamma`` of an interval set.

Majoranas are interleaved per site, ``(a_{2l-1}, a_{2l})`` for ``l`` in the
site list, and the 2x2 block between sites ``i`` and ``j = i + x`` is
``[[0, G(x)], [-G(-x), 0]]``.  All odd-odd and even-even entries vanish, so
``Gamma`` is determined by the ``L_A x L_A`` block ``T[a, b] = G(s_b - s_a)``
and, in (odd..., even...) ordering, reads ``[[0, T], [-T^T, 0]]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .intervals import IntervalSet, Pattern, site_list
from .xy_model import Correlator


@dataclass(frozen=True, eq=False)
class CorrMatrix:
    sites: np.ndarray
    block: np.ndarray
    interval_set: IntervalSet | None = field(default=None)

    def __post_init__(self):
        self.sites.setflags(write=False)
        self.block.setflags(write=False)

    @property
    def n_sites(self) -> int:
        return int(self.sites.size)

    @property
    def size(self) -> int:
        return 2 * self.n_sites

    @property
    def gamma(self) -> np.ndarray:
        """Full ``2L x 2L`` real skew-symmetric matrix in interleaved ordering."""
        n = self.n_sites
        out = np.zeros((2 * n, 2 * n))
        out[0::2, 1::2] = self.block
        out[1::2, 0::2] = -self.block.T
        return out

    def dump(self, path, threshold: float = 0.0):
        """Write nonzero entries as ``i j value`` lines."""
        g = self.gamma
        rows, cols = np.nonzero(np.abs(g) > threshold)
        with Path(path).open("w") as fh:
            for i, j in zip(rows, cols):
                fh.write(f"{i} {j} {float(g[i, j])!r}\n")


def build(c: Correlator, a: IntervalSet | Pattern | np.ndarray) -> CorrMatrix:
    """Assemble ``Gamma`` over the sites of ``a`` from the shared correlator."""
    if isinstance(a, Pattern):
        a = a.interval_set()
    if isinstance(a, IntervalSet):
        sites, iset = site_list(a), a
    else:
        sites, iset = np.asarray(a, dtype=np.int64), None
        if sites.size == 0:
            raise ValueError("cannot build a correlation matrix over zero sites")
    seps = sites[None, :] - sites[:, None]
    return CorrMatrix(sites=sites.copy(), block=c.values(seps), interval_set=iset)


def build_from_table(sites: np.ndarray, table: np.ndarray, offset: int) -> CorrMatrix:
    """Assemble from a dense lookup ``table[x + offset] = G(x)`` (ring variant)."""
    sites = np.asarray(sites, dtype=np.int64)
    seps = sites[None, :] - sites[:, None]
    return CorrMatrix(sites=sites.copy(), block=table[seps + offset])


def as_hermitian(m: CorrMatrix, real: bool = False) -> np.ndarray:
    """``i Gamma`` as a complex Hermitian matrix.

    With ``real=True`` the equivalent real symmetric embedding
    ``[[0, -Gamma], [Gamma, 0]]`` of size ``4 L_A`` is returned instead; its
    spectrum is that of ``i Gamma`` with every eigenvalue doubled.
    """
    g = m.gamma
    if real:
        n = g.shape[0]
        out = np.zeros((2 * n, 2 * n))
        out[:n, n:] = -g
        out[n:, :n] = g
        return out
    return 1j * g
