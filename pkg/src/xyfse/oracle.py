"""Brute-force validators for small chains.

Two routes independent of the correlator integral:

* many-body exact diagonalization of the Jordan-Wigner fermion Hamiltonian
  ``H = -sum_i b_i (c_i^+ c_{i+1} - gamma c_i^+ c_{i+1}^+ + h.c.) - h sum_i (1 - 2 n_i)``
  with ``b_i = 1`` in the bulk and ``b = +-1`` or ``0`` on the wrap-around bond,
* the single-particle projector ``C_ij = <c_i^+ c_j>`` on the XX line.

On an antiperiodic ring the ED ground state reproduces ``ring_values``
exactly.  Basis states are bit strings; bit ``i`` is the occupation of mode ``i``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.special import xlogy

from .errors import Degenerate
from .xy_model import PhasePoint

MAX_SITES = 14
DENSE_LIMIT = 1024
DEGENERACY_TOL = 1e-8
# occupations within this of 0 or 1 are roundoff; alpha < 1 would amplify them
OCCUPATION_FLOOR = 1e-13
LN2 = math.log(2.0)


class Boundary(str, enum.Enum):
    OPEN = "open"
    PERIODIC = "periodic"  # spin ring; fermion sign follows the parity sector
    ANTIPERIODIC = "antiperiodic"  # fermion ring with momenta 2 pi (m + 1/2) / N


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    count = np.zeros_like(a)
    while np.any(a):
        count += a & 1
        a >>= 1
    return count


def _apply(states: np.ndarray, ops: Sequence[tuple[int, bool]]):
    """Apply ``ops`` (rightmost first) of ``(site, dagger)`` to basis states.

    Returns ``(new_states, signs, valid)``.
    """
    s = states.copy()
    sign = np.ones(s.size)
    valid = np.ones(s.size, dtype=bool)
    for site, dagger in reversed(ops):
        bit = np.int64(1) << site
        occ = (s & bit) != 0
        valid &= ~occ if dagger else occ
        sign *= np.where(_popcount(s & (bit - 1)) % 2, -1.0, 1.0)
        s = s ^ bit
    return s, sign, valid


def _parity(states):
    return _popcount(states) % 2


def hamiltonian(p: PhasePoint, n: int, wrap: float, parity: int | None = None):
    """Sparse fermion Hamiltonian and its basis, optionally in one parity sector.

    ``wrap`` multiplies the bond between sites ``n-1`` and ``0`` (0 for an open chain).
    """
    full = np.arange(1 << n, dtype=np.int64)
    basis = full if parity is None else full[_parity(full) == parity]
    index = np.full(1 << n, -1, dtype=np.int64)
    index[basis] = np.arange(basis.size)
    rows, cols, vals = [], [], []

    def add(ops, coef):
        if coef == 0.0:
            return
        new, sign, ok = _apply(basis, ops)
        rows.append(index[new[ok]])
        cols.append(np.flatnonzero(ok))
        vals.append(coef * sign[ok])

    bonds = [(i, i + 1, 1.0) for i in range(n - 1)]
    if wrap != 0.0 and n > 2:
        bonds.append((n - 1, 0, wrap))
    for i, j, b in bonds:
        add([(i, True), (j, False)], -b)
        add([(j, True), (i, False)], -b)
        add([(i, True), (j, True)], b * p.gamma)
        add([(j, False), (i, False)], b * p.gamma)
    occ = _popcount(basis)
    rows.append(np.arange(basis.size))
    cols.append(np.arange(basis.size))
    vals.append(-p.h * (n - 2.0 * occ))
    dim = basis.size
    h = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    ).tocsr()
    h.sum_duplicates()
    return h, basis


def _lowest(h, k=2):
    dim = h.shape[0]
    if dim <= DENSE_LIMIT:
        w, v = scipy.linalg.eigh(h.toarray(), subset_by_index=[0, min(k, dim) - 1])
        return w, v
    w, v = scipy.sparse.linalg.eigsh(h, k=k, which="SA", tol=1e-13, v0=np.ones(dim) / math.sqrt(dim))
    order = np.argsort(w)
    return w[order], v[:, order]


@dataclass(frozen=True, eq=False)
class DenseGroundState:
    n_sites: int
    state: np.ndarray
    energy: float
    boundary: Boundary
    parity: int
    gap: float


def _embed(vec, basis, n):
    out = np.zeros(1 << n)
    out[basis] = vec
    return out


def ed_ground_state(p: PhasePoint, n: int, boundary: Boundary | str = Boundary.OPEN) -> DenseGroundState:
    """Ground state of the fermion chain by exact diagonalization per parity sector.

    ``periodic`` is the spin ring: the even sector carries an antiperiodic
    fermion bond and the odd sector a periodic one; the sector holding the
    global minimum is returned (``parity`` records which).  Raises
    :class:`Degenerate` when the two lowest levels over all sectors differ by
    less than ``1e-8``.
    """
    boundary = Boundary(boundary)
    if not 2 <= n <= MAX_SITES:
        raise ValueError(f"ED needs 2 <= n <= {MAX_SITES}, got {n}")
    wraps = {
        Boundary.OPEN: {0: 0.0, 1: 0.0},
        Boundary.ANTIPERIODIC: {0: -1.0, 1: -1.0},
        Boundary.PERIODIC: {0: -1.0, 1: 1.0},
    }[boundary]
    levels = []
    for parity in (0, 1):
        h, basis = hamiltonian(p, n, wraps[parity], parity)
        w, v = _lowest(h)
        for e, vec in zip(w, v.T):
            levels.append((float(e), parity, _embed(vec, basis, n)))
    levels.sort(key=lambda t: t[0])
    gap = levels[1][0] - levels[0][0]
    states = [DenseGroundState(n, s / np.linalg.norm(s), e, boundary, par, gap) for e, par, s in levels[:2]]
    if gap < DEGENERACY_TOL:
        raise Degenerate(f"ground space of {p} on {n} sites ({boundary.value}) is degenerate, gap {gap:.3e}", states)
    return states[0]


def bdg_ground_energy(p: PhasePoint, n: int, wrap: float) -> float:
    """Ground energy from the single-particle Bogoliubov-de Gennes matrix.

    ``H = c^+ A c + (c^+ B c^+ + h.c.) / 2 - h n`` gives
    ``E0 = tr(A)/2 - sum(E_l)/2 - h n`` over the positive BdG energies ``E_l``.
    Valid when the BdG vacuum lies in the sector the boundary refers to.
    """
    a = np.zeros((n, n))
    b = np.zeros((n, n))
    bonds = [(i, i + 1, 1.0) for i in range(n - 1)]
    if wrap != 0.0 and n > 2:
        bonds.append((n - 1, 0, wrap))
    for i, j, w in bonds:
        a[i, j] -= w
        a[j, i] -= w
        b[i, j] += w * p.gamma
        b[j, i] -= w * p.gamma
    a[np.diag_indices(n)] = 2.0 * p.h
    bdg = np.block([[a, b], [-b, -a]])
    e = np.linalg.eigvalsh(bdg)
    return float(0.5 * np.trace(a) - 0.5 * np.sum(e[e > 0]) - p.h * n)


def _renyi_probs(probs: np.ndarray, alpha: float) -> float:
    probs = probs[probs > 0]
    if math.isinf(alpha):
        return float(-math.log2(probs.max()))
    if abs(alpha - 1.0) <= 1e-9:
        return float(-np.sum(xlogy(probs, probs)) / LN2)
    return float(math.log2(np.sum(probs**alpha)) / (1.0 - alpha))


def _binary_renyi(z: np.ndarray, alpha: float) -> float:
    z = np.clip(z, 0.0, 1.0)
    z = np.where(z < OCCUPATION_FLOOR, 0.0, np.where(z > 1.0 - OCCUPATION_FLOOR, 1.0, z))
    return float(sum(_renyi_probs(np.array([v, 1.0 - v]), alpha) for v in z))


def reduced_spectrum(g: DenseGroundState, sites: Sequence[int]) -> np.ndarray:
    """Eigenvalues of the fermionic reduced density matrix of ``sites``.

    Modes are reordered as (``sites``, complement) before the bipartition,
    which attaches ``(-1)^{#(i in complement, j in sites, i < j, both occupied)}``
    to each basis state.
    """
    n = g.n_sites
    a = sorted(set(int(s) for s in sites))
    if any(not 0 <= s < n for s in a):
        raise ValueError(f"sites {a} outside a chain of {n}")
    if len(a) in (0, n):
        return np.array([1.0])
    comp = [s for s in range(n) if s not in a]
    states = np.arange(1 << n, dtype=np.int64)
    occ = [((states >> s) & 1).astype(np.int64) for s in range(n)]
    crossings = np.zeros(states.size, dtype=np.int64)
    for j in a:
        below = sum((occ[i] for i in comp if i < j), np.zeros_like(states))
        crossings += occ[j] * below
    a_idx = sum((occ[s] << k for k, s in enumerate(a)), np.zeros_like(states))
    b_idx = sum((occ[s] << k for k, s in enumerate(comp)), np.zeros_like(states))
    m = np.zeros((1 << len(a), 1 << len(comp)), dtype=g.state.dtype)
    m[a_idx, b_idx] = g.state * np.where(crossings % 2, -1.0, 1.0)
    sv = scipy.linalg.svd(m, compute_uv=False)
    return sv**2


def ed_rdm_entropy(g: DenseGroundState, sites: Sequence[int], alpha: float) -> float:
    """Renyi entropy (bits) of the fermionic reduced state on ``sites``."""
    return _renyi_probs(reduced_spectrum(g, sites), alpha)


def ed_majorana_gamma(g: DenseGroundState) -> np.ndarray:
    """``Gamma_mn = -i (<a_m a_n> - delta_mn)`` with ``a_{2l} = c + c^+``, ``a_{2l+1} = i (c - c^+)``."""
    n = g.n_sites
    states = np.arange(1 << n, dtype=np.int64)
    psi = g.state

    def act(site, dagger, vec):
        new, sign, ok = _apply(states, [(site, dagger)])
        out = np.zeros(vec.size, dtype=complex)
        out[new[ok]] = sign[ok] * vec[ok]
        return out

    def majorana(m, vec):
        site = m // 2
        lo, hi = act(site, False, vec), act(site, True, vec)
        return lo + hi if m % 2 == 0 else 1j * (lo - hi)

    applied = [majorana(m, psi.astype(complex)) for m in range(2 * n)]
    gram = np.array([[np.vdot(applied[a], applied[b]) for b in range(2 * n)] for a in range(2 * n)])
    # Majoranas are Hermitian, so <a_a a_b> = (a_a psi)^+ (a_b psi)
    return np.real(-1j * (gram - np.eye(2 * n)))


def xx_projector(h: float, n: int, boundary: Boundary | str = Boundary.ANTIPERIODIC) -> np.ndarray:
    """``C_ij = <c_i^+ c_j>`` of the filled negative-energy orbitals on the XX line."""
    boundary = Boundary(boundary)
    wrap = {Boundary.OPEN: 0.0, Boundary.ANTIPERIODIC: -1.0, Boundary.PERIODIC: 1.0}[boundary]
    t = np.zeros((n, n))
    for i in range(n - 1):
        t[i, i + 1] = t[i + 1, i] = -1.0
    if wrap != 0.0 and n > 2:
        t[n - 1, 0] = t[0, n - 1] = -wrap
    t[np.diag_indices(n)] = 2.0 * h
    e, v = np.linalg.eigh(t)
    occ = v[:, e < 0]
    return occ @ occ.T


def xx_mode_entropy(h: float, sites: Sequence[int], n: int, alpha: float, boundary=Boundary.ANTIPERIODIC) -> float:
    """Renyi entropy (bits) on the XX line from the restricted projector."""
    c = xx_projector(h, n, boundary)
    idx = np.asarray(sorted(set(int(s) for s in sites)), dtype=int)
    if idx.size == 0:
        return 0.0
    zeta = np.linalg.eigvalsh(c[np.ix_(idx, idx)])
    return _binary_renyi(zeta, alpha)
