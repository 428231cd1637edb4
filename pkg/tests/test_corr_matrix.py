import math

import numpy as np
import pytest

from xyfse.corr_matrix import as_hermitian, build, build_from_table
from xyfse.intervals import IntervalSet, Pattern
from xyfse.xy_model import Correlator, PhasePoint, ring_values


@pytest.fixture(scope="module")
def gapped():
    return Correlator(PhasePoint(0.4, 0.5))


def test_block_structure(gapped):
    m = build(gapped, Pattern.of(2, 1, 3))
    g = m.gamma
    assert np.array_equal(g.T, -g)
    sites = m.sites
    for a, i in enumerate(sites):
        for b, j in enumerate(sites):
            blk = g[2 * a : 2 * a + 2, 2 * b : 2 * b + 2]
            assert blk[0, 0] == 0.0 and blk[1, 1] == 0.0
            assert blk[0, 1] == gapped(j - i)
            assert blk[1, 0] == -gapped(i - j)


def test_translation_invariance(gapped):
    a = IntervalSet(((0, 3), (5, 2)))
    assert np.array_equal(build(gapped, a).gamma, build(gapped, a.translate(11)).gamma)


def test_principal_submatrix(gapped):
    full = build(gapped, IntervalSet(((0, 3), (5, 4))))
    part = build(gapped, IntervalSet(((5, 4),)))
    idx = np.concatenate([[2 * k, 2 * k + 1] for k in range(3, 7)])
    assert np.array_equal(full.gamma[np.ix_(idx, idx)], part.gamma)


def test_site_array_input(gapped):
    m = build(gapped, np.array([0, 2, 3]))
    assert m.interval_set is None
    assert m.n_sites == 3 and m.size == 6
    with pytest.raises(ValueError):
        build(gapped, np.array([], dtype=int))


def test_read_only(gapped):
    m = build(gapped, Pattern.of(3))
    with pytest.raises(ValueError):
        m.block[0, 0] = 1.0


def test_half_filled_single_site_is_zero():
    m = build(Correlator(PhasePoint(0.0, 0.0)), Pattern.of(1))
    assert np.array_equal(m.gamma, np.zeros((2, 2)))


def test_kitaev_interval_pairs_neighbouring_sites():
    # only the x = sign(gamma) bond survives; the quoted zero matrix does not hold
    g = build(Correlator(PhasePoint(1.0, 0.0)), Pattern.of(3)).gamma
    expected = np.zeros((6, 6))
    for a in range(2):
        expected[2 * a, 2 * (a + 1) + 1] = 1.0
        expected[2 * (a + 1) + 1, 2 * a] = -1.0
    assert np.array_equal(g, expected)


def test_polarised_insulator_is_pure():
    g = build(Correlator(PhasePoint(0.0, 3.0)), Pattern.of(1, 2, 2)).gamma
    assert np.allclose(np.abs(np.linalg.eigvals(1j * g)), 1.0)


def test_hermitian_views(gapped):
    m = build(gapped, Pattern.of(2, 1, 2))
    herm = as_hermitian(m)
    assert np.allclose(herm, herm.conj().T)
    ev = np.linalg.eigvalsh(herm)
    assert np.allclose(ev, -ev[::-1], atol=1e-12)
    assert np.all(np.abs(ev) <= 1 + 1e-9)
    real = as_hermitian(m, real=True)
    assert np.allclose(real, real.T)
    ev_real = np.linalg.eigvalsh(real)
    assert np.allclose(ev_real, np.sort(np.repeat(ev, 2)), atol=1e-12)


def test_two_by_two_spectrum():
    m = build_from_table(np.array([0]), np.array([0.7]), 0)
    assert np.allclose(np.sort(np.linalg.eigvalsh(as_hermitian(m))), [-0.7, 0.7])


def test_xx_two_sites_symmetric():
    m = build(Correlator(PhasePoint(0.0, 0.5)), Pattern.of(2))
    ev = np.linalg.eigvalsh(as_hermitian(m))
    assert np.allclose(ev, -ev[::-1], atol=1e-14)


def test_ring_table_build():
    n = 8
    p = PhasePoint(0.4, 0.5)
    table = ring_values(p, n)
    m = build_from_table(np.arange(3), table, n - 1)
    assert m.block[0, 2] == table[2 + n - 1]


def test_dump(tmp_path, gapped):
    m = build(gapped, Pattern.of(2))
    path = tmp_path / "gamma.txt"
    m.dump(path)
    rows = [line.split() for line in path.read_text().splitlines()]
    assert len(rows) == np.count_nonzero(m.gamma)
    i, j, v = rows[0]
    assert float(v) == m.gamma[int(i), int(j)]
