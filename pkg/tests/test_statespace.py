import numpy as np
import pytest

from affine_kit import (Canonical, FiniteChain, Interval, SymPSD,
                        space_from_dict, sym_to_flat)


def test_canonical_contains_and_project():
    sp = Canonical(m=1, n=2)
    assert sp.dim == 2
    assert sp.contains([1.0, -5.0])
    assert sp.contains([0.0, 0.0])
    assert not sp.contains([-1e-6, 0.0])
    assert np.allclose(sp.project(np.array([-1.0, 3.0])), [0.0, 3.0])


def test_canonical_in_U():
    sp = Canonical(m=1, n=2)
    assert sp.in_U([-1.0 + 2.0j, 5.0j])       # cone part <= 0, free part imaginary
    assert not sp.in_U([0.1 + 0.0j, 0.0j])    # positive on the cone
    assert not sp.in_U([-1.0 + 0.0j, 0.1])    # real part on a free coordinate
    # pure diffusion space (m=0): only purely imaginary u is admissible
    bm = Canonical(m=0, n=1)
    assert bm.in_U([2.0j])
    assert not bm.in_U([1.0 + 0.0j])
    assert Canonical(m=1, n=1).in_U([-3.0 + 0.0j])


def test_canonical_sup_re_inner():
    sp = Canonical(m=1, n=2)
    assert sp.sup_re_inner([-1.0, 0.0]) == 0.0
    assert np.isinf(sp.sup_re_inner([0.5, 0.0]))
    assert np.isinf(sp.sup_re_inner([-1.0, 0.5]))


def test_canonical_bad_params():
    with pytest.raises(ValueError):
        Canonical(m=2, n=1)
    with pytest.raises(ValueError):
        Canonical(m=0, n=0)


def test_sympsd_membership():
    sp = SymPSD(d=2)
    assert sp.dim == 3
    assert sp.contains(sym_to_flat(np.eye(2)))
    assert not sp.contains(sym_to_flat(np.diag([1.0, -0.1])))
    proj = sp.mat(sp.project(sym_to_flat(np.diag([1.0, -1.0]))))
    assert np.allclose(proj, np.diag([1.0, 0.0]), atol=1e-12)


def test_sympsd_in_U():
    sp = SymPSD(d=2)
    assert sp.in_U(sym_to_flat(-np.eye(2)).astype(complex))
    assert sp.in_U(sym_to_flat(1j * np.eye(2)))          # Re u = 0 boundary
    assert not sp.in_U(sym_to_flat(0.5 * np.eye(2)).astype(complex))
    assert sp.sup_re_inner(sym_to_flat(-np.eye(2))) == 0.0
    assert np.isinf(sp.sup_re_inner(sym_to_flat(np.diag([1.0, -1.0]))))


def test_interval_basics():
    sp = Interval(r1=0.0, r2=2.0)
    assert sp.contains([1.5])
    assert not sp.contains([2.1])
    assert np.allclose(sp.project(np.array([7.0])), [2.0])
    assert sp.in_U([3.0 + 4.0j])  # compact: every u admissible
    assert sp.sup_re_inner([1.0]) == 2.0
    assert sp.sup_re_inner([-1.0]) == 0.0
    with pytest.raises(ValueError):
        Interval(r1=1.0, r2=1.0)


def test_finitechain_basics():
    sp = FiniteChain(k=2)
    assert sp.contains([1.0])
    assert not sp.contains([1.5])
    assert not sp.contains([3.0])
    assert np.allclose(sp.project(np.array([1.4])), [1.0])
    assert np.allclose(sp.project(np.array([7.0])), [2.0])
    assert np.allclose(sp.project(np.array([-3.0])), [0.0])
    assert sp.in_U([10.0 + 0.0j])
    assert sp.sup_re_inner([1.0]) == 2.0
    assert sp.sup_re_inner([-1.0]) == 0.0
    with pytest.raises(ValueError):
        FiniteChain(k=0)


@pytest.mark.parametrize("sp", [Canonical(m=1, n=2), SymPSD(d=2),
                                Interval(r1=0.0, r2=2.0), FiniteChain(k=3)])
def test_affine_basis_points(sp):
    pts = sp.affine_basis_points()
    assert len(pts) >= sp.dim + 1
    assert all(sp.contains(p, tol=1e-9) for p in pts)
    lifted = np.array([np.concatenate(([1.0], p)) for p in pts])
    assert np.linalg.matrix_rank(lifted, tol=1e-9) == sp.dim + 1


@pytest.mark.parametrize("sp", [Canonical(m=1, n=3), SymPSD(d=3),
                                Interval(r1=-1.0, r2=1.0), FiniteChain(k=5)])
def test_serialization_round_trip(sp):
    again = space_from_dict(sp.to_dict())
    assert again == sp
    assert again.to_dict() == sp.to_dict()


def test_space_from_dict_unknown_kind():
    with pytest.raises(ValueError):
        space_from_dict({"kind": "Torus", "n": 2})


def test_dimension_mismatch():
    sp = Canonical(m=0, n=2)
    with pytest.raises(ValueError):
        sp.contains([1.0])
    with pytest.raises(ValueError):
        sp.in_U([1.0j, 2.0j, 3.0j])
