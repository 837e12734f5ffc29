from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collapse_spectra import exact, nilce
from collapse_spectra.complexes import check_complex, cohomology_dims, spectrum

import _models


def test_abelian_complex():
    ce = nilce.ce_complex(nilce.abelian(3))
    assert ce.complex.dims == (1, 3, 3, 1)
    assert all(not any(v != 0 for v in d.flat) for d in ce.complex.differentials)


def test_heisenberg_differential_and_cohomology():
    ce = nilce.ce_complex(nilce.heisenberg())
    d1 = ce.complex.d(1)
    # column of e^3 in Lambda^1 maps to -e^1 ^ e^2 (first basis element of Lambda^2)
    assert list(d1[:, 2]) == [Fraction(-1), 0, 0]
    assert check_complex(ce.complex)
    assert cohomology_dims(ce.complex) == [1, 2, 2, 1]


def test_heisenberg_laplacian_by_hand():
    # Delta_1 = d^T d on Lambda^1 with d e3 = -e12: diag(0, 0, 1); Delta_2 = d d^T: diag(1, 0, 0)
    ce = nilce.ce_complex(nilce.heisenberg())
    assert spectrum(ce.complex, 1).as_pairs() == [(0.0, 2), (1.0, 1)]
    assert spectrum(ce.complex, 2).as_pairs() == [(0.0, 2), (1.0, 1)]


def test_jacobi_and_nilpotency_are_checked():
    with pytest.raises(nilce.LieAlgebraError):
        # so(3)-like brackets: Jacobi holds but not nilpotent
        nilce.NilLieAlgebra.from_brackets(3, {(0, 1): {2: 1}, (1, 2): {0: 1}, (2, 0): {1: 1}})
    with pytest.raises(nilce.LieAlgebraError):
        # [e1,e2]=e3, [e1,e3]=e1 breaks nilpotency
        nilce.NilLieAlgebra.from_brackets(3, {(0, 1): {2: 1}, (0, 2): {0: 1}})


def test_lower_central_series():
    assert nilce.heisenberg().lower_central_series() == [3, 1, 0]
    assert _models.filiform4().lower_central_series() == [4, 2, 1, 0]


def test_invariant_subcomplex_examples():
    ce3 = nilce.ce_complex(nilce.abelian(3))
    assert nilce.invariant_dims(ce3, nilce.trivial_group(3)) == [1, 3, 3, 1]
    assert nilce.invariant_dims(ce3, nilce.action("hw-z2xz2", 3)) == [1, 0, 0, 1]
    ce2 = nilce.ce_complex(nilce.abelian(2))
    assert nilce.invariant_dims(ce2, nilce.action("minus-identity", 2)) == [1, 0, 1]


def test_hw_group_order():
    assert nilce.action("hw-z2xz2", 3).order == 4


def test_non_automorphism_rejected():
    f = nilce.generate_group([np.diag([1, -1, 1])], 3)
    with pytest.raises(nilce.LieAlgebraError):
        nilce.invariant_subcomplex(nilce.ce_complex(nilce.heisenberg()), f)


def test_group_cap():
    rot = np.array([[0, -1], [1, 1]])  # order 6
    assert nilce.generate_group([rot], 2).order == 6
    with pytest.raises(nilce.LieAlgebraError):
        nilce.generate_group([rot], 2, cap=4)


def test_parallel_form_criterion():
    hw = nilce.action("hw-z2xz2", 3)
    assert nilce.parallel_form_criterion(nilce.ce_complex(nilce.abelian(3)), hw, 1, 2)
    assert not nilce.parallel_form_criterion(nilce.ce_complex(nilce.abelian(2)), nilce.trivial_group(2), 1, 1)
    assert not nilce.parallel_form_criterion(nilce.ce_complex(nilce.heisenberg()), nilce.trivial_group(3), 3, 3)


def test_scale_metric():
    ce = nilce.ce_complex(nilce.heisenberg())
    same = nilce.scale_metric(ce, [1, 1, 1])
    for p in range(4):
        np.testing.assert_allclose(spectrum(same.complex, p).values(), spectrum(ce.complex, p).values())
    flat_ce = nilce.scale_metric(nilce.ce_complex(nilce.abelian(3)), [2.0, 0.5, 3.0])
    assert all(spectrum(flat_ce.complex, p).values().max() == 0 for p in range(4))
    with pytest.raises(nilce.LieAlgebraError):
        nilce.scale_metric(ce, [1, 0, 1])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 5.0))
def test_uniform_scaling_law(t):
    ce = nilce.ce_complex(_models.filiform4())
    scaled = nilce.scale_metric(ce, [t * t] * 4)
    for p in range(5):
        base = spectrum(ce.complex, p).values()
        new = spectrum(scaled.complex, p).values()
        nz = base > 1e-9
        np.testing.assert_allclose(new[nz], base[nz] / t ** 2, rtol=1e-10)


@pytest.mark.parametrize("seed", range(20))
def test_poincare_duality_of_ce_cohomology(seed):
    g, group = _models.random_algebra_action(seed)
    b = cohomology_dims(nilce.invariant_subcomplex(nilce.ce_complex(g), nilce.trivial_group(g.dimension)))
    assert b == b[::-1]


@pytest.mark.parametrize("seed", range(20))
def test_averaging_projector(seed):
    g, group = _models.random_algebra_action(seed)
    metric = np.eye(g.dimension)
    grams = nilce.induced_grams(metric)
    for q in range(g.dimension + 1):
        proj = exact.to_float(nilce.averaging_projector(group, q))
        np.testing.assert_allclose(proj @ proj, proj, atol=1e-12)
        # F acts orthogonally here, so the projector is self-adjoint
        np.testing.assert_allclose(grams[q] @ proj, (grams[q] @ proj).T, atol=1e-12)
