import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collapse_spectra import bounds, nilce, superconn
from collapse_spectra.complexes import cohomology_dims

NOTE = "test fixture"


def test_gap_threshold_examples():
    assert bounds.gap_threshold(bounds.GapInputs(1, 1, 0.1, provenance=NOTE)) == pytest.approx(100.0)
    assert bounds.gap_threshold(bounds.GapInputs(1, 1, 0.1, norm_r=200, provenance=NOTE)) is None
    assert bounds.gap_threshold(bounds.GapInputs(1, 1, 0.1, norm_tfm=5, provenance=NOTE)) == pytest.approx(25.0)
    # positive radicand but the difference goes negative
    assert bounds.gap_threshold(bounds.GapInputs(1, 1, 0.1, norm_tfm=20, provenance=NOTE)) is None


def test_gap_inputs_validation():
    with pytest.raises(bounds.BoundsInputError, match="provenance"):
        bounds.GapInputs(1, 1, 0.1)
    with pytest.raises(bounds.BoundsInputError):
        bounds.GapInputs(0, 1, 0.1, provenance=NOTE)
    with pytest.raises(bounds.BoundsInputError):
        bounds.GapInputs(1, 1, 0.1, norm_pi=-1, provenance=NOTE)


def test_perturbation_examples():
    same = bounds.perturbation_check(bounds.PerturbationInputs((0.0, 1.0), (0.0, 1.0), 0.0))
    assert same.holds and same.margin == 0.0
    res = bounds.perturbation_check(bounds.PerturbationInputs((0.0, 1.0), (0.0, 4.0), 0.2))
    assert not res.holds
    assert res.worst_index == 2
    assert res.margin == pytest.approx((2 + math.sqrt(2)) * 0.2 - 1.0)


def test_eps_term_loosens_the_check():
    inputs = bounds.PerturbationInputs((1.0, 4.0), (1.21, 4.84), 0.0, eps=0.0)
    assert not bounds.perturbation_check(inputs).holds
    inputs = bounds.PerturbationInputs((1.0, 4.0), (1.21, 4.84), 0.0, eps=math.log(1.1) + 1e-12)
    assert bounds.perturbation_check(inputs).holds


def test_perturbation_input_errors():
    with pytest.raises(bounds.BoundsInputError):
        bounds.PerturbationInputs((0.0, 1.0), (0.0,), 0.1)
    with pytest.raises(bounds.BoundsInputError):
        bounds.PerturbationInputs((1.0, 0.5), (0.0, 1.0), 0.1)
    with pytest.raises(bounds.BoundsInputError):
        bounds.PerturbationInputs((0.0,), (0.0,), -1.0)


spectra = st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=8).map(sorted)


@settings(max_examples=200, deadline=None)
@given(spectra, spectra, st.floats(0, 5))
def test_perturbation_symmetric_without_eps(a, b, op):
    n = min(len(a), len(b))
    a, b = tuple(a[:n]), tuple(b[:n])
    fwd = bounds.perturbation_check(bounds.PerturbationInputs(a, b, op))
    back = bounds.perturbation_check(bounds.PerturbationInputs(b, a, op))
    assert fwd.holds == back.holds
    assert fwd.margin == pytest.approx(back.margin, abs=1e-12)


def test_eps_close():
    assert bounds.eps_close(1.0, 1.0, 0.0)
    assert bounds.eps_close(1.05, 1.0, 0.1)
    assert not bounds.eps_close(2.0, 1.0, 0.1)


def test_one_form_budget():
    assert bounds.tcor2_budget(0, 3, 2, 0) == 1
    assert bounds.tcor2_budget(4, 3, 3, 5) == 4
    assert bounds.tcor2_budget(2, 3, 2, 3) == 3
    with pytest.raises(bounds.BoundsInputError):
        bounds.tcor2_budget(0, 2, 3, 0)


def test_invariant_form_budget():
    ce3 = nilce.ce_complex(nilce.abelian(3))
    hw = nilce.invariant_dims(ce3, nilce.action("hw-z2xz2", 3))
    assert bounds.tcor3_budget(hw, 1) == 0
    assert bounds.tcor3_budget(nilce.invariant_dims(ce3, nilce.trivial_group(3)), 1) == 3
    heis = nilce.ce_complex(nilce.heisenberg())
    assert bounds.tcor3_budget(nilce.invariant_dims(heis, nilce.trivial_group(3)), 2) == 3
    assert bounds.tcor3_budget(hw, 9) == 0


@pytest.mark.parametrize("phi", [np.eye(2, dtype=int), -np.eye(2, dtype=int), np.array([[0, -1], [1, 0]])])
def test_leray_bound_on_mapping_tori(phi):
    mc = superconn.monodromy_cohomology(superconn.torus_superconn(phi, 2 * math.pi, 1.0))
    e2 = [mc.e2_total(n) for n in range(len(mc.total))]
    assert bounds.leray_bound_holds(mc.total, e2)
    # two columns: the spectral sequence stops at E2
    assert list(mc.total) == e2


def test_leray_bound_detects_violation():
    assert not bounds.leray_bound_holds((1, 2), (1, 1))
    assert bounds.leray_bound_holds((1,), (1, 0, 3))


def test_mechanisms():
    ce = nilce.ce_complex(nilce.heisenberg())
    inv = nilce.invariant_dims(ce, nilce.trivial_group(3))
    betti = cohomology_dims(ce.complex)
    m = bounds.small_eigenvalue_mechanisms(betti, inv, (1, 2), (1, 2), 1)
    assert m.fiber_excess and not m.non_degenerate and m.non_semisimple is None
    assert m.any_known
    m0 = bounds.small_eigenvalue_mechanisms(betti, inv, (1, 2), (1, 1), 0)
    assert not m0.any_known
    assert bounds.small_eigenvalue_mechanisms((1, 1), (1, 1), (1, 2), (1, 1), 1).non_degenerate
