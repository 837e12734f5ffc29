"""Acceptance gate: one test (or a small group) per criterion.

The terminal summary prints one PASS/FAIL line per criterion.
"""

import random
import time

import numpy as np
import pytest

from collapse_spectra import bounds, flat, nilce, scenarios, sheaf, superconn
from collapse_spectra.complexes import (
    check_complex,
    cohomology_dims,
    full_spectrum,
    spectral_pages,
)

import _models

N_PROPERTY = 100


@pytest.mark.criterion(1, "lambda_min(Delta_2 on S^1 x tG6) t^2 = C for t in {1, 1/2, 1/4}")
def test_scaling_law_on_g6_products():
    start = time.perf_counter()
    g6 = flat.hantzsche_wendt()
    rep = flat.hodge_spectrum(g6, 1, 1)
    c = rep.lowest_positive()
    assert rep.kernel_dim() == 0
    assert rep.certified_below is not None and rep.certified_below >= c
    for t in (1.0, 0.5, 0.25):
        m = flat.product_with_scaled_fiber(flat.BASE_LENGTH, g6, t)
        r2 = flat.hodge_spectrum(m, 2, 1)
        assert r2.certified_below >= r2.eigenvalues[0]
        lam = r2.eigenvalues[0]
        assert lam > 0
        assert abs(lam * t * t - c) <= 1e-9 * c
    assert time.perf_counter() - start < 30.0


@pytest.mark.criterion(2, "zero modes of flat manifolds equal exact invariant cohomology")
@pytest.mark.parametrize("name", ["t2", "t3", "klein", "g6"])
def test_betti_consistency(name):
    m = flat.manifold(name)
    spectral = [flat.hodge_spectrum(m, p, 1).kernel_dim() for p in range(m.dimension + 1)]
    group = nilce.generate_group([np.rint(r).astype(int) for r, _ in m.group], m.dimension)
    ce = nilce.ce_complex(nilce.abelian(m.dimension))
    exact_b = cohomology_dims(nilce.invariant_subcomplex(ce, group))
    assert spectral == exact_b
    if name == "g6":
        assert spectral == [1, 0, 0, 1]


def _multiset_match(small, big, rtol):
    pool = sorted(big)
    for v in sorted(small):
        hit = next((i for i, w in enumerate(pool) if abs(v - w) <= rtol * max(abs(v), abs(w), 1e-300)), None)
        if hit is None:
            return False
        pool.pop(hit)
    return True


@pytest.mark.criterion(3, "Delta^E eigenvalues equal mapping-torus eigenvalues; first unmatched ~ t^-2")
@pytest.mark.parametrize("sign", [1, -1])
def test_superconnection_exact_on_mapping_tori(sign):
    phi = sign * np.eye(2, dtype=int)
    name = "maptorus-I" if sign == 1 else "maptorus-minusI"
    for p in range(4):
        scaled = []
        for t in (1.0, 0.25):
            ts = superconn.torus_superconn(phi, flat.BASE_LENGTH, t)
            m = flat.manifold(f"{name}({t})")
            fu, _ = superconn.first_unmatched(ts, m, p)
            e_vals = superconn.circle_eigenvalues_below(ts, p, fu * (1 - 1e-9))
            m_vals = flat.eigenvalues_below(m, p, fu * (1 - 1e-9))
            assert len(e_vals) > 0
            assert _multiset_match(e_vals, m_vals, 1e-8)
            scaled.append(fu * t * t)
        c = float(np.mean(scaled))
        assert all(abs(v - c) <= 0.1 * c for v in scaled)


@pytest.mark.criterion(4, "interval collapse of S^3: E2 = {(0,0): 1, (1,2): 1}, totals (1,0,0,1)")
def test_interval_collapse_spectral_sequence():
    sh = sheaf.interval_ex5()
    e2 = sheaf.interval_sheaf_e2(sh)
    assert e2 == {(0, 0): 1, (1, 2): 1}
    assert sheaf.interval_totals(sh) == (1, 0, 0, 1)
    f = sheaf.interval_filtered_complex(sh)
    assert spectral_pages(f, 2).nonzero(2) == e2
    assert cohomology_dims(f.complex) == [1, 0, 0, 1]


@pytest.mark.criterion(5, "codimension-one Euler class criterion on S^2")
def test_gysin_criterion():
    x = sheaf.s2_tetra()
    s = sheaf.LocalSystemZ2.trivial(x)
    chi = sheaf.generator_cocycle(s)
    zero = sheaf.EulerCocycle.zero(s)
    assert sheaf.tcor7_criterion(x, s, chi, 1) is True
    assert sheaf.tcor7_criterion(x, s, chi, 3) is False
    assert not any(sheaf.tcor7_criterion(x, s, zero, p) for p in range(5))


@pytest.mark.criterion(6, "Z2 quotient of the circle: Neumann / Dirichlet interval spectra")
def test_interval_boundary_conditions():
    z = superconn.interval_model(flat.BASE_LENGTH)
    plus = superconn.z2_basic_spectrum(z, 0, 4, twist=1).values()[:4]
    minus = superconn.z2_basic_spectrum(z, 0, 4, twist=-1).values()[:4]
    np.testing.assert_allclose(plus, [0, 1, 4, 9], rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(minus, [1, 4, 9, 16], rtol=1e-9, atol=1e-9)
    one = superconn.z2_basic_spectrum(z, 1, 3, twist=1).values()[:3]
    np.testing.assert_allclose(one, [1, 4, 9], rtol=1e-9)


# criterion 7: property suites ----------------------------------------------

@pytest.mark.criterion(7, "property suites over >= 100 random instances each")
def test_invariant_projection_keeps_d_squared_zero():
    for seed in range(N_PROPERTY):
        g, group = _models.random_algebra_action(seed)
        sub = nilce.invariant_subcomplex(nilce.ce_complex(g), group)
        assert sub.exact and check_complex(sub), seed


def _nonzero(vals, scale):
    return np.sort(np.asarray([v for v in vals if v > 1e-9 * scale]))


@pytest.mark.criterion(7, "property suites over >= 100 random instances each")
def test_supersymmetry_of_nonzero_spectra():
    for seed in range(N_PROPERTY):
        c = _models.random_float_complex(seed)
        for q in range(len(c.dims) - 1):
            d = c.d_float(q)
            if d.size == 0:
                continue
            lo = np.linalg.cholesky(c.gram(q))
            hi = np.linalg.cholesky(c.gram(q + 1))
            a = hi.T @ d @ np.linalg.inv(lo.T)
            scale = max(1.0, float(np.linalg.norm(a, 2) ** 2))
            down = _nonzero(np.linalg.eigvalsh(a.T @ a), scale)
            up = _nonzero(np.linalg.eigvalsh(a @ a.T), scale)
            assert len(down) == len(up)
            np.testing.assert_allclose(down, up, rtol=1e-9, atol=1e-9 * scale)
        # the full Laplacian spectrum splits into neighbouring pieces
        for p in range(len(c.dims)):
            pieces = []
            for q in (p - 1, p):
                if 0 <= q < len(c.dims) - 1 and c.d_float(q).size:
                    lo = np.linalg.cholesky(c.gram(q))
                    hi = np.linalg.cholesky(c.gram(q + 1))
                    a = hi.T @ c.d_float(q) @ np.linalg.inv(lo.T)
                    pieces.append(np.linalg.svd(a, compute_uv=False) ** 2)
            full = full_spectrum(c, p)
            if not full.size:
                continue
            scale = max(1.0, float(np.max(full)))
            want = _nonzero(np.concatenate(pieces) if pieces else [], scale)
            got = _nonzero(full, scale)
            assert len(got) == len(want), seed
            np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-9 * scale)


@pytest.mark.criterion(7, "property suites over >= 100 random instances each")
def test_e_infinity_totals_equal_cohomology():
    for seed in range(N_PROPERTY):
        f = _models.random_filtered_complex(random.Random(1000 + seed))
        pages = spectral_pages(f, 3)
        h = cohomology_dims(f.complex)
        assert [pages.total("inf", n) for n in range(len(h))] == h, seed


@pytest.mark.criterion(7, "property suites over >= 100 random instances each")
def test_twisted_euler_characteristic():
    twisted_differs = 0
    for seed in range(N_PROPERTY):
        s = _models.random_local_system(seed)
        plain = sheaf.cohomology_local(s.complex)
        tw = sheaf.cohomology_local(s.complex, s)
        chi = lambda b: sum((-1) ** i * v for i, v in enumerate(b))
        assert chi(plain) == chi(tw) == s.complex.euler_characteristic()
        twisted_differs += plain != tw
    assert twisted_differs > 0


@pytest.mark.criterion(7, "property suites over >= 100 random instances each")
def test_perturbation_inequality_on_random_pairs():
    rng = np.random.default_rng(7)
    for _ in range(N_PROPERTY):
        s1, s2 = superconn.random_superconn_pair(rng)
        op = superconn.superconn_distance(s1, s2)
        for p in range(len(s1.fiber.dims) + 1):
            l1 = superconn.circle_spectrum(s1, p, 10).values()[:10]
            l2 = superconn.circle_spectrum(s2, p, 10).values()[:10]
            n = min(len(l1), len(l2))
            res = bounds.perturbation_check(bounds.PerturbationInputs(tuple(l1[:n]), tuple(l2[:n]), op))
            assert res.holds, (p, res)


@pytest.mark.criterion(7, "property suites over >= 100 random instances each")
def test_gap_threshold_monotone():
    rng = np.random.default_rng(11)
    fields = ("norm_r", "norm_pi", "norm_t", "norm_tfm")

    def value(g):
        v = bounds.gap_threshold(g)
        return 0.0 if v is None else v

    for _ in range(N_PROPERTY):
        base = dict(A=rng.uniform(0.5, 5), C=rng.uniform(0.1, 2), diam=rng.uniform(0.05, 1),
                    provenance="random sweep")
        base.update({f: rng.uniform(0, 1) for f in fields})
        g0 = bounds.GapInputs(**base)
        v0 = value(g0)
        bump = rng.uniform(0.01, 0.5)
        for f in fields:
            assert value(bounds.GapInputs(**{**base, f: base[f] + bump})) <= v0 + 1e-12
        assert value(bounds.GapInputs(**{**base, "A": base["A"] + bump})) >= v0 - 1e-12
        assert value(bounds.GapInputs(**{**base, "diam": base["diam"] + bump})) <= v0 + 1e-12


# criterion 8 -------------------------------------------------------------------

@pytest.mark.criterion(8, "no small positive function eigenvalues as t -> 1/4")
def test_function_gap_in_bundled_scenarios():
    rows, claim = scenarios.evaluate(scenarios.get_scenario("cor8-functions"))
    assert claim.passed, claim.detail
    seconds = [r.lam for r in rows if r.j == 2]
    assert seconds and min(seconds) > 0.1
    for family in ("s1xg6", "maptorus-I", "maptorus-minusI"):
        for t in (1.0, 0.5, 0.25):
            vals = flat.hodge_spectrum(flat.manifold(f"{family}({t})"), 0, 2).values()
            assert vals[0] == 0.0 and vals[1] > 0.1
    for sign in (1, -1):
        for t in (1.0, 0.5, 0.25):
            ts = superconn.torus_superconn(sign * np.eye(2, dtype=int), flat.BASE_LENGTH, t)
            vals = superconn.circle_spectrum(ts, 0, 2).values()
            assert vals[1] > 0.1
    # every bundled scenario still runs with its claim intact
    for name in scenarios.SCENARIOS:
        assert scenarios.evaluate(scenarios.get_scenario(name))[1].passed, name
