"""Kernel families: branch values, rate integrals, sampling, classification,
and the symmetric/antisymmetric split.

Expected numbers for the regularized power-law family come from its
closed-form antiderivative: with index 1/2, unit scale and range, and cap
width 1e-3, the full rate is 6/sqrt(1e-3) - 4 and the capped core carries
fraction 2/sqrt(1e-3) of it.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumpexit.errors import ConfigurationError
from jumpexit.geometry import Intervals
from jumpexit.kernels import (FINITE, INFINITE, CompoundPoissonUniform,
                              TabulatedKernel, TruncatedStable)

PLATEAU_05 = 31622.776601683792          # 0.001 ** -1.5
TOTAL_RATE_05 = 185.73665961010278       # 6 / sqrt(1e-3) - 4
PLATEAU_PROB_05 = 0.34051195566956066    # (2 / sqrt(1e-3)) / TOTAL_RATE_05

KS_CRIT_1PCT = 1.628  # one-sample asymptotic critical value at the 1% level


def step_table(c_left, c_right, horizon=1.0, n=41):
    """Tabulated kernel with value c_right for y > x, c_left for y < x."""
    z = np.linspace(-horizon, horizon, n)
    v = np.where(z > 0, c_right, c_left).astype(float)
    v[z == 0] = 0.5 * (c_left + c_right)
    return TabulatedKernel(horizon=horizon, displacements=z, values=v)


# --- evaluate -------------------------------------------------------------

def test_stable_plateau_and_cutoff_values(stable_kernel_05):
    k = stable_kernel_05
    assert k.evaluate(0.0, 0.0005) == pytest.approx(PLATEAU_05, rel=1e-14)
    assert k.evaluate(0.0, 2.0) == 0.0
    assert k.evaluate(0.3, 0.3 + 0.01) == pytest.approx(0.01 ** -1.5, rel=1e-12)
    # plateau applies on the closed set |dy| <= epsilon
    assert k.evaluate(0.0, 1e-3) == pytest.approx(PLATEAU_05, rel=1e-14)


def test_compound_poisson_density():
    k = CompoundPoissonUniform(rate=0.2, horizon=1.0)
    assert k.evaluate(0.0, 0.3) == pytest.approx(0.1)
    assert k.evaluate(0.0, 1.0) == 0.0
    # normalization: density integrates to the total rate (trapezoid on the
    # discontinuous indicator loses O(dy) at the range edges)
    z = np.linspace(-1.5, 1.5, 30_001)
    assert np.trapezoid(k.evaluate(0.0, z), z) == pytest.approx(0.2, rel=1e-4)


@given(x=st.floats(-5, 5), dy=st.floats(-10, 10))
def test_finite_range_and_nonnegative(x, dy):
    for k in (CompoundPoissonUniform(rate=0.7, horizon=1.3),
              TruncatedStable(alpha=0.8, m=2.0, horizon=1.3, epsilon=1e-2)):
        v = float(k.evaluate(x, x + dy))
        assert v >= 0.0
        if abs(dy) >= k.horizon:
            assert v == 0.0


# --- total_rate -----------------------------------------------------------

def test_stable_total_rate_closed_form(stable_kernel_05):
    assert stable_kernel_05.total_rate(0.0) == pytest.approx(TOTAL_RATE_05, rel=1e-12)


def test_compound_total_rate():
    k = CompoundPoissonUniform(rate=0.2, horizon=1.0)
    assert k.total_rate(0.0) == pytest.approx(0.2, rel=1e-14)
    # ball about 0.5 lies inside (-1, 2): restriction changes nothing
    assert k.total_rate(0.5, Intervals(((-1.0, 2.0),))) == pytest.approx(0.2, rel=1e-14)


def test_total_rate_against_quadrature(stable_kernel_05):
    region = Intervals.from_pairs([(-0.8, -0.4), (0.002, 0.6)])
    got = stable_kernel_05.total_rate(0.1, region)
    ys = np.concatenate([np.linspace(lo, hi, 400_001) for lo, hi in region.bounds])
    ref = sum(np.trapezoid(stable_kernel_05.evaluate(0.1, np.linspace(lo, hi, 400_001)),
                           np.linspace(lo, hi, 400_001)) for lo, hi in region.bounds)
    assert got == pytest.approx(ref, rel=1e-6)


@settings(max_examples=40)
@given(x=st.floats(-2, 2),
       cut=st.floats(-2.9, 2.9),
       alpha=st.floats(0.2, 1.8))
def test_total_rate_additive_over_disjoint_regions(x, cut, alpha):
    k = TruncatedStable(alpha=alpha, m=1.5, horizon=1.1, epsilon=5e-3)
    lo, hi = -3.0, 3.0
    a = Intervals(((lo, cut),)) if cut > lo else Intervals()
    b = Intervals(((cut, hi),)) if cut < hi else Intervals()
    whole = Intervals(((lo, hi),))
    total = k.total_rate(x, whole)
    assert k.total_rate(x, a) + k.total_rate(x, b) == pytest.approx(total, rel=1e-12, abs=1e-12)


def test_unregularized_stable_rejected():
    with pytest.raises(ConfigurationError, match="epsilon"):
        TruncatedStable(alpha=0.5, m=1.0, horizon=1.0, epsilon=0.0)


# --- sampling -------------------------------------------------------------

def test_sample_plateau_probability(stable_kernel_05):
    eps = stable_kernel_05.epsilon
    core = stable_kernel_05.total_rate(0.0, Intervals(((-eps, eps),)))
    assert core / stable_kernel_05.total_rate(0.0) == pytest.approx(PLATEAU_PROB_05, rel=1e-12)
    rng = np.random.default_rng(20)
    n = 100_000
    hits = sum(abs(stable_kernel_05.sample_jump(0.0, None, rng)) <= eps for _ in range(n))
    stderr = np.sqrt(PLATEAU_PROB_05 * (1 - PLATEAU_PROB_05) / n)
    assert abs(hits / n - PLATEAU_PROB_05) <= 3 * stderr


def _ks_statistic(samples, cdf):
    s = np.sort(samples)
    n = s.size
    f = cdf(s)
    up = np.max(np.arange(1, n + 1) / n - f)
    down = np.max(f - np.arange(n) / n)
    return max(up, down)


def _quadrature_cdf(kernel, x, lo, hi, n=200_001):
    """Reference CDF by quadrature of evaluate, independent of the sampler's
    antiderivative route."""
    ys = np.linspace(lo, hi, n)
    dens = np.asarray(kernel.evaluate(x, ys), dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(ys))])
    cum /= cum[-1]
    return lambda s: np.interp(s, ys, cum)


@pytest.mark.parametrize("kernel_name", ["compound", "stable"])
def test_sample_jump_matches_quadrature_cdf(kernel_name, stable_kernel_05):
    kernel = CompoundPoissonUniform(rate=0.2, horizon=1.0) if kernel_name == "compound" \
        else stable_kernel_05
    x = 0.25
    rng = np.random.default_rng(77)
    n = 100_000
    samples = np.array([kernel.sample_jump(x, None, rng) for _ in range(n)])
    cdf = _quadrature_cdf(kernel, x, x - kernel.horizon, x + kernel.horizon)
    assert _ks_statistic(samples, cdf) <= KS_CRIT_1PCT / np.sqrt(n)


def test_sample_jump_uniform_in_ball():
    k = CompoundPoissonUniform(rate=0.2, horizon=1.0)
    rng = np.random.default_rng(5)
    n = 100_000
    s = np.array([k.sample_jump(0.0, Intervals(((-1.0, 1.0),)), rng) for _ in range(n)])
    assert _ks_statistic(s, lambda y: (y + 1) / 2) <= KS_CRIT_1PCT / np.sqrt(n)
    assert abs(s.mean()) <= 3 / np.sqrt(3 * n)  # symmetric region: zero-mean jumps


def test_sample_jump_restricted_region(stable_kernel_05):
    region = Intervals.from_pairs([(0.4, 0.5), (0.9, 0.95)])
    rng = np.random.default_rng(9)
    for _ in range(500):
        y = stable_kernel_05.sample_jump(0.0, region, rng)
        assert region.contains(y)


def test_sample_jump_zero_mass_raises():
    k = CompoundPoissonUniform(rate=0.2, horizon=1.0)
    with pytest.raises(ConfigurationError, match="isolated"):
        k.sample_jump(0.0, Intervals(((5.0, 6.0),)), np.random.default_rng(0))


# --- classification -------------------------------------------------------

@pytest.mark.parametrize("kernel_args, expected", [
    (dict(family="cp", rate=0.2), (FINITE, FINITE)),
    (dict(family="ts", alpha=0.5, m=1.0), (INFINITE, FINITE)),
    (dict(family="ts", alpha=1.5, m=1000.0), (INFINITE, INFINITE)),
])
def test_classify_builtin_families(kernel_args, expected):
    if kernel_args["family"] == "cp":
        k = CompoundPoissonUniform(rate=kernel_args["rate"], horizon=1.0)
    else:
        k = TruncatedStable(alpha=kernel_args["alpha"], m=kernel_args["m"],
                            horizon=1.0, epsilon=1e-3)
    cls = k.classify()
    assert (cls.activity, cls.variation) == expected
    assert not cls.heuristic


@pytest.mark.parametrize("make", [
    lambda: CompoundPoissonUniform(rate=0.2, horizon=1.0),
    lambda: TruncatedStable(alpha=0.5, m=1.0, horizon=1.0, epsilon=1e-3),
    lambda: TruncatedStable(alpha=1.5, m=1000.0, horizon=1.0, epsilon=1e-3),
])
def test_classify_matches_tail_mass_growth(make):
    # infinite activity iff the unregularized mass outside a shrinking ball
    # grows without bound
    k = make()
    deltas = np.geomspace(0.5, 1e-9, 10)
    masses = np.array([k.unregularized_tail_mass(d) for d in deltas])
    assert np.all(np.diff(masses) >= -1e-12)
    unbounded = masses[-1] / masses[0] > 1e3
    assert unbounded == (k.classify().activity == INFINITE)


def test_classify_tabulated_is_heuristic(stable_kernel_05):
    # a fine tabulation of the power-law profile still reads as infinite
    # activity, finite variation -- but flagged heuristic
    z = np.sign(np.linspace(-1, 1, 8001)) * np.abs(np.linspace(-1, 1, 8001))
    z = np.unique(np.concatenate([z, np.geomspace(1e-7, 1.0, 300), -np.geomspace(1e-7, 1.0, 300)]))
    v = np.where(np.abs(z) > 0, np.abs(np.where(z == 0, 1.0, z)) ** -1.5, 0.0)
    v[np.abs(z) >= 1.0] = 0.0
    tab = TabulatedKernel(horizon=1.0, displacements=z, values=v)
    cls = tab.classify()
    assert cls.heuristic
    assert cls.activity == INFINITE
    assert cls.variation == FINITE
    flat = TabulatedKernel(horizon=1.0, displacements=np.linspace(-1, 1, 11),
                           values=np.full(11, 0.3))
    cls = flat.classify()
    assert cls.heuristic
    assert (cls.activity, cls.variation) == (FINITE, FINITE)


# --- decomposition --------------------------------------------------------

def test_decompose_symmetric_family_has_no_drift(stable_kernel_05):
    dec = stable_kernel_05.decompose()
    xs = np.linspace(-0.5, 0.5, 17)
    for x in xs:
        assert np.all(dec.gamma_a(x, xs) == 0.0)
        np.testing.assert_allclose(dec.gamma_s(x, xs), stable_kernel_05.evaluate(x, xs))


def test_decompose_step_kernel():
    c1, c2 = 0.3, 0.1  # forward and backward rates
    k = step_table(c_left=c2, c_right=c1)
    assert not k.symmetric
    dec = k.decompose()
    assert dec.gamma_s(0.0, 0.4) == pytest.approx((c1 + c2) / 2, rel=1e-12)
    assert dec.gamma_a(0.0, 0.4) == pytest.approx((c1 - c2) / 2, rel=1e-12)
    assert dec.gamma_a(0.4, 0.0) == pytest.approx(-(c1 - c2) / 2, rel=1e-12)


@settings(max_examples=40)
@given(x=st.floats(-1, 1), y=st.floats(-1, 1))
def test_decompose_roundtrip_and_antisymmetry(x, y):
    k = step_table(c_left=0.17, c_right=0.93)
    dec = k.decompose()
    gs, ga = float(dec.gamma_s(x, y)), float(dec.gamma_a(x, y))
    assert gs + ga == pytest.approx(float(k.evaluate(x, y)), rel=1e-14, abs=1e-16)
    assert float(dec.gamma_a(y, x)) == pytest.approx(-ga, rel=1e-14, abs=1e-16)
    assert gs >= abs(ga) - 1e-16


# --- scaling and parameter validation --------------------------------------

def test_scaled_kernels():
    cp = CompoundPoissonUniform(rate=0.2, horizon=1.0)
    assert cp.scaled(3.0).total_rate(0.0) == pytest.approx(0.6, rel=1e-14)
    ts = TruncatedStable(alpha=0.5, m=1.0, horizon=1.0, epsilon=1e-3)
    assert ts.scaled(2.0).total_rate(0.0) == pytest.approx(2 * TOTAL_RATE_05, rel=1e-13)


@pytest.mark.parametrize("kwargs", [
    dict(alpha=0.0, m=1.0, horizon=1.0, epsilon=1e-3),
    dict(alpha=2.0, m=1.0, horizon=1.0, epsilon=1e-3),
    dict(alpha=0.5, m=-1.0, horizon=1.0, epsilon=1e-3),
    dict(alpha=0.5, m=1.0, horizon=1.0, epsilon=2.0),
])
def test_stable_parameter_validation(kwargs):
    with pytest.raises(ConfigurationError):
        TruncatedStable(**kwargs)


# --- tabulated bivariate ----------------------------------------------------

def test_bivariate_table_evaluate_and_sample():
    nodes = np.linspace(-2.0, 2.0, 81)
    vv = 0.2 + 0.05 * np.add.outer(np.sin(nodes), np.cos(nodes)) ** 2
    k = TabulatedKernel(horizon=1.0, x_nodes=nodes, y_nodes=nodes, grid_values=vv)
    assert float(k.evaluate(0.0, 1.2)) == 0.0  # horizon clips the table
    assert float(k.evaluate(0.0, 0.5)) > 0.0
    rng = np.random.default_rng(3)
    region = Intervals(((-0.5, 0.5),))
    n = 50_000
    samples = np.array([k.sample_jump(0.0, region, rng) for _ in range(n)])
    assert np.all(np.abs(samples) <= 0.5)
    cdf = _quadrature_cdf(k, 0.0, -0.5, 0.5)
    assert _ks_statistic(samples, cdf) <= KS_CRIT_1PCT / np.sqrt(n)
