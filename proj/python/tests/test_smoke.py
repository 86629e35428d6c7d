import numpy as np
import pytest

import hsicgsa as hg


def uniform_sample(n, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(size=(n, 3))


def test_law_basics():
    t = hg.Law.triangular(0.0, 1.0, 0.5)
    assert t.lower == 0.0 and t.upper == 1.0
    assert t.pdf(0.5) == pytest.approx(2.0)
    np.testing.assert_allclose(t.cdf(np.array([0.0, 0.5, 1.0])), [0.0, 0.5, 1.0])
    assert t.mean() == pytest.approx(0.5)
    assert t.variance() == pytest.approx(1.0 / 24.0)
    draws = t.sample(500, seed=3)
    assert len(draws) == 500 and min(draws) >= 0.0 and max(draws) <= 1.0
    assert draws == t.sample(500, seed=3)
    m = hg.Law.mixture([(hg.Law.uniform(0, 1), 0.5), (t, 0.5)])
    assert m.pdf(0.5) == pytest.approx(1.5)


def test_invalid_parameters_raise():
    with pytest.raises(hg.HsicgsaError) as info:
        hg.Law.uniform(1.0, 0.0)
    assert info.value.code
    assert issubclass(hg.HsicgsaError, ValueError)


def test_hsic_detects_the_active_inputs():
    x = uniform_sample(300, 1)
    y = hg.ishigami(x)
    res = hg.hsic(x, y, permutations=100, seed=2)
    r2 = res["r2"]
    assert len(r2) == 3
    assert r2[0] > r2[2] and r2[1] > r2[2]
    assert res["asymp_pvalue"][0] < 0.01
    assert all(0.0 <= p <= 1.0 for p in res["perm_pvalue"])


def test_weighted_hsic_reduces_to_classical_at_equal_laws():
    x = uniform_sample(150, 4)
    y = hg.ishigami(x)
    laws = [hg.Law.uniform(0, 1)] * 3
    w = hg.weighted_hsic(x, y, sampling=laws, target=laws)
    c = hg.hsic(x, y)
    np.testing.assert_allclose(w["hsic"], c["hsic"], rtol=1e-12)
    np.testing.assert_allclose(w["weights"], np.ones(150))


def test_weighted_hsic_rejects_points_outside_the_target():
    x = uniform_sample(50, 5) * 2.0
    y = x[:, 0]
    wide = [hg.Law.uniform(0, 2)] * 3
    narrow = [hg.Law.uniform(0, 1)] * 3
    with pytest.raises(hg.HsicgsaError):
        hg.weighted_hsic(x, y, sampling=narrow, target=wide)


def test_second_level_runs_with_builtin_and_python_models():
    priors = hg.analytical_priors()
    res = hg.single_loop(priors, "ishigami-coef15", n1=20, n2=300, seed=3)
    assert res["model_evaluations"] == 300
    assert len(res["r2"]) == 3 and sorted(res["ranking"]) == [0, 1, 2]

    calls = []

    def model(v):
        calls.append(1)
        return float(np.sin(v[0]) + 1.5 * np.sin(v[1]) ** 2)

    dl = hg.double_loop(priors, model, n1=6, n2=40, seed=4)
    assert dl["model_evaluations"] == 240 == len(calls)
