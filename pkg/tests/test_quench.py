import math

import numpy as np
import pytest
from scipy import integrate

from glassybv.disorder import QuantumDisorder
from glassybv.engine import SecretString
from glassybv.errors import AllZero, InvalidParameter
from glassybv import quench
from glassybv.quench import (
    StoppingRule,
    _pool,
    advantage_curve,
    analytic_uniform_special,
    lnP_statistics,
    quenched_average,
)


def cap_bit_average(d):
    """Disorder-averaged single-bit factor for a uniform cap about +x.

    |X|^2 = (1 + z z') / 2 + x sin(t') / 2 in world coordinates, and E[z] = 0
    by symmetry, so the average is 1/2 + E[x] E[sqrt(1 - z^2)] / 2. Both
    moments are integrated over the cap directly.
    """
    norm = 2 * math.pi * (1 - math.cos(d))

    def cap_mean(f):
        val, _ = integrate.dblquad(lambda a, t: f(t, a) * math.sin(t), 0, d, 0, 2 * math.pi)
        return val / norm

    mean_x = cap_mean(lambda t, a: math.cos(t))
    mean_sin = cap_mean(lambda t, a: math.sqrt(1 - (math.sin(t) * math.cos(a)) ** 2))
    return 0.5 + 0.5 * mean_x * mean_sin


@pytest.mark.parametrize("d,n", [(0.8, 1), (1.3, 2), (2.0, 3)])
def test_cap_average_matches_moment_formula(d, n):
    est = quenched_average(QuantumDisorder.uniform_cap(d), SecretString.zeros(n), seed=5)
    assert est.converged
    assert abs(est.q_mean - cap_bit_average(d) ** n) < 4 * est.std_error


@pytest.mark.parametrize("case,n", [("FullSphere", 2), ("HalfSphere", 2)])
def test_analytic_special_cases(case, n):
    d = math.pi if case == "FullSphere" else math.pi / 2
    est = quenched_average(QuantumDisorder.uniform_cap(d), SecretString.zeros(n), seed=6)
    assert abs(est.q_mean - analytic_uniform_special(case, n)) < 4 * est.std_error


def test_analytic_special_values():
    assert analytic_uniform_special("FullSphere", 3) == 0.125
    assert analytic_uniform_special("half_sphere", 1) == pytest.approx(0.5 + math.pi / 16)
    with pytest.raises(InvalidParameter):
        analytic_uniform_special("quarter", 1)


def test_noiseless_is_exactly_one():
    est = quenched_average(QuantumDisorder.uniform_cap(0.0), SecretString.parse("1011"), seed=1)
    assert est.q_mean == 1.0 and est.std_error == 0.0 and est.converged


def test_same_seed_same_estimate():
    m = QuantumDisorder.gaussian(4.0)
    a = quenched_average(m, SecretString.zeros(3), seed=99, max_samples=50_000)
    b = quenched_average(m, SecretString.zeros(3), seed=99, max_samples=50_000)
    assert a == b


def test_streams_are_independent():
    m = QuantumDisorder.gaussian(4.0)
    a = quenched_average(m, SecretString.zeros(3), seed=99, max_samples=20_000, stream=(1,))
    b = quenched_average(m, SecretString.zeros(3), seed=99, max_samples=20_000, stream=(2,))
    assert a.q_mean != b.q_mean


def test_worker_count_does_not_change_result():
    m = QuantumDisorder.cauchy(0.7)
    rule = StoppingRule(batch_size=4096)
    one = quenched_average(m, SecretString.zeros(4), 3, 40_000, rule, workers=1)
    two = quenched_average(m, SecretString.zeros(4), 3, 40_000, rule, workers=2)
    assert one == two


def test_budget_exhaustion_reports_unconverged():
    rule = StoppingRule(half_width=1e-6, batch_size=1024)
    est = quenched_average(QuantumDisorder.uniform_cap(2.0), SecretString.zeros(2), 1, 10_000, rule)
    assert not est.converged
    assert est.n_samples == 10_000


def test_max_samples_floor():
    with pytest.raises(InvalidParameter):
        quenched_average(QuantumDisorder.uniform_cap(1.0), SecretString.zeros(1), 1, max_samples=100)


def test_pooled_moments_match_numpy():
    rng = np.random.default_rng(0)
    data = rng.normal(size=1000)
    acc = (0, 0.0, 0.0)
    for chunk in np.array_split(data, 7):
        m = chunk.mean()
        acc = _pool(acc, (len(chunk), m, ((chunk - m) ** 2).sum()))
    assert acc[0] == 1000
    assert acc[1] == pytest.approx(data.mean(), abs=1e-14)
    assert acc[2] == pytest.approx(((data - data.mean()) ** 2).sum(), rel=1e-12)


def test_batch_size_rule():
    rule = StoppingRule()
    assert rule.batch_for(1) == 65536
    assert rule.batch_for(50) == (1 << 20) // 50
    assert rule.batch_for(5000) == 1024


def test_lnP_statistics_lognormal_prediction():
    st = lnP_statistics(QuantumDisorder.uniform_cap(0.6), 20, 100_000, seed=4)
    assert st.discarded_fraction == 0.0
    combined = math.hypot(st.predicted_stderr, st.mc_stderr_P)
    assert abs(st.predicted_mean_P - st.mc_mean_P) < 5 * combined


def test_lnP_statistics_all_zero(monkeypatch):
    monkeypatch.setattr(quench, "sample_factors", lambda model, bits, rng, size: np.zeros((size, len(bits))))
    with pytest.raises(AllZero):
        lnP_statistics(QuantumDisorder.uniform_cap(1.0), 2, 1000, seed=1)


def test_lnP_statistics_warns_for_cauchy():
    with pytest.warns(UserWarning):
        st = lnP_statistics(QuantumDisorder.cauchy(0.8), 5, 5000, seed=1)
    assert st.heavy_tailed


def test_advantage_curve_noiseless():
    rows = advantage_curve("uniform", "uniform", 0.0, [1, 2, 3], seed=1)
    assert [r.diff for r in rows] == pytest.approx([0.0, 0.5, 0.75])
