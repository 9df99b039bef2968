import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from filtercast.errors import DegenerateSeriesError, ParameterError, ValidationError
from filtercast.sampling import (BinomialThinning, CategoryStack, RiskThreshold, TrialSet, apply_scheme,
                                 binomial_thin, category_ranking, category_stack_series, effective_rate,
                                 risk_threshold_filter, scheme_from_dict)
from filtercast.series import CountSeries, EventLog, aggregate_daily
from filtercast.synthgen import InarSpec, gen_inar, gen_labeled_log, skewed_labels

counts = st.lists(st.integers(0, 500), min_size=1, max_size=80).map(CountSeries)


@pytest.fixture(scope="module")
def labelled_log():
    return gen_labeled_log(gen_inar(InarSpec(0.6, 40, 60, seed=2)), skewed_labels(), seed=5)


class TestSchemes:
    @pytest.mark.parametrize("bad", [-0.1, 1.1])
    def test_probability_bounds(self, bad):
        with pytest.raises(ParameterError):
            BinomialThinning(bad)

    @pytest.mark.parametrize("make, bad", [(RiskThreshold, -1), (RiskThreshold, 401), (CategoryStack, 0)])
    def test_real_world_bounds(self, make, bad):
        with pytest.raises(ParameterError):
            make(bad)

    @pytest.mark.parametrize("scheme", [BinomialThinning(0.4, 7, 3), RiskThreshold(150), CategoryStack(2)])
    def test_dict_round_trip(self, scheme):
        assert scheme_from_dict(scheme.to_dict()) == scheme

    def test_trial_set_requires_alignment(self):
        with pytest.raises(ValidationError):
            TrialSet((CountSeries([1, 2]), CountSeries([1])), RiskThreshold(0))


class TestBinomialThin:
    def test_identity_and_full_filter(self):
        x = CountSeries([5, 0, 12, 7])
        assert all(y == x for y in binomial_thin(x, 1.0, 5, 0))
        assert all(y.total() == 0 for y in binomial_thin(x, 0.0, 5, 0))

    def test_per_day_mean_within_binomial_bounds(self):
        ts = binomial_thin(CountSeries([100] * 200), 0.3, 50, seed=11)
        means = ts.matrix().mean(axis=0)
        assert means.min() >= 25.5 and means.max() <= 34.5

    def test_seed_determinism(self):
        x = gen_inar(InarSpec(0.7, 30, 100, seed=1))
        a = binomial_thin(x, 0.4, 10, seed=9).matrix()
        b = binomial_thin(x, 0.4, 10, seed=9).matrix()
        c = binomial_thin(x, 0.4, 10, seed=10).matrix()
        assert np.array_equal(a, b) and not np.array_equal(a, c)

    def test_trial_streams_do_not_depend_on_trial_count(self):
        x = gen_inar(InarSpec(0.7, 30, 100, seed=1))
        few = binomial_thin(x, 0.4, 3, seed=9).matrix()
        many = binomial_thin(x, 0.4, 20, seed=9).matrix()
        assert np.array_equal(few, many[:3])

    def test_trials_are_uncorrelated(self):
        ts = binomial_thin(CountSeries([200] * 365), 0.5, 10, seed=4).matrix().astype(float)
        corr = np.corrcoef(ts)
        off = corr[~np.eye(len(corr), dtype=bool)]
        assert np.abs(off).max() <= 0.1 + 0.05  # 3 sigma for 45 pairs at T=365 is about 0.16

    def test_effective_rate_near_p(self):
        x = CountSeries(np.full(2000, 50))
        y = binomial_thin(x, 0.4, 1, seed=2).series[0]
        assert 0.38 <= effective_rate(y, x) <= 0.42

    def test_provenance_records_trial(self):
        ts = binomial_thin(CountSeries([3, 4]), 0.5, 2, seed=1)
        assert [s.provenance["trial"] for s in ts] == [0, 1]
        assert ts.series[0].provenance["scheme"]["type"] == "binomial"

    @given(counts, st.floats(0, 1), st.integers(0, 2**32))
    def test_pointwise_dominated(self, x, p, seed):
        m = binomial_thin(x, p, 3, seed).matrix()
        assert (m >= 0).all() and (m <= x.values).all()


class TestRiskThreshold:
    def test_hand_example(self):
        recs = [(d, "A", sc) for d in range(5) for sc in [(10, 0, 0, 0), (20, 20, 20, 0), (100, 100, 50, 0)]]
        s = risk_threshold_filter(EventLog.from_records(recs), 50)
        assert s.values.tolist() == [1] * 5

    def test_zero_keeps_only_clean_events(self):
        log = EventLog.from_records([(0, "A", (0, 0, 0, 0)), (0, "A", (0, 0, 1, 0)), (1, "A", (0, 0, 0, 0))])
        assert risk_threshold_filter(log, 0).values.tolist() == [1, 1]

    def test_max_threshold_is_everything(self, labelled_log):
        assert risk_threshold_filter(labelled_log, 400) == aggregate_daily(labelled_log)

    def test_monotone_in_threshold(self, labelled_log):
        prev = None
        for t in range(0, 401, 25):
            cur = risk_threshold_filter(labelled_log, t).values
            if prev is not None:
                assert (prev <= cur).all()
            prev = cur


class TestCategoryStack:
    def test_counting_oracle(self):
        recs = [(0, "A", (0,) * 4)] * 5 + [(0, "B", (0,) * 4)] * 50 + [(1, "C", (0,) * 4)] * 500
        log = EventLog.from_records(recs)
        assert category_ranking(log) == ["A", "B", "C"]
        assert category_stack_series(log, 2).values.tolist() == [55, 0]

    def test_ties_broken_by_label(self):
        log = EventLog.from_records([(0, "b", (0,) * 4), (0, "a", (0,) * 4)])
        assert category_ranking(log) == ["a", "b"]

    def test_full_stack_and_single_rarest(self, labelled_log):
        ranking = category_ranking(labelled_log)
        assert category_stack_series(labelled_log, len(ranking)) == aggregate_daily(labelled_log)
        assert ranking[0] == "Virus Detected"
        rare = category_stack_series(labelled_log, 1)
        assert rare.total() == labelled_log.category_totals()["Virus Detected"]

    def test_k_out_of_range(self, labelled_log):
        with pytest.raises(ParameterError):
            category_stack_series(labelled_log, 7)

    def test_monotone_in_k(self, labelled_log):
        series = [category_stack_series(labelled_log, k).values for k in range(1, 7)]
        assert all((a <= b).all() for a, b in zip(series, series[1:]))


def test_apply_scheme_dispatch(labelled_log):
    assert len(apply_scheme(RiskThreshold(100), labelled_log)) == 1
    assert len(apply_scheme(CategoryStack(3), labelled_log)) == 1
    assert len(apply_scheme(BinomialThinning(0.5, 4), labelled_log)) == 4
    with pytest.raises(ParameterError):
        apply_scheme(RiskThreshold(10), CountSeries([1, 2]))


def test_effective_rate_edges():
    x = CountSeries([1, 2, 3])
    assert effective_rate(x, x) == 1.0
    assert effective_rate(CountSeries([0, 0, 0]), x) == 0.0
    with pytest.raises(DegenerateSeriesError):
        effective_rate(x, CountSeries([0, 0, 0]))
