from __future__ import annotations

import numpy as np
import pytest

from _oracles import brute_bin_counts, brute_median
from fuzzanon.clustering import ClusterAssignment, feature_matrix, ward_cluster
from fuzzanon.data import Attribute, AttributeRole, DataTable, Schema
from fuzzanon.errors import FuzzanonError
from fuzzanon.sensitivity import (BinSpec, bin_numeric,
                                  categorical_probabilities,
                                  class_probabilities, flag_sensitive,
                                  median_threshold)


def one_cluster(n: int) -> ClusterAssignment:
    return ClusterAssignment(1, np.ones(n, dtype=np.int64), {1: n})


def numeric_table(values) -> DataTable:
    schema = Schema((Attribute("v", AttributeRole.SENSITIVE_NUMERIC,
                               "numeric"),))
    return DataTable(schema, [[v] for v in values])


def categorical_table(values) -> DataTable:
    schema = Schema((Attribute("v", AttributeRole.SENSITIVE_CATEGORICAL,
                               "categorical"),))
    return DataTable(schema, [[v] for v in values])


class TestBinNumeric:
    def test_sturges_100_values(self):
        values = [1 + 99 * i / 99 for i in range(100)]
        spec = bin_numeric(values)
        assert spec.n_bins == 8  # ceil(1 + log2(100))
        for lcl, ucl in spec.bins:
            assert ucl - lcl == pytest.approx(12.375)
        assert spec.bins[0][0] == 1.0
        assert spec.bins[-1][1] == 100.0

    def test_degenerate_single_value(self):
        assert bin_numeric([42.0, 42.0, 42.0]).bins == ((42.0, 42.0),)

    def test_two_values_two_bins(self):
        spec = bin_numeric([10.0, 20.0])
        assert spec.bins == ((10.0, 15.0), (15.0, 20.0))
        assert spec.index_of(10.0) == 0
        assert spec.index_of(14.999) == 0
        assert spec.index_of(15.0) == 1
        assert spec.index_of(20.0) == 1

    def test_fixed_count_override(self):
        spec = bin_numeric([0.0, 10.0], rule=5)
        assert spec.n_bins == 5

    def test_empty_values_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            bin_numeric([])

    def test_bad_rule_rejected(self):
        with pytest.raises(ValueError, match="rule"):
            bin_numeric([1.0, 2.0], rule="scott")
        with pytest.raises(ValueError, match="rule"):
            bin_numeric([1.0, 2.0], rule=0)

    def test_bins_contiguous_and_cover_range(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            values = list(rng.uniform(-50, 50, int(rng.integers(2, 200))))
            spec = bin_numeric(values)
            assert spec.bins[0][0] == min(values)
            assert spec.bins[-1][1] == max(values)
            for (_, a_ucl), (b_lcl, _) in zip(spec.bins, spec.bins[1:]):
                assert a_ucl == b_lcl

    def test_index_matches_stored_limits(self):
        rng = np.random.default_rng(8)
        values = list(rng.uniform(0, 1, 500))
        spec = bin_numeric(values)
        for v in values:
            i = spec.index_of(v)
            lcl, ucl = spec.bins[i]
            if i == spec.n_bins - 1:
                assert lcl <= v <= ucl
            else:
                assert lcl <= v < ucl


class TestClassProbabilities:
    def test_custom_bins_hand_counted(self):
        table = numeric_table([20.0, 21.0, 35.0, 36.0, 37.0])
        bins = BinSpec(((20.0, 30.0), (30.0, 37.0)))
        dist = class_probabilities(table, one_cluster(5), 1, "v", bins)
        assert dist.probabilities == (2 / 5, 3 / 5)

    def test_single_occupied_bin(self):
        table = numeric_table([5.0, 5.5, 6.0, 5.2])
        bins = BinSpec(((0.0, 10.0), (10.0, 20.0), (20.0, 30.0)))
        dist = class_probabilities(table, one_cluster(4), 1, "v", bins)
        assert dist.probabilities == (1.0, 0.0, 0.0)

    def test_uniform_two_bins(self):
        table = numeric_table([float(i) for i in range(10)])
        bins = BinSpec(((0.0, 4.5), (4.5, 9.0)))
        dist = class_probabilities(table, one_cluster(10), 1, "v", bins)
        assert dist.probabilities == (0.5, 0.5)

    def test_missing_excluded_from_counts(self):
        table = numeric_table([1.0, None, 3.0, None])
        bins = bin_numeric([1.0, 3.0])
        dist = class_probabilities(table, one_cluster(4), 1, "v", bins)
        assert dist.total == 2
        assert sum(dist.counts) == 2

    def test_brute_recount_matches_exactly(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            values = [float(v) for v in
                      rng.uniform(-10, 10, int(rng.integers(1, 50)))]
            spec = bin_numeric(values)
            dist = class_probabilities(numeric_table(values),
                                       one_cluster(len(values)), 1, "v", spec)
            counts = brute_bin_counts(values, spec.bins)
            assert list(dist.counts) == counts
            assert list(dist.probabilities) == [c / len(values) for c in counts]

    def test_empty_cluster_rejected(self):
        table = numeric_table([1.0])
        assignment = ClusterAssignment(2, np.array([1]), {1: 1, 2: 0})
        with pytest.raises(ValueError, match="empty"):
            class_probabilities(table, assignment, 2, "v",
                                bin_numeric([1.0]))

    def test_all_missing_cluster_rejected(self):
        table = numeric_table([None, None])
        with pytest.raises(ValueError, match="no values"):
            class_probabilities(table, one_cluster(2), 1, "v",
                                BinSpec(((0.0, 1.0),)))


class TestCategoricalProbabilities:
    def test_hand_counted(self):
        dist = categorical_probabilities(categorical_table(["M", "M", "F"]),
                                         one_cluster(3), 1, "v")
        assert dist.classes == ("F", "M")
        assert dist.probability_of("M") == pytest.approx(2 / 3)
        assert dist.probability_of("F") == pytest.approx(1 / 3)

    def test_single_category(self):
        dist = categorical_probabilities(categorical_table(["x", "x"]),
                                         one_cluster(2), 1, "v")
        assert dist.probabilities == (1.0,)

    def test_four_symmetric_categories(self):
        dist = categorical_probabilities(
            categorical_table(["a", "b", "c", "d"]), one_cluster(4), 1, "v")
        assert dist.probabilities == (0.25, 0.25, 0.25, 0.25)

    def test_unseen_category_probability_zero(self):
        dist = categorical_probabilities(categorical_table(["a", "b"]),
                                         one_cluster(2), 1, "v")
        assert dist.probability_of("zz") == 0.0


class TestMedianThreshold:
    def test_single_entry(self):
        dist = categorical_probabilities(categorical_table(["x"]),
                                         one_cluster(1), 1, "v")
        assert median_threshold(dist).median == 1.0

    def test_odd_count_picks_middle(self):
        table = categorical_table(["a", "a", "b", "b", "b", "c"])
        # probabilities: a 2/6, b 3/6, c 1/6 -> median 2/6
        dist = categorical_probabilities(table, one_cluster(6), 1, "v")
        assert median_threshold(dist).median == pytest.approx(2 / 6)

    def test_even_count_averages_middles(self):
        probs = (0.1, 0.2, 0.3, 0.4)
        from fuzzanon.sensitivity import FrequencyDistribution
        dist = FrequencyDistribution(1, "v", "categorical",
                                     ("a", "b", "c", "d"), (1, 2, 3, 4),
                                     probs, 10)
        assert median_threshold(dist).median == pytest.approx(0.25)

    def test_matches_brute_median(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            values = [str(v) for v in rng.integers(0, 8,
                                                   int(rng.integers(1, 40)))]
            dist = categorical_probabilities(categorical_table(values),
                                             one_cluster(len(values)), 1, "v")
            threshold = median_threshold(dist)
            assert threshold.median == pytest.approx(
                brute_median(dist.probabilities))
            assert min(dist.probabilities) <= threshold.median \
                <= max(dist.probabilities)
            at_least = sum(1 for p in dist.probabilities
                           if p >= threshold.median)
            assert at_least >= len(dist.probabilities) // 2


def fixture_table() -> tuple[DataTable, ClusterAssignment]:
    """Six records, one cluster, three monitored attributes."""
    schema = Schema((
        Attribute("age", AttributeRole.QUASI_NUMERIC, "numeric"),
        Attribute("job", AttributeRole.SENSITIVE_CATEGORICAL, "categorical"),
        Attribute("income", AttributeRole.SENSITIVE_CATEGORICAL,
                  "categorical"),
        Attribute("city", AttributeRole.NON_SENSITIVE, "categorical"),
    ))
    rows = [
        [30.0, "cook", "low", "X"],
        [31.0, "cook", "low", "Y"],
        [32.0, "cook", "low", "X"],
        [33.0, "clerk", "low", "Y"],
        [55.0, "cook", "high", "X"],
        [56.0, "clerk", "high", "Y"],
    ]
    return DataTable(schema, rows), one_cluster(6)


def build_analysis(table, assignment, monitored, bins_rule="sturges"):
    from fuzzanon.anonymizer import build_distributions
    return build_distributions(table, assignment, monitored, bins_rule)


class TestFlagSensitive:
    def test_conjunction_against_brute_oracle(self):
        table, assignment = fixture_table()
        monitored = ["age", "job", "income"]
        distributions, thresholds = build_analysis(table, assignment,
                                                   monitored)
        mask = flag_sensitive(table, assignment, distributions, thresholds,
                              monitored)
        # Brute conjunction: recount probabilities per cell directly.
        for row in range(6):
            expected = True
            for attr in monitored:
                cell = table.cell(row, attr)
                dist = distributions[(1, attr)]
                prob = dist.probability_of(cell)
                expected &= prob >= thresholds[(1, attr)].median
            assert bool(mask.record_flags[row]) == expected, row

    def test_partial_pass_is_not_flagged(self):
        table, assignment = fixture_table()
        monitored = ["age", "job", "income"]
        distributions, thresholds = build_analysis(table, assignment,
                                                   monitored)
        mask = flag_sensitive(table, assignment, distributions, thresholds,
                              monitored)
        # Row 3 ("clerk", "low"): income passes (4/6 >= median) but job
        # fails (2/6 < median of {4/6, 2/6} = 0.5), so the record stays off.
        job = distributions[(1, "job")]
        assert job.probability_of("clerk") < thresholds[(1, "job")].median
        income = distributions[(1, "income")]
        assert income.probability_of("low") >= thresholds[(1, "income")].median
        assert not mask.record_flags[3]

    def test_empty_monitored_set_flags_nothing(self):
        table, assignment = fixture_table()
        mask = flag_sensitive(table, assignment, {}, {}, [])
        assert not mask.record_flags.any()
        assert mask.flagged_numeric_cells() == []
        assert mask.flagged_categorical_cells() == []

    def test_missing_cell_never_flagged(self):
        table, assignment = fixture_table()
        table = table.copy()
        table.rows[0][1] = None  # job missing for row 0
        monitored = ["age", "job", "income"]
        distributions, thresholds = build_analysis(table, assignment,
                                                   monitored)
        mask = flag_sensitive(table, assignment, distributions, thresholds,
                              monitored)
        assert not mask.record_flags[0]
        assert (0, "job") not in mask.flagged_categorical_cells()
        assert (0, "job") not in mask.unflagged_categorical_cells()

    def test_missing_distribution_pair_rejected(self):
        table, assignment = fixture_table()
        monitored = ["age", "job"]
        distributions, thresholds = build_analysis(table, assignment,
                                                   monitored)
        del distributions[(1, "job")]
        with pytest.raises(FuzzanonError, match="job"):
            flag_sensitive(table, assignment, distributions, thresholds,
                           monitored)

    def test_pairwise_policy_flags_cells_independently(self):
        table, assignment = fixture_table()
        monitored = ["age", "job", "income"]
        distributions, thresholds = build_analysis(table, assignment,
                                                   monitored)
        mask = flag_sensitive(table, assignment, distributions, thresholds,
                              monitored, policy="pairwise")
        for row in range(6):
            for attr in monitored:
                cell = table.cell(row, attr)
                expected = distributions[(1, attr)].probability_of(cell) \
                    >= thresholds[(1, attr)].median
                assert mask.is_flagged(row, attr) == expected

    def test_unknown_policy_rejected(self):
        table, assignment = fixture_table()
        with pytest.raises(ValueError, match="policy"):
            flag_sensitive(table, assignment, {}, {}, [], policy="or")

    def test_mask_partition_covers_monitored_cells(self, adults_sample):
        monitored = adults_sample.schema.monitored_names
        X = feature_matrix(adults_sample)
        assignment, _ = ward_cluster(X, 4)
        distributions, thresholds = build_analysis(adults_sample, assignment,
                                                   monitored)
        mask = flag_sensitive(adults_sample, assignment, distributions,
                              thresholds, monitored)
        da = set(mask.flagged_numeric_cells())
        ra = set(mask.unflagged_numeric_cells())
        ma = set(mask.flagged_categorical_cells())
        ua = set(mask.unflagged_categorical_cells())
        assert not (da & ra) and not (ma & ua) and not (da | ra) & (ma | ua)
        covered = da | ra | ma | ua
        expected = set()
        for row in range(adults_sample.n_rows):
            for attr in monitored:
                if adults_sample.cell(row, attr) is not None:
                    expected.add((row, attr))
        assert covered == expected

    def test_conjunction_containment(self, adults_sample):
        monitored = adults_sample.schema.monitored_names
        X = feature_matrix(adults_sample)
        assignment, _ = ward_cluster(X, 4)
        distributions, thresholds = build_analysis(adults_sample, assignment,
                                                   monitored)
        mask = flag_sensitive(adults_sample, assignment, distributions,
                              thresholds, monitored)
        flagged = set(np.flatnonzero(mask.record_flags))
        for attr in monitored:
            per_attr = set()
            for row in range(adults_sample.n_rows):
                cell = adults_sample.cell(row, attr)
                if cell is None:
                    continue
                cluster = int(assignment.labels[row])
                if distributions[(cluster, attr)].probability_of(cell) \
                        >= thresholds[(cluster, attr)].median:
                    per_attr.add(row)
            assert flagged <= per_attr

    def test_scaling_invariance(self):
        # Fixed bin count: the Sturges count would change with n, which is a
        # class-structure change, not a probability-scaling one.
        table, assignment = fixture_table()
        monitored = ["age", "job", "income"]
        dist1, thr1 = build_analysis(table, assignment, monitored,
                                     bins_rule=4)
        mask1 = flag_sensitive(table, assignment, dist1, thr1, monitored)

        tripled = DataTable(table.schema,
                            [list(r) for r in table.rows for _ in range(3)])
        assignment3 = one_cluster(18)
        dist3, thr3 = build_analysis(tripled, assignment3, monitored,
                                     bins_rule=4)
        mask3 = flag_sensitive(tripled, assignment3, dist3, thr3, monitored)

        for attr in monitored:
            assert dist3[(1, attr)].probabilities == \
                dist1[(1, attr)].probabilities
            assert thr3[(1, attr)].median == thr1[(1, attr)].median
        for row in range(6):
            for copy in range(3):
                assert mask3.record_flags[3 * row + copy] == \
                    mask1.record_flags[row]

    def test_distribution_sums_random_tables(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            n = int(rng.integers(2, 40))
            values = [float(v) for v in rng.normal(40, 10, n)]
            k = int(rng.integers(1, min(4, n) + 1))
            table = numeric_table(values)
            assignment, _ = ward_cluster(feature_matrix(table), k)
            dists, _ = build_analysis(table, assignment, ["v"])
            for dist in dists.values():
                assert sum(dist.probabilities) == pytest.approx(1.0, abs=1e-9)
                assert all(0.0 <= p <= 1.0 for p in dist.probabilities)
                assert sum(dist.counts) == dist.total
