import numpy as np
import pytest

from conftest import assert_gradients_match
from fuzzygan.fuzzy import (
    FuzzyPartitionSpec,
    fuzzy_forward,
    partition_and_harmonize,
    product_aggregate,
    reichenbach,
    sigmoidal_implication,
    t_conorm,
    t_norm,
)
from fuzzygan.tensor import DimensionError, DomainError, Tensor, reduce_sum

# Independently computed with 50-digit arithmetic (mpmath), frozen here.
SIGMOIDAL_AT_HALF_HALF = 0.91374205555743701949  # t = s = 0.5, so I_RC = 0.75
WORKED_HEAD = [0.9, 0.8, 0.7, 0.6, 0.5]
WORKED_IRC = [0.856, 0.874]
WORKED_SIGMOIDAL = [0.97134173635086040047, 0.97710882138381766803]
WORKED_AGGREGATE = 0.94910657916670016835


def vec(values):
    return Tensor(np.atleast_2d(np.asarray(values, dtype=np.float64)))


class TestPartitionSpec:
    def test_defaults(self):
        spec = FuzzyPartitionSpec()
        assert (spec.n, spec.j, spec.k, spec.l, spec.m) == (5, 1, 2, 1, 1)
        assert spec.antecedent_width == 2
        assert spec.consequent_width == 1
        assert spec.implication_width == 2

    def test_sizes_must_sum_to_n(self):
        with pytest.raises(DomainError):
            FuzzyPartitionSpec(n=5, j=1, k=1, l=1, m=1)

    def test_sizes_must_be_positive(self):
        with pytest.raises(DomainError):
            FuzzyPartitionSpec(n=3, j=0, k=1, l=1, m=1)


class TestTNorm:
    def test_one_is_identity(self, rng):
        a = vec(rng.uniform(0, 1, 6))
        out = t_norm(vec(np.ones(6)), a)
        assert np.array_equal(out.data, a.data)

    def test_half_half(self):
        assert t_norm(vec([0.5]), vec([0.5])).item() == 0.25

    def test_elementwise(self):
        out = t_norm(vec([0.2, 0.9]), vec([0.5, 0.1]))
        assert np.allclose(out.data, [[0.1, 0.09]])

    def test_rejects_out_of_range(self):
        with pytest.raises(DomainError):
            t_norm(vec([1.2]), vec([0.5]))
        with pytest.raises(DomainError):
            t_norm(vec([0.5]), vec([-0.1]))

    def test_rejects_length_mismatch(self):
        with pytest.raises(DimensionError):
            t_norm(vec([0.5, 0.5]), vec([0.5]))


class TestTConorm:
    def test_zero_is_identity(self, rng):
        a = vec(rng.uniform(0, 1, 6))
        out = t_conorm(vec(np.zeros(6)), a)
        assert np.array_equal(out.data, a.data)

    def test_one_annihilates(self):
        assert t_conorm(vec([1.0]), vec([0.3])).item() == 1.0

    def test_half_half(self):
        assert t_conorm(vec([0.5]), vec([0.5])).item() == 0.75


class TestReichenbach:
    def test_boundary_axioms(self):
        assert reichenbach(vec([1.0]), vec([0.0])).item() == 0.0
        assert reichenbach(vec([0.0]), vec([0.0])).item() == 1.0
        assert reichenbach(vec([1.0]), vec([1.0])).item() == 1.0

    def test_half_half(self):
        assert reichenbach(vec([0.5]), vec([0.5])).item() == 0.75

    def test_decreasing_in_antecedent(self):
        low = reichenbach(vec([0.2]), vec([0.3])).item()
        high = reichenbach(vec([0.8]), vec([0.3])).item()
        assert low > high


class TestSigmoidalImplication:
    def test_boundaries_preserved(self):
        assert sigmoidal_implication(vec([1.0]), vec([1.0])).item() == pytest.approx(1.0, abs=1e-12)
        assert sigmoidal_implication(vec([0.0]), vec([0.0])).item() == pytest.approx(1.0, abs=1e-12)
        assert sigmoidal_implication(vec([1.0]), vec([0.0])).item() == pytest.approx(0.0, abs=1e-12)

    def test_frozen_value_at_half_half(self):
        out = sigmoidal_implication(vec([0.5]), vec([0.5]))
        assert out.item() == pytest.approx(SIGMOIDAL_AT_HALF_HALF, abs=1e-12)

    def test_monotone_in_both_arguments(self):
        grid = np.linspace(0.0, 1.0, 21)
        for c in (0.0, 0.3, 0.7, 1.0):
            falling = [sigmoidal_implication(vec([t]), vec([c])).item() for t in grid]
            assert all(x >= y - 1e-12 for x, y in zip(falling, falling[1:]))
            rising = [sigmoidal_implication(vec([c]), vec([s])).item() for s in grid]
            assert all(x <= y + 1e-12 for x, y in zip(rising, rising[1:]))

    def test_output_in_unit_interval(self, rng):
        t = vec(rng.uniform(0, 1, 500))
        s = vec(rng.uniform(0, 1, 500))
        out = sigmoidal_implication(t, s).data
        assert out.min() >= 0.0 and out.max() <= 1.0


class TestProductAggregate:
    def test_all_ones(self):
        assert product_aggregate(vec(np.ones(4))).item() == 1.0

    def test_half_half(self):
        assert product_aggregate(vec([0.5, 0.5])).item() == 0.25

    def test_zero_annihilates(self):
        assert product_aggregate(vec([0.9, 0.0, 0.7])).item() == 0.0

    def test_symmetric_under_permutation(self, rng):
        row = rng.uniform(0, 1, 7)
        base = product_aggregate(vec(row)).item()
        for _ in range(5):
            assert product_aggregate(vec(rng.permutation(row))).item() == pytest.approx(
                base, abs=1e-15
            )

    def test_increasing_in_each_entry(self, rng):
        row = rng.uniform(0.1, 0.9, 5)
        base = product_aggregate(vec(row)).item()
        for i in range(5):
            bumped = row.copy()
            bumped[i] = min(1.0, bumped[i] + 0.05)
            assert product_aggregate(vec(bumped)).item() >= base

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            product_aggregate(Tensor(np.empty((3, 0))))


class TestPartitionAndHarmonize:
    def test_worked_example(self):
        a, b, c, d = partition_and_harmonize(vec(WORKED_HEAD), FuzzyPartitionSpec())
        assert a.data.tolist() == [[0.9, 0.9]]
        assert b.data.tolist() == [[0.8, 0.7]]
        assert c.data.tolist() == [[0.6]]
        assert d.data.tolist() == [[0.5]]

    def test_uniform_partition_is_pure_slices(self):
        spec = FuzzyPartitionSpec(n=4, j=1, k=1, l=1, m=1)
        a, b, c, d = partition_and_harmonize(vec([0.1, 0.2, 0.3, 0.4]), spec)
        assert [t.data.tolist() for t in (a, b, c, d)] == [[[0.1]], [[0.2]], [[0.3]], [[0.4]]]

    def test_width_mismatch(self):
        with pytest.raises(DimensionError):
            partition_and_harmonize(vec([0.1, 0.2]), FuzzyPartitionSpec())

    def test_repeated_column_gradient_accumulates(self, rng):
        head = Tensor(rng.uniform(0.1, 0.9, (3, 5)), requires_grad=True)

        def build():
            a, b, c, d = partition_and_harmonize(head, FuzzyPartitionSpec())
            return reduce_sum(t_norm(a, b)) + reduce_sum(t_conorm(c, d))

        assert_gradients_match(build, [head])


class TestFuzzyForward:
    def test_all_ones_head(self):
        out = fuzzy_forward(vec(np.ones(5)))
        assert out.item() == pytest.approx(1.0, abs=1e-12)

    def test_worked_example_intermediates_and_aggregate(self):
        spec = FuzzyPartitionSpec()
        a, b, c, d = partition_and_harmonize(vec(WORKED_HEAD), spec)
        conj = t_norm(a, b)
        disj = t_conorm(c, d)
        irc = reichenbach(conj, Tensor(np.repeat(disj.data, 2, axis=1)))
        assert np.allclose(irc.data, [WORKED_IRC], atol=1e-12, rtol=0.0)
        sig = sigmoidal_implication(conj, Tensor(np.repeat(disj.data, 2, axis=1)))
        assert np.allclose(sig.data, [WORKED_SIGMOIDAL], atol=1e-12, rtol=0.0)
        assert fuzzy_forward(vec(WORKED_HEAD)).item() == pytest.approx(
            WORKED_AGGREGATE, abs=1e-10
        )

    def test_output_always_in_unit_interval(self):
        rng = np.random.default_rng(42)
        heads = Tensor(rng.uniform(0, 1, (10_000, 5)))
        out = fuzzy_forward(heads).data
        assert out.shape == (10_000, 1)
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_batch_rows_are_independent(self, rng):
        rows = rng.uniform(0, 1, (4, 5))
        joint = fuzzy_forward(Tensor(rows)).data
        single = np.vstack([fuzzy_forward(Tensor(rows[i : i + 1])).data for i in range(4)])
        assert np.array_equal(joint, single)

    def test_gradients_match_finite_differences(self, rng):
        head = Tensor(rng.uniform(0.05, 0.95, (4, 5)), requires_grad=True)
        assert_gradients_match(lambda: reduce_sum(fuzzy_forward(head)), [head])

    def test_gradients_with_wide_partition(self, rng):
        spec = FuzzyPartitionSpec(n=8, j=2, k=3, l=1, m=2)
        head = Tensor(rng.uniform(0.05, 0.95, (3, 8)), requires_grad=True)
        assert_gradients_match(lambda: reduce_sum(fuzzy_forward(head, spec)), [head])

    def test_rejects_out_of_range_head(self):
        with pytest.raises(DomainError):
            fuzzy_forward(vec([0.5, 0.5, 1.5, 0.5, 0.5]))


SWEEP_N = 10_000


@pytest.fixture(scope="module")
def triples():
    rng = np.random.default_rng(2024)
    return [vec(rng.uniform(0, 1, SWEEP_N)) for _ in range(3)]


class TestAxiomSweeps:
    """Vectorized random sweeps over many truth triples."""

    N = SWEEP_N

    def test_t_norm_axioms(self, triples):
        a, b, c = triples
        assert np.array_equal(t_norm(a, b).data, t_norm(b, a).data)
        left = t_norm(t_norm(a, b), c).data
        right = t_norm(a, t_norm(b, c)).data
        assert np.max(np.abs(left - right)) <= 1e-12
        assert np.array_equal(t_norm(vec(np.ones(self.N)), a).data, a.data)
        # monotone: T(a, b1) <= T(a, b2) when b1 <= b2
        b1 = Tensor(np.minimum(b.data, c.data))
        b2 = Tensor(np.maximum(b.data, c.data))
        assert np.all(t_norm(a, b1).data <= t_norm(a, b2).data + 1e-15)

    def test_t_conorm_axioms(self, triples):
        a, b, c = triples
        assert np.array_equal(t_conorm(a, b).data, t_conorm(b, a).data)
        left = t_conorm(t_conorm(a, b), c).data
        right = t_conorm(a, t_conorm(b, c)).data
        assert np.max(np.abs(left - right)) <= 1e-12
        assert np.array_equal(t_conorm(vec(np.zeros(self.N)), a).data, a.data)
        b1 = Tensor(np.minimum(b.data, c.data))
        b2 = Tensor(np.maximum(b.data, c.data))
        assert np.all(t_conorm(a, b1).data <= t_conorm(a, b2).data + 1e-15)

    def test_results_stay_in_unit_interval(self, triples):
        a, b, _ = triples
        for out in (t_norm(a, b), t_conorm(a, b), reichenbach(a, b), sigmoidal_implication(a, b)):
            assert out.data.min() >= 0.0 and out.data.max() <= 1.0
