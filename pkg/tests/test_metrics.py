import math

import pytest

from redkit.compressor import Backend
from redkit.errors import InputError
from redkit.harness import gen_kg_novelty
from redkit.kg import encode, strip_novel
from redkit.metrics import (
    AgentSnapshots,
    Curriculum,
    TaskSpec,
    adaptability_aeff,
    aggregate,
    experience_eff,
    fold_bytes,
    fold_kg,
    priors_pd,
    red,
    red_estimates,
)

from conftest import structured_bytes


def kg_snapshots(seed=0, base=100, novel=20):
    pre, post, marks, steps = gen_kg_novelty(seed, base, novel)
    pretr = strip_novel(post, marks)
    return AgentSnapshots(encode(pre), encode(pretr), encode(post)), steps


class TestRed:
    def test_identical_snapshots_near_zero(self):
        x = structured_bytes(2048, 0)
        snaps = AgentSnapshots(x, x, x)
        assert red(snaps, Backend.LZ) <= 0.1

    def test_empty_pretr_near_one(self):
        x = structured_bytes(2048, 1)
        snaps = AgentSnapshots(b"", b"", x)
        assert red(snaps, Backend.LZ) >= 0.9

    def test_kg_inputs_report_both_estimators(self):
        snaps, _ = kg_snapshots()
        estimates = red_estimates(snaps, Backend.LZ)
        assert estimates["edit_script"] is not None
        assert estimates["red"] <= estimates["conditional"]
        assert estimates["red"] <= estimates["edit_script"]
        assert estimates["red"] == min(estimates["conditional"], estimates["edit_script"])

    def test_non_kg_inputs_single_estimator(self):
        x = structured_bytes(1024, 2)
        estimates = red_estimates(AgentSnapshots(x, x, x), Backend.LZ)
        assert estimates["edit_script"] is None

    def test_bounds(self):
        snaps, _ = kg_snapshots(3)
        value = red(snaps, Backend.LZ)
        assert 0.0 <= value <= 1.0

    def test_empty_post_rejected(self):
        with pytest.raises(InputError):
            AgentSnapshots(b"x", b"x", b"")


class TestPriors:
    def test_full_prior(self):
        x = structured_bytes(2048, 3)
        assert priors_pd(AgentSnapshots(x, x, x), Backend.LZ) >= 0.9

    def test_no_prior(self):
        x = structured_bytes(2048, 4)
        assert priors_pd(AgentSnapshots(b"", b"", x), Backend.LZ) <= 0.1

    def test_partial_prior_strictly_between(self):
        pre, post, marks, _ = gen_kg_novelty(5, 60, 60)
        half = strip_novel(post, marks)
        snaps = AgentSnapshots(encode(half), encode(half), encode(post))
        value = priors_pd(snaps, Backend.LZ)
        assert 0.1 < value < 0.9

    def test_pd_red_consistency_band(self):
        # with pre == pretr both sides approximate the same conditional ratio
        snaps, _ = kg_snapshots(6)
        estimates = red_estimates(snaps, Backend.LZ)
        pd_value = priors_pd(snaps, Backend.LZ)
        assert abs((1.0 - pd_value) - estimates["red"]) <= 0.2


class TestExperience:
    def test_gains_non_negative_and_telescoping(self):
        snaps, steps = kg_snapshots(7)
        eeff, gains = experience_eff(
            snaps.post, Curriculum(tuple(steps)), Backend.LZ, fold_kg, snaps.pre
        )
        assert all(g >= 0.0 for g in gains)
        assert eeff >= 0.0
        assert len(gains) == len(steps)

    def test_duplicate_step_adds_nothing(self):
        snaps, steps = kg_snapshots(8, novel=10)
        base = Curriculum(tuple(steps))
        doubled = Curriculum(tuple(steps) + (steps[-1],))
        e1, _ = experience_eff(snaps.post, base, Backend.LZ, fold_kg, snaps.pre)
        e2, gains = experience_eff(snaps.post, doubled, Backend.LZ, fold_kg, snaps.pre)
        assert gains[-1] == 0.0
        assert abs(e2 - e1) <= 0.05

    def test_matches_red_when_curriculum_is_the_novelty(self):
        snaps, steps = kg_snapshots(9)
        eeff, _ = experience_eff(
            snaps.post, Curriculum(tuple(steps)), Backend.LZ, fold_kg, snaps.pre
        )
        assert abs(eeff - red(snaps, Backend.LZ)) <= 0.15

    def test_bytes_fold(self):
        post = structured_bytes(1024, 10)
        curriculum = Curriculum((post[:512], post[512:]))
        eeff, gains = experience_eff(post, curriculum, Backend.LZ, fold_bytes, b"")
        assert eeff > 0.5
        assert all(g >= 0 for g in gains)

    def test_empty_curriculum_rejected(self):
        with pytest.raises(InputError):
            experience_eff(b"x", Curriculum(()), Backend.LZ)


class TestAdaptability:
    def test_plain_ratio(self):
        assert adaptability_aeff(0.5, 0.5, 0.5).value == 0.5

    def test_zero_red_zero_difficulty(self):
        result = adaptability_aeff(0.0, 0.7, 0.2)
        assert result.value == 0.0 and result.flags == ()

    def test_infinity_sentinel(self):
        result = adaptability_aeff(0.8, 0.0, 0.0)
        assert math.isinf(result.value)
        assert "infinite" in result.flags[0]

    def test_degenerate_zero_over_zero(self):
        result = adaptability_aeff(0.0, 0.0, 0.0)
        assert result.value == 0.0
        assert "degenerate" in result.flags

    def test_negative_rejected(self):
        with pytest.raises(InputError):
            adaptability_aeff(-0.1, 0.5, 0.5)


class TestAggregate:
    def task(self, omega=1.0, tid="t"):
        return TaskSpec(tid, 0.9, omega)

    def curriculum(self, pb=1.0):
        return Curriculum((b"step",), pb)

    def test_single_task_single_curriculum(self):
        value = aggregate([(self.task(), [(self.curriculum(), 0.42)])])
        assert value == 0.42

    def test_zero_value_task_contributes_nothing(self):
        results = [
            (self.task(0.0, "nuisance"), [(self.curriculum(), 123.0)]),
            (self.task(1.0, "real"), [(self.curriculum(), 0.4)]),
        ]
        assert aggregate(results) == 0.2

    def test_two_tasks_mean(self):
        results = [
            (self.task(1.0, "a"), [(self.curriculum(), 0.2)]),
            (self.task(1.0, "b"), [(self.curriculum(), 0.6)]),
        ]
        assert aggregate(results) == pytest.approx(0.4)

    def test_linear_in_omega(self):
        base = [(self.task(1.0), [(self.curriculum(), 0.3)])]
        scaled = [(self.task(2.5), [(self.curriculum(), 0.3)])]
        assert aggregate(scaled) == pytest.approx(2.5 * aggregate(base))

    def test_linear_in_pb(self):
        one = [(self.task(), [(self.curriculum(0.5), 0.4)])]
        two = [(self.task(), [(self.curriculum(0.25), 0.4)])]
        assert aggregate(one) == pytest.approx(2 * aggregate(two))

    def test_pb_sum_validated(self):
        results = [
            (self.task(), [(self.curriculum(0.7), 0.1), (self.curriculum(0.7), 0.2)])
        ]
        with pytest.raises(InputError):
            aggregate(results)

    def test_no_curricula_rejected(self):
        with pytest.raises(InputError):
            aggregate([(self.task(), [])])
