import numpy as np
import pytest

from superosc.expr import expression_observable
from superosc.phase import (
    PhaseState,
    StateBatch,
    angular_momentum,
    angular_momentum_observable,
    casimir_integral,
    casimir_observable,
    coordinate_observable,
    generator_observable,
    poisson_bracket,
    seed,
    sl2_realize,
    universal_integrals,
)
from superosc.verify import sample_box


def random_states(n, count, seed_value=0):
    rng = np.random.default_rng(seed_value)
    return StateBatch(rng.uniform(-1, 1, (count, n)), rng.uniform(-1, 1, (count, n)))


class TestPhaseState:
    def test_basic(self):
        s = PhaseState([1.0, 2.0], [3.0, 4.0])
        assert s.n == 2
        assert np.array_equal(s.as_vector(), [1, 2, 3, 4])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            PhaseState([1.0], [1.0, 2.0])

    def test_nonfinite(self):
        with pytest.raises(ValueError):
            PhaseState([np.nan], [1.0])

    def test_empty(self):
        with pytest.raises(ValueError):
            PhaseState([], [])

    def test_seed_op(self):
        s = PhaseState([1.0, 0.0], [0.0, 3.0])
        assert seed(s, 3).value == 3.0


class TestSl2Realize:
    def test_orthogonal_unit_vectors(self):
        point = sl2_realize(PhaseState([1, 0, 0], [0, 1, 0]))
        assert (point.jminus, point.jplus, point.j3) == (1, 1, 0)

    def test_n1_saturates_cauchy_schwarz(self):
        point = sl2_realize(PhaseState([2.0], [3.0]))
        assert (point.jminus, point.jplus, point.j3) == (4, 9, 6)
        assert point.j3 ** 2 == point.jminus * point.jplus

    def test_hand_value(self):
        point = sl2_realize(PhaseState([1, 1], [2, -1]))
        assert (point.jminus, point.jplus, point.j3) == (2, 5, 1)

    def test_cauchy_schwarz_inequality(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            s = PhaseState(rng.uniform(-2, 2, 4), rng.uniform(-2, 2, 4))
            point = sl2_realize(s)
            assert point.jminus >= 0 and point.jplus >= 0
            assert point.j3 ** 2 <= point.jminus * point.jplus * (1 + 1e-14)


class TestBracket:
    def test_canonical_pair(self):
        s = PhaseState([0.3, -0.7], [0.2, 0.9])
        q1 = coordinate_observable("q", 1)
        p1 = coordinate_observable("p", 1)
        assert poisson_bracket(q1, p1, s) == pytest.approx(1.0, abs=1e-15)
        q2 = coordinate_observable("q", 2)
        assert poisson_bracket(q1, q2, s) == 0.0

    def test_j3_jplus(self):
        s = PhaseState([1, 1], [2, -1])
        value = poisson_bracket(generator_observable("J3"),
                                generator_observable("Jp"), s)
        assert value == pytest.approx(10.0, abs=1e-13)  # 2 Jp with Jp = 5

    def test_jminus_jplus(self):
        s = PhaseState([2.0], [3.0])
        value = poisson_bracket(generator_observable("Jm"),
                                generator_observable("Jp"), s)
        assert value == pytest.approx(24.0, abs=1e-13)  # 4 J3 with J3 = 6

    def test_sl2_closure_random_states(self):
        jm = generator_observable("Jm")
        jp = generator_observable("Jp")
        j3 = generator_observable("J3")
        for n in (2, 5):
            batch = random_states(n, 100, seed_value=n)
            jm_v, jp_v, j3_v = (np.einsum("si,si->s", batch.q, batch.q),
                                np.einsum("si,si->s", batch.p, batch.p),
                                np.einsum("si,si->s", batch.q, batch.p))
            checks = [
                (poisson_bracket(j3, jp, batch), 2.0 * jp_v),
                (poisson_bracket(j3, jm, batch), -2.0 * jm_v),
                (poisson_bracket(jm, jp, batch), 4.0 * j3_v),
            ]
            for got, expected in checks:
                rel = np.abs(got - expected) / (np.abs(expected) + 1.0)
                assert np.max(rel) <= 1e-12

    def test_so_n_closure(self):
        n = 4
        batch = random_states(n, 50, seed_value=9)
        ams = {(i, j): angular_momentum_observable(i, j)
               for i in range(1, n + 1) for j in range(i + 1, n + 1)}
        values = {key: obs.eval_jet(batch).value for key, obs in ams.items()}
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                for k in range(j + 1, n + 1):
                    checks = [
                        (poisson_bracket(ams[i, j], ams[i, k], batch), values[j, k]),
                        (poisson_bracket(ams[i, j], ams[j, k], batch), -values[i, k]),
                        (poisson_bracket(ams[i, k], ams[j, k], batch), values[i, j]),
                    ]
                    for got, expected in checks:
                        assert np.max(np.abs(got - expected)) <= 1e-12


class TestAngularMomentum:
    def test_unit_rotation_generator(self):
        assert angular_momentum(PhaseState([1, 0], [0, 1]), 1, 2) == 1.0

    def test_parallel_vectors_vanish(self):
        p = np.array([0.3, -0.4, 0.5])
        s = PhaseState(2.0 * p, p)
        for i in range(1, 4):
            for j in range(i + 1, 4):
                assert angular_momentum(s, i, j) == 0.0

    def test_hand_value(self):
        assert angular_momentum(PhaseState([1, 2, 0], [0, 1, 1]), 1, 2) == 1.0

    def test_bad_indices(self):
        s = PhaseState([1, 2], [3, 4])
        with pytest.raises(ValueError):
            angular_momentum(s, 2, 1)
        with pytest.raises(ValueError):
            angular_momentum(s, 1, 3)


class TestChainIntegrals:
    def test_single_term(self):
        s = PhaseState([1, 0], [0, 1])
        assert casimir_integral(s, 2, "left") == 1.0
        assert casimir_integral(s, 2, "right") == 1.0

    def test_parallel_vanishes(self):
        p = np.array([0.25, -0.5, 1.0, 0.75])
        s = PhaseState(2.0 * p, p)
        for m in range(2, 5):
            assert casimir_integral(s, m, "left") == 0.0
            assert casimir_integral(s, m, "right") == 0.0

    def test_top_level_chains_agree(self):
        s = PhaseState([1, 2, 0], [0, 1, 1])
        left = casimir_integral(s, 3, "left")
        right = casimir_integral(s, 3, "right")
        assert left == right == 6.0

    def test_m_out_of_range(self):
        s = PhaseState([1, 2], [3, 4])
        with pytest.raises(ValueError):
            casimir_integral(s, 1, "left")
        with pytest.raises(ValueError):
            casimir_integral(s, 3, "left")
        with pytest.raises(ValueError):
            casimir_integral(s, 2, "middle")

    def test_universal_count(self):
        assert len(universal_integrals(1)) == 0
        assert len(universal_integrals(2)) == 1
        assert len(universal_integrals(4)) == 5
        assert len(universal_integrals(8)) == 13

    def test_chain_involution(self):
        n = 5
        batch = random_states(n, 60, seed_value=4)
        for chain in ("left", "right"):
            obs = [casimir_observable(n, m, chain) for m in range(2, n + 1)]
            for i in range(len(obs)):
                for j in range(i + 1, len(obs)):
                    values = poisson_bracket(obs[i], obs[j], batch)
                    assert np.max(np.abs(values)) <= 1e-12

    def test_observable_matches_direct_value(self):
        batch = random_states(4, 20, seed_value=5)
        obs = casimir_observable(4, 3, "right")
        values = obs.eval_jet(batch).value
        for k in range(batch.size):
            assert values[k] == pytest.approx(
                casimir_integral(batch.state(k), 3, "right"), rel=1e-14)


class TestUniversality:
    def test_generator_functions_commute_with_chains(self):
        # Random rational functions of the generators commute with every
        # chain integral; this is the whole point of the construction.
        n = 4
        batch = sample_box(n, 80, seed=21)
        rng = np.random.default_rng(7)
        for _ in range(5):
            c = rng.uniform(-2, 2, 6)
            text = (f"{c[0]:.4f}*Jp + {c[1]:.4f}*Jm + {c[2]:.4f}*J3"
                    f" + {c[3]:.4f}*Jm^2 + {c[4]:.4f}*J3*Jp"
                    f" + {c[5]:.4f}*Jp/(1.5 + Jm)")
            f = expression_observable(text, {})
            for g in universal_integrals(n):
                jet_f = f.eval_jet(batch)
                jet_g = g.eval_jet(batch)
                scale = (np.linalg.norm(jet_f.grad, axis=1)
                         * np.linalg.norm(jet_g.grad, axis=1) + 1.0)
                residual = np.abs(poisson_bracket(f, g, batch)) / scale
                assert np.max(residual) <= 1e-10
