import numpy as np
import pytest

from superosc.errors import (
    ExprDomainError,
    ExprExponentError,
    ExprNameError,
    ExprSyntaxError,
)
from superosc.expr import (
    BinOp,
    Neg,
    Num,
    Pow,
    Sym,
    eval_jet,
    expression_observable,
    parse,
    symbols_of,
    unparse,
)
from superosc.phase import PhaseState, poisson_bracket, universal_integrals
from superosc.verify import sample_box

from oracles import random_expression


class TestParse:
    def test_euclidean_oscillator_shape(self):
        node = parse("Jp/2 + (omega^2/2)*Jm")
        assert isinstance(node, BinOp) and node.op == "+"
        assert node.lhs == BinOp("/", Sym("Jp"), Num(2.0))
        assert node.rhs == BinOp("*", BinOp("/", Pow(Sym("omega"), 2), Num(2.0)),
                                 Sym("Jm"))

    def test_conformal_ratio_shape(self):
        node = parse("(Jp + omega^2*Jm)/(a + Jm)")
        assert isinstance(node, BinOp) and node.op == "/"
        assert symbols_of(node) == {"Jp", "Jm", "omega", "a"}

    def test_stray_parenthesis(self):
        with pytest.raises(ExprSyntaxError) as info:
            parse("Jm + )")
        assert info.value.column == 6

    def test_trailing_tokens(self):
        with pytest.raises(ExprSyntaxError):
            parse("Jm Jm")

    def test_unexpected_character(self):
        with pytest.raises(ExprSyntaxError):
            parse("Jm & Jp")

    def test_empty_input(self):
        with pytest.raises(ExprSyntaxError):
            parse("")

    def test_number_forms(self):
        assert parse("2.5").value == 2.5
        assert parse("1e-3").value == 1e-3
        assert parse("2.5e+2").value == 250.0
        assert parse(".5").value == 0.5

    def test_unknown_symbol_with_declared_params(self):
        with pytest.raises(ExprNameError) as info:
            parse("Jm + omega*frequency", declared_params={"omega"})
        assert "frequency" in str(info.value)

    def test_non_integer_exponent(self):
        with pytest.raises(ExprExponentError):
            parse("Jm^2.5")
        with pytest.raises(ExprExponentError):
            parse("Jm^Jp")

    def test_exponent_forms(self):
        assert parse("Jm^2") == Pow(Sym("Jm"), 2)
        assert parse("Jm^-2") == Pow(Sym("Jm"), -2)
        assert parse("Jm^(-2)") == Pow(Sym("Jm"), -2)
        assert parse("Jm^(3)") == Pow(Sym("Jm"), 3)

    def test_chained_power_is_rejected(self):
        with pytest.raises(ExprSyntaxError):
            parse("Jm^2^3")

    def test_unary_minus_binds_below_power(self):
        assert parse("-Jm^2") == Neg(Pow(Sym("Jm"), 2))

    def test_whitespace_insignificant(self):
        assert parse("Jp /2+ ( omega^2 /2 ) * Jm") == parse("Jp/2+(omega^2/2)*Jm")

    def test_left_associativity(self):
        assert parse("1 - 2 - 3") == BinOp("-", BinOp("-", Num(1.0), Num(2.0)),
                                           Num(3.0))
        assert parse("8/4/2") == BinOp("/", BinOp("/", Num(8.0), Num(4.0)),
                                       Num(2.0))


class TestUnparse:
    CASES = [
        "Jp/2 + (omega^2/2)*Jm",
        "(Jp + omega^2*Jm)/(a + Jm)",
        "-Jm^2",
        "(-Jm)^2",
        "Jm - (Jp - J3)",
        "Jm/(Jp/(1.5 + Jm))",
        "Jm^-3*Jp",
        "--Jm",
        " (1 + 2*Jm)^2 / (0.5 + Jp) ",
    ]

    @pytest.mark.parametrize("text", CASES)
    def test_round_trip_handmade(self, text):
        node = parse(text)
        assert parse(unparse(node)) == node

    def test_round_trip_random(self):
        rng = np.random.default_rng(14)
        for _ in range(200):
            node = parse(random_expression(rng))
            assert parse(unparse(node)) == node

    def test_idempotent_text(self):
        node = parse("(Jp + omega^2*Jm)/(a + Jm)")
        once = unparse(node)
        assert unparse(parse(once)) == once


class TestEval:
    def test_jminus_gradient(self):
        jet = eval_jet("Jm", PhaseState([1, 1], [0, 0]), {})
        assert jet.value == 2.0
        assert np.allclose(jet.grad, [2, 2, 0, 0])

    def test_j3_gradient(self):
        jet = eval_jet("J3", PhaseState([2.0], [3.0]), {})
        assert jet.value == 6.0
        assert np.allclose(jet.grad, [3, 2])

    def test_conformal_value(self):
        jet = eval_jet("(Jp + omega^2*Jm)/(a + Jm)", PhaseState([1.0], [0.0]),
                       {"omega": 1.0, "a": 1.0})
        assert jet.value == pytest.approx(0.5)

    def test_constant_expression_zero_gradient(self):
        jet = eval_jet("omega^2/2 + 3", PhaseState([1.0, 2.0], [0.5, 0.5]),
                       {"omega": 2.0})
        assert jet.value == 5.0
        assert np.all(jet.grad == 0.0)

    def test_unbound_parameter(self):
        with pytest.raises(ExprNameError):
            eval_jet("omega*Jm", PhaseState([1.0], [0.0]), {})

    def test_division_by_zero_carries_position(self):
        state = PhaseState([1.0], [0.0])  # Jm = 1
        with pytest.raises(ExprDomainError) as info:
            eval_jet("Jp/(Jm - 1)", state, {})
        assert "Jm - 1" in str(info.value)
        assert info.value.column == 3

    def test_zero_to_negative_power(self):
        state = PhaseState([1.0], [0.0])  # Jp = 0
        with pytest.raises(ExprDomainError):
            eval_jet("Jp^-1", state, {})

    def test_gradient_matches_finite_differences(self):
        from oracles import fd_gradient

        text = "(Jp + 1.3*Jm^2)/(0.7 + Jm) - 0.4*J3^2"
        obs = expression_observable(text, {})
        rng = np.random.default_rng(15)
        for _ in range(20):
            q = rng.uniform(-1, 1, 3)
            p = rng.uniform(-1, 1, 3)
            jet = obs.eval_jet(PhaseState(q, p))
            fd = fd_gradient(lambda qq, pp: obs.value(PhaseState(qq, pp)), q, p)
            assert np.all(np.abs(jet.grad - fd) <= 1e-6 * (1 + np.abs(jet.grad)))


class TestCoalgebraProperty:
    def test_random_expressions_commute_with_chains(self):
        n = 3
        states = sample_box(n, 100, seed=16)
        chains = universal_integrals(n)
        rng = np.random.default_rng(17)
        for _ in range(30):
            obs = expression_observable(random_expression(rng), {})
            jet_f = obs.eval_jet(states)
            for g in chains:
                jet_g = g.eval_jet(states)
                scale = (np.linalg.norm(jet_f.grad, axis=1)
                         * np.linalg.norm(jet_g.grad, axis=1) + 1.0)
                residual = np.abs(poisson_bracket(obs, g, states)) / scale
                assert np.max(residual) <= 1e-10
