from functools import lru_cache
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core_model import FALSE, TRUE, And, Const, Does, History, Not, Prop, Signature, State
from errors import FormulaSyntaxError, ValidationError
from ltlf import (
    FormulaMode, Next, Until, compile_formula, eval_ltlf, evaluate_table, eventually, formula_size,
    globally, parse_formula, render_formula, subformulas,
)

SIG = Signature.build(["A1", "A2"], ["p", "q"], ["a"])
P, Q = Prop(0), Prop(1)


def naive(formula, states, rows, t):
    """정의를 그대로 따르는 재귀 평가기"""
    k = len(states) - 1
    if isinstance(formula, Const):
        return formula.value
    if isinstance(formula, Prop):
        return formula.prop in states[t]
    if isinstance(formula, Does):
        return t < k and rows[t][formula.agent] == formula.action
    if isinstance(formula, Not):
        return not naive(formula.operand, states, rows, t)
    if isinstance(formula, And):
        return naive(formula.left, states, rows, t) and naive(formula.right, states, rows, t)
    if isinstance(formula, Next):
        return t < k and naive(formula.operand, states, rows, t + 1)
    if isinstance(formula, Until):
        return any(
            naive(formula.right, states, rows, j)
            and all(naive(formula.left, states, rows, i) for i in range(t, j))
            for j in range(t, k + 1)
        )
    raise AssertionError(formula)


@lru_cache(maxsize=None)
def formulas_of_size(n):
    if n == 1:
        return (P, Q)
    out = []
    for f in formulas_of_size(n - 1):
        out += [Not(f), Next(f)]
    for left_size in range(1, n - 1):
        for left in formulas_of_size(left_size):
            for right in formulas_of_size(n - 1 - left_size):
                out += [And(left, right), Until(left, right)]
    return tuple(out)


def traces(max_horizon):
    skip_row = (0, 0)
    for k in range(max_horizon + 1):
        for bits in product(range(4), repeat=k + 1):
            yield tuple(State(b) for b in bits), (skip_row,) * k


def _agree(max_size, max_horizon):
    disagreements = []
    all_traces = list(traces(max_horizon))
    for size in range(1, max_size + 1):
        for formula in formulas_of_size(size):
            program = compile_formula(formula)
            for states, rows in all_traces:
                column = evaluate_table(program, states, rows)[-1]
                for t in range(len(states)):
                    if column[t] != naive(formula, states, rows, t):
                        disagreements.append((formula, states, t))
    return disagreements


def test_formula_generator_counts():
    assert [len(formulas_of_size(n)) for n in range(1, 5)] == [2, 4, 16, 64]


def test_memoized_matches_naive_small_sweep():
    assert _agree(max_size=5, max_horizon=2) == []


@pytest.mark.slow
def test_memoized_matches_naive_full_sweep():
    assert _agree(max_size=8, max_horizon=3) == []


atoms = st.sampled_from([P, Q, TRUE, FALSE, Does(0, 0), Does(0, 1), Does(1, 1)])
formulas = st.recursive(
    atoms,
    lambda sub: st.one_of(
        st.builds(Not, sub), st.builds(Next, sub),
        st.builds(And, sub, sub), st.builds(Until, sub, sub),
    ),
    max_leaves=12,
)


@st.composite
def histories(draw):
    k = draw(st.integers(min_value=0, max_value=4))
    states = tuple(State(draw(st.integers(min_value=0, max_value=3))) for _ in range(k + 1))
    rows = tuple(
        (draw(st.integers(min_value=0, max_value=1)), draw(st.integers(min_value=0, max_value=1)))
        for _ in range(k)
    )
    return History(SIG, states, rows)


@settings(max_examples=300)
@given(formulas, histories())
def test_memoized_matches_naive_with_actions(formula, history):
    for t in range(history.horizon + 1):
        assert eval_ltlf(history, t, formula) == naive(formula, history.states, history.actions, t)


@given(formulas, histories())
def test_duality_and_expansion_laws(formula, history):
    k = history.horizon
    for t in range(k + 1):
        assert eval_ltlf(history, t, globally(formula)) == (not eval_ltlf(history, t, eventually(Not(formula))))
        expansion = eval_ltlf(history, t, formula) or (
            t < k and eval_ltlf(history, t + 1, eventually(formula))
        )
        assert eval_ltlf(history, t, eventually(formula)) == expansion


@given(formulas)
def test_render_then_parse_is_identity(formula):
    assert parse_formula(render_formula(formula, SIG), SIG) == formula


def test_next_is_strong_at_last_step():
    history = History(SIG, (State(1),), ())
    assert not eval_ltlf(history, 0, Next(TRUE))
    assert eval_ltlf(history, 0, globally(P))
    assert eval_ltlf(history, 0, eventually(P))


def test_until_requires_right_eventually():
    history = History(SIG, (State(1), State(1), State(0)), ((0, 0), (0, 0)))
    assert not eval_ltlf(history, 0, Until(P, Q))
    assert eval_ltlf(history, 0, Until(P, Not(P)))


@pytest.mark.parametrize("text,expected", [
    ("p & q | !p", Not(And(Not(And(P, Q)), Not(Not(P))))),
    ("p -> q", Not(And(P, Not(Q)))),
    ("p U q U p", Until(P, Until(Q, P))),
    ("G p", Not(Until(TRUE, Not(P)))),
    ("F X p", Until(TRUE, Next(P))),
    ("!p U q", Until(Not(P), Q)),
    ("do(A1, a) & true", And(Does(0, 1), TRUE)),
    ("((p))", P),
])
def test_parse_precedence(text, expected):
    assert parse_formula(text, SIG) == expected


@pytest.mark.parametrize("text", ["", "p &", "p q", "(p", "do(A3, a)", "r", "p $ q"])
def test_parse_errors(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text, SIG)


def test_parse_error_reports_position():
    with pytest.raises(FormulaSyntaxError) as info:
        parse_formula("p &\n  & q", SIG)
    assert info.value.line == 2
    assert info.value.column == 3


def test_pl_mode_rejects_temporal_operators():
    assert parse_formula("!p & do(A2, a)", SIG, FormulaMode.PL) == And(Not(P), Does(1, 1))
    with pytest.raises(FormulaSyntaxError):
        parse_formula("F p", SIG, FormulaMode.PL)


def test_temporal_letters_usable_as_action_names():
    sig = Signature.build(["A1"], ["collision"], ["F"])
    assert parse_formula("F do(A1, F)", sig) == Until(TRUE, Does(0, 1))


def test_subformulas_are_shared_and_post_order():
    formula = And(Until(P, Q), Not(Until(P, Q)))
    subs = subformulas(formula)
    assert subs[-1] == formula
    assert len(subs) == len(set(subs)) == 5
    assert len(compile_formula(formula)) == 5
    assert formula_size(formula) == 8


def test_eval_rejects_undeclared_symbols_and_bad_time():
    history = History(SIG, (State(),), ())
    with pytest.raises(ValidationError):
        eval_ltlf(history, 0, Prop(7))
    with pytest.raises(ValidationError):
        eval_ltlf(history, 1, TRUE)
