import pytest
from hypothesis import given
from hypothesis import strategies as st

from core_model import (
    FALSE, SKIP_ID, TRUE, ActionTheory, And, Does, History, Not, Prop, Signature, State, disj,
    eval_pl, generate_history, successor_state,
)
from errors import ValidationError
from planning import JointPlan


@pytest.fixture
def sig():
    return Signature.build(["A1", "A2"], ["p", "q"], ["a", "b"])


def test_skip_is_always_action_zero(sig):
    assert sig.actions.names[0] == "skip"
    assert sig.actions.id_of("skip") == SKIP_ID
    assert Signature.build(["A1"], [], ["a", "skip"]).actions.names == ("skip", "a")


@pytest.mark.parametrize("props,agents", [
    (["p", "p"], ["A1"]),
    (["F"], ["A1"]),
    (["p"], []),
    (["p"], ["do"]),
    (["1p"], ["A1"]),
])
def test_signature_rejects_bad_names(props, agents):
    with pytest.raises(ValidationError):
        Signature.build(agents, props, [])


def test_temporal_letters_allowed_as_action_names():
    sig = Signature.build(["A1"], ["p"], ["F", "X"])
    assert sig.actions.id_of("F") == 1


def test_undeclared_symbol_lookup(sig):
    with pytest.raises(ValidationError):
        sig.props.id_of("r")
    with pytest.raises(ValidationError):
        sig.agents.name_of(5)


def test_state_validate_rejects_foreign_props(sig):
    assert State.of([0, 1]).validate(sig)
    with pytest.raises(ValidationError):
        State.of([2]).validate(sig)


def test_effects_on_skip_rejected(sig):
    with pytest.raises(ValidationError):
        ActionTheory.build(sig, {(0, SKIP_ID, 0): TRUE})


def test_effect_free_theory_keeps_state(sig):
    theory = ActionTheory.build(sig)
    assert not theory.pos and not theory.neg
    assert theory.gamma_plus(0, 1, 0) == FALSE
    s = State.of([1])
    assert successor_state(s, (1, 2), theory) == s


def test_conflicting_effects_are_inert(sig):
    theory = ActionTheory.build(sig, pos={(0, 1, 0): TRUE}, neg={(1, 1, 0): TRUE})
    p = sig.props.id_of("p")
    assert successor_state(State(), (1, 1), theory) == State()
    assert successor_state(State.of([p]), (1, 1), theory) == State.of([p])
    assert successor_state(State(), (1, 0), theory) == State.of([p])
    assert successor_state(State.of([p]), (0, 1), theory) == State()


def test_only_executed_actions_contribute(sig):
    # A1 의 a 효과는 A1이 b를 해도 적용되지 않는다
    theory = ActionTheory.build(sig, pos={(0, 1, 1): TRUE})
    assert successor_state(State(), (2, 0), theory) == State()
    assert successor_state(State(), (1, 0), theory) == State.of([1])


def test_effect_precondition_reads_joint_action(sig):
    theory = ActionTheory.build(sig, pos={(0, 1, 0): Does(1, 2)})
    assert successor_state(State(), {0: 1, 1: 2}, theory) == State.of([0])
    assert successor_state(State(), {0: 1, 1: 1}, theory) == State()


def test_joint_action_must_cover_every_agent(sig):
    theory = ActionTheory.build(sig)
    with pytest.raises(ValidationError):
        successor_state(State(), {0: 1}, theory)
    with pytest.raises(ValidationError):
        successor_state(State(), (1,), theory)


def test_generate_history_is_consistent(sig):
    theory = ActionTheory.build(sig, pos={(0, 1, 0): Not(Prop(1))}, neg={(1, 2, 0): TRUE})
    plan = JointPlan.of({0: (1, 0, 1), 1: (0, 2, 0)})
    history = generate_history(plan, State(), theory)
    assert history.horizon == 3
    assert history.check_consistency(theory)
    assert history.states[1] == State.of([0])
    assert history.states[2] == State()
    assert history.states[3] == State.of([0])


def test_generate_history_needs_full_plan(sig):
    with pytest.raises(ValidationError):
        generate_history(JointPlan.of({0: (1,)}), State(), ActionTheory.build(sig))


def test_eval_pl_does_false_at_last_step(sig):
    history = History(sig, (State(), State()), ((1, 0),))
    assert eval_pl(history, 0, Does(0, 1))
    assert not eval_pl(history, 1, Does(0, 1))
    assert eval_pl(history, 1, Not(Does(0, 1)))
    with pytest.raises(ValidationError):
        eval_pl(history, 2, TRUE)


def test_history_shape_checked(sig):
    with pytest.raises(ValidationError):
        History(sig, (State(), State()), ())
    with pytest.raises(ValidationError):
        History(sig, (State(), State()), ((1,),))


@given(st.integers(min_value=0, max_value=3), st.integers(min_value=0, max_value=2),
       st.integers(min_value=0, max_value=2))
def test_successor_changes_only_affected_props(bits, a1, a2):
    sig = Signature.build(["A1", "A2"], ["p", "q"], ["a", "b"])
    # q 에는 어떤 효과도 없으므로 관성으로 유지된다
    theory = ActionTheory.build(
        sig,
        pos={(0, 1, 0): TRUE, (1, 2, 0): And(Prop(1), Does(0, 1))},
        neg={(1, 1, 0): disj(Prop(0), Prop(1))},
    )
    before = State(bits)
    after = successor_state(before, (a1, a2), theory)
    assert (1 in after) == (1 in before)
    if a1 == 0 and a2 == 0:
        assert after == before
