import pytest

from errors import ValidationError
from ltlf import parse_formula
from planning import format_plan, format_state
from responsibility import (
    ResponsibilityKind, anticipate, anticipate_aar_direct, attribute, coalition_chain_pivot, coordinate,
    find_plan_avoiding_anticipated, render_verdict,
)

CAR, CPR, CCR, AAR = (ResponsibilityKind.CAR, ResponsibilityKind.CPR,
                      ResponsibilityKind.CCR, ResponsibilityKind.AAR)
A1, A2 = 0, 1


@pytest.fixture
def ff_ff(junction, plan_of):
    return plan_of(junction, "A1: F F\nA2: F F")


@pytest.fixture
def all_skip(junction, plan_of):
    return plan_of(junction, "A1: skip skip\nA2: skip skip")


def _omega(ppd, text):
    return parse_formula(text, ppd.signature)


# =============================================================================
# 교차로 예제
# =============================================================================

def test_collision_cpr_and_ccr_but_not_car(junction, ff_ff):
    omega = _omega(junction, "!(G !collision)")
    sig = junction.signature

    cpr = attribute(CPR, A1, ff_ff, junction.s0, junction, omega)
    assert cpr.holds
    assert format_plan(cpr.witness_plan, sig) == "A1: skip skip\nA2: F F\n"

    ccr = attribute(CCR, A1, ff_ff, junction.s0, junction, omega)
    assert ccr.holds
    assert ccr.witness_coalition == (A1, A2)

    car = attribute(CAR, A1, ff_ff, junction.s0, junction, omega)
    assert not car.holds
    assert format_plan(car.counter_plan, sig) == "A1: F F\nA2: skip skip\n"


def test_not_crossing_car_and_aar(junction, all_skip):
    omega = _omega(junction, "!(F crossed1)")
    car = attribute(CAR, A1, all_skip, junction.s0, junction, omega)
    assert car.holds
    assert format_plan(car.counter_plan, junction.signature) == "A1: skip F\nA2: skip skip\n"
    assert attribute(AAR, A1, all_skip, junction.s0, junction, omega).holds
    # A2는 A1의 건넘을 막을 수 없다
    assert not attribute(CAR, A2, all_skip, junction.s0, junction, omega).holds


def test_anticipated_collision(junction, plan_of):
    omega = _omega(junction, "F collision")
    sig = junction.signature

    verdict = anticipate(CPR, A1, plan_of(junction, "A1: F F"), junction, omega)
    assert verdict.holds
    assert verdict.witness_state == junction.s0
    assert format_plan(verdict.witness_plan, sig) == "A1: F F\nA2: F skip\n"

    assert not anticipate(CPR, A1, plan_of(junction, "A1: skip skip"), junction, omega).holds


def test_anticipation_witness_replays_as_attribution(junction, plan_of):
    omega = _omega(junction, "F collision")
    verdict = anticipate(CCR, A1, plan_of(junction, "A1: F F"), junction, omega)
    assert verdict.holds
    replay = attribute(CCR, A1, verdict.witness_plan, verdict.witness_state, junction, omega)
    assert replay.holds


def test_aar_fails_when_another_start_state_breaks_sufficiency(junction, all_skip):
    # A1은 A2가 이미 건넜을 수도 있다고 보므로 !crossed2 를 보장할 수 없다
    omega = _omega(junction, "!crossed2 & G !crossed1")
    assert attribute(CAR, A1, all_skip, junction.s0, junction, omega).holds
    aar = attribute(AAR, A1, all_skip, junction.s0, junction, omega)
    assert not aar.holds
    assert format_state(aar.witness_state, junction.signature) == "{crossed2}"
    assert format_plan(aar.counter_plan, junction.signature) == "A1: skip skip\nA2: skip skip\n"


def test_anticipate_aar_matches_direct_definition(junction, plan_of):
    for text in ("A1: F F", "A1: skip skip", "A1: F skip", "A1: skip F"):
        plan = plan_of(junction, text)
        for formula in ("F crossed1", "!(F crossed1)", "G !collision", "F collision", "true"):
            omega = _omega(junction, formula)
            assert (anticipate(AAR, A1, plan, junction, omega).holds
                    == anticipate_aar_direct(A1, plan, junction, omega).holds)


def test_inevitable_outcome_has_no_responsibility(junction, ff_ff):
    omega = _omega(junction, "true")
    for kind in ResponsibilityKind:
        assert not attribute(kind, A1, ff_ff, junction.s0, junction, omega).holds


def test_coordination_avoids_collision(junction):
    result = coordinate(junction, _omega(junction, "G !collision"), 2)
    sig = junction.signature
    assert [format_plan(p, sig) for p in result.plans] == ["A1: skip skip\n", "A2: skip skip\n"]
    assert format_plan(result.composed, sig) == "A1: skip skip\nA2: skip skip\n"
    assert result.omega_holds is True


def test_find_plan_avoiding_anticipated(junction):
    sig = junction.signature
    plan = find_plan_avoiding_anticipated(CPR, A1, junction, _omega(junction, "F collision"), 2)
    assert format_plan(plan, sig) == "A1: skip skip\n"
    # 참은 어떤 책임도 예견되지 않는다
    assert find_plan_avoiding_anticipated(CAR, A1, junction, _omega(junction, "true"), 1) is not None


def test_coalition_chain_pivot(junction, ff_ff, all_skip):
    omega = _omega(junction, "!(G !collision)")
    agent, chain = coalition_chain_pivot(ff_ff, junction.s0, junction.theory, omega)
    assert agent == A1
    assert chain == (A1, A2)
    # ω가 성립하지 않으면 연쇄가 없다
    assert coalition_chain_pivot(all_skip, junction.s0, junction.theory, omega) is None


# =============================================================================
# 탁자 들기 예제
# =============================================================================

def test_table_lifting(table, plan_of):
    plan = plan_of(table, "A1: skip\nA2: lift")
    omega = _omega(table, "F lifted_table2")
    assert attribute(CAR, 1, plan, table.s0, table, omega).holds
    assert not attribute(CPR, 0, plan, table.s0, table, omega).holds


def test_table_lift_anticipates_cpr(table, plan_of):
    omega = _omega(table, "F lifted_table1")
    plan = plan_of(table, "A1: lift")
    verdict = anticipate(CPR, 0, plan, table, omega)
    assert verdict.holds
    assert format_state(verdict.witness_state, table.signature) == "{at_A1_table1, at_A2_table2}"


# =============================================================================
# 입력 검증과 출력
# =============================================================================

def test_attribution_needs_full_plan(junction, plan_of):
    with pytest.raises(ValidationError):
        attribute(CAR, A1, plan_of(junction, "A1: F F"), junction.s0, junction, _omega(junction, "true"))


def test_anticipation_needs_own_individual_plan(junction, plan_of):
    with pytest.raises(ValidationError):
        anticipate(CPR, A1, plan_of(junction, "A2: F F"), junction, _omega(junction, "true"))
    with pytest.raises(ValidationError):
        anticipate(CPR, 7, plan_of(junction, "A1: F F"), junction, _omega(junction, "true"))


def test_kind_parse():
    assert ResponsibilityKind.parse("cpr") is CPR
    with pytest.raises(ValidationError):
        ResponsibilityKind.parse("XYZ")


def test_render_verdict(junction, ff_ff):
    omega = _omega(junction, "!(G !collision)")
    ccr = attribute(CCR, A1, ff_ff, junction.s0, junction, omega)
    text = render_verdict(CCR, A1, ccr, junction.signature, 2)
    assert text == (
        "CCR agent=A1 holds=true\n"
        "  horizon: 2\n"
        "  witness_coalition: A1 A2\n"
        "  witness_plan:\n"
        "    A1: skip skip\n"
        "    A2: F F\n"
    )


def test_render_verdict_with_state(junction, plan_of):
    omega = _omega(junction, "F collision")
    verdict = anticipate(CPR, A1, plan_of(junction, "A1: F F"), junction, omega)
    text = render_verdict(CPR, A1, verdict, junction.signature, 2)
    assert text.splitlines()[:3] == ["CPR agent=A1 holds=true", "  horizon: 2", "  witness_state: {}"]


def test_table_anticipation_found_in_other_start_state(table, plan_of):
    # 실제 초기 상태에서는 A2가 table1 을 들 수 없으므로 증인은 두 번째 가능 상태에서 나온다
    omega = _omega(table, "F lifted_table1 & !do(A1, lift)")
    verdict = anticipate(CPR, 0, plan_of(table, "A1: skip"), table, omega)
    assert verdict.holds
    assert format_state(verdict.witness_state, table.signature) == "{at_A1_table1, at_A2_table1}"
    assert format_plan(verdict.witness_plan, table.signature) == "A1: skip\nA2: lift\n"
