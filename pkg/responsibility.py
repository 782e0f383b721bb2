"""
책임 분석 엔진 - 책임 판정 모듈
고정된 공동 계획에 대한 CAR/CPR/CCR/AAR 귀속, 인식 불확실성 하의 책임 예견, 예견 회피 계획 탐색
"""

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import List, Optional, Tuple

from core_model import ActionTheory, Formula, Not, Signature, State
from errors import ValidationError
from planning import (
    PPD, JointPlan, OutcomeOracle, Verdict, complement, enumerate_completions,
    enumerate_individual_plans, format_plan, format_state, get_oracle, plan_union, subplan,
)

logger = logging.getLogger(__name__)


class ResponsibilityKind(Enum):
    CAR = "CAR"  # 인과적 능동 책임
    CPR = "CPR"  # 인과적 수동 책임
    CCR = "CCR"  # 인과적 기여 책임
    AAR = "AAR"  # 행위자 능동 책임

    @classmethod
    def parse(cls, text: str) -> "ResponsibilityKind":
        try:
            return cls(text.upper())
        except ValueError:
            raise ValidationError(f"알 수 없는 책임 종류: '{text}' (CAR, CPR, CCR, AAR 중 하나)") from None


# =============================================================================
# 귀속 (attribution)
# =============================================================================

def _car(oracle: OutcomeOracle, agent: int, plan: JointPlan, s0: State) -> Verdict:
    violating = oracle.some_violates(s0, subplan(plan, [agent]))
    if violating is not None:
        return Verdict(holds=False, counter_plan=violating)
    counter = oracle.some_violates(s0, None)
    if counter is None:
        # 불가피한 결과
        return Verdict(holds=False)
    return Verdict(holds=True, counter_plan=counter)


def _cpr(oracle: OutcomeOracle, agent: int, plan: JointPlan, s0: State) -> Verdict:
    if not oracle.holds(s0, plan.rows()):
        return Verdict(holds=False)
    witness = oracle.some_violates(s0, complement(plan, [agent]))
    return Verdict(holds=witness is not None, witness_plan=witness)


def _ccr(oracle: OutcomeOracle, agent: int, plan: JointPlan, s0: State) -> Verdict:
    if not oracle.holds(s0, plan.rows()):
        return Verdict(holds=False)
    agents = plan.coalition
    for size in range(1, len(agents) + 1):
        for coalition in combinations(agents, size):
            if agent not in coalition:
                continue
            if not oracle.all_satisfy(s0, subplan(plan, coalition)):
                continue
            rest = [member for member in coalition if member != agent]
            witness = oracle.some_violates(s0, subplan(plan, rest) if rest else None)
            if witness is not None:
                return Verdict(holds=True, witness_coalition=coalition, witness_plan=witness)
    return Verdict(holds=False)


def _aar(oracle: OutcomeOracle, agent: int, plan: JointPlan, s0: State, ppd: PPD) -> Verdict:
    verdict = _car(oracle, agent, plan, s0)
    if not verdict.holds:
        return verdict
    mine = subplan(plan, [agent])
    for s1 in ppd.epistemic_set(agent):
        violating = oracle.some_violates(s1, mine)
        if violating is not None:
            return Verdict(holds=False, witness_state=s1, counter_plan=violating)
    return verdict


def _attribute(kind: ResponsibilityKind, oracle: OutcomeOracle, agent: int, plan: JointPlan,
               s0: State, ppd: PPD) -> Verdict:
    if kind is ResponsibilityKind.CAR:
        return _car(oracle, agent, plan, s0)
    if kind is ResponsibilityKind.CPR:
        return _cpr(oracle, agent, plan, s0)
    if kind is ResponsibilityKind.CCR:
        return _ccr(oracle, agent, plan, s0)
    return _aar(oracle, agent, plan, s0, ppd)


def _check_agent(ppd: PPD, agent: int):
    if not isinstance(agent, int) or not 0 <= agent < ppd.signature.n_agents:
        raise ValidationError(f"에이전트 집합에 없는 에이전트: {agent}")


def attribute(kind: ResponsibilityKind, agent: int, plan: JointPlan, s0: State,
              ppd: PPD, omega: Formula) -> Verdict:
    """
    공동 계획 π를 s0에서 실행했을 때 에이전트 i가 ω에 대해 X 책임을 지는지 판정

    모든 양화는 π의 호라이즌 k로 제한된다.

    Args:
        kind: CAR, CPR, CCR, AAR
        agent: 판정 대상 에이전트
        plan: 모든 에이전트를 포함하는 공동 계획
        s0: 시작 상태 (일반 귀속이면 ppd.s0)
        ppd: 도메인 (AAR의 인식 집합)
        omega: 결과 LTLf 수식

    Returns:
        Verdict: 판정 결과와 증인/반례
    """
    sig = ppd.signature
    _check_agent(ppd, agent)
    plan.validate(sig)
    if not plan.is_full(sig):
        raise ValidationError("귀속 판정에는 모든 에이전트를 포함하는 계획이 필요합니다.")
    s0.validate(sig)
    oracle = get_oracle(ppd.theory, omega, plan.horizon)
    return _attribute(kind, oracle, agent, plan, s0, ppd)


# =============================================================================
# 예견 (anticipation)
# =============================================================================

def _check_individual(ppd: PPD, agent: int, plan: JointPlan):
    _check_agent(ppd, agent)
    plan.validate(ppd.signature)
    if plan.coalition != (agent,):
        raise ValidationError("예견 판정에는 대상 에이전트 한 명의 개인 계획이 필요합니다.")


def anticipate(kind: ResponsibilityKind, agent: int, individual_plan: JointPlan,
               ppd: PPD, omega: Formula) -> Verdict:
    """
    개인 계획 π_i를 택한 i가 ω에 대해 X 책임을 예견하는지 판정

    가능한 시작 상태 s1 ∈ E_i (선언 순서)와 π_i와 호환되는 전체 계획 π1 (사전식 순서) 중
    i가 X 책임을 지는 첫 쌍을 증인으로 돌려준다.
    """
    _check_individual(ppd, agent, individual_plan)
    k = individual_plan.horizon
    oracle = get_oracle(ppd.theory, omega, k)
    for s1 in ppd.epistemic_set(agent):
        for candidate in enumerate_completions(individual_plan, k, ppd.signature):
            if _attribute(kind, oracle, agent, candidate, s1, ppd).holds:
                return Verdict(holds=True, witness_state=s1, witness_plan=candidate)
    return Verdict(holds=False)


def anticipate_aar_direct(agent: int, individual_plan: JointPlan, ppd: PPD, omega: Formula) -> Verdict:
    """
    AAR 예견의 직접 정의

    모든 s1 ∈ E_i 와 모든 호환 계획에서 ω가 성립하고, 어떤 s2 ∈ E_i 에서 ω를 위반하는 계획이 있을 때 참.
    """
    _check_individual(ppd, agent, individual_plan)
    oracle = get_oracle(ppd.theory, omega, individual_plan.horizon)
    states = ppd.epistemic_set(agent)
    for s1 in states:
        violating = oracle.some_violates(s1, individual_plan)
        if violating is not None:
            return Verdict(holds=False, witness_state=s1, counter_plan=violating)
    for s2 in states:
        counter = oracle.some_violates(s2, None)
        if counter is not None:
            return Verdict(holds=True, witness_state=s2, counter_plan=counter)
    return Verdict(holds=False)


def find_plan_avoiding_anticipated(kind: ResponsibilityKind, agent: int, ppd: PPD,
                                   omega: Formula, k: int) -> Optional[JointPlan]:
    """
    X 책임을 예견하지 않는 사전식 첫 개인 k-계획

    Returns:
        Optional[JointPlan]: 없으면 None (AAR이면 항상 존재)
    """
    _check_agent(ppd, agent)
    if k < 0:
        raise ValidationError(f"호라이즌은 0 이상이어야 합니다: {k}")
    for candidate in enumerate_individual_plans(agent, k, ppd.signature):
        if not anticipate(kind, agent, candidate, ppd, omega).holds:
            return candidate
    return None


@dataclass(frozen=True)
class Coordination:
    """에이전트별 CPR 회피 계획, 합성된 공동 계획, 실제 초기 상태에서의 ω 진리값"""

    plans: Tuple[Optional[JointPlan], ...]
    composed: Optional[JointPlan]
    omega_holds: Optional[bool]


def coordinate(ppd: PPD, omega: Formula, k: int) -> Coordination:
    """
    각 에이전트가 ¬ω에 대한 CPR을 예견하지 않는 첫 개인 계획을 독립적으로 고르고 합성

    한 명이라도 그런 계획이 없으면 composed/omega_holds 는 None.
    """
    negated = Not(omega)
    plans: List[Optional[JointPlan]] = []
    for agent in range(ppd.signature.n_agents):
        chosen = find_plan_avoiding_anticipated(ResponsibilityKind.CPR, agent, ppd, negated, k)
        if chosen is None:
            logger.info(f"{ppd.signature.agents.name_of(agent)}: CPR을 예견하지 않는 계획이 없습니다.")
        plans.append(chosen)

    if any(plan is None for plan in plans):
        return Coordination(tuple(plans), None, None)

    composed = plans[0]
    for plan in plans[1:]:
        composed = plan_union(composed, plan)
    holds = get_oracle(ppd.theory, omega, k).holds_for(ppd.s0, composed)
    return Coordination(tuple(plans), composed, holds)


def coalition_chain_pivot(plan: JointPlan, s0: State, theory: ActionTheory,
                          omega: Formula) -> Optional[Tuple[int, Tuple[int, ...]]]:
    """
    Agt ⊇ Agt∖{i1} ⊇ … ⊇ ∅ 연쇄에서 충분 → 불충분으로 바뀌는 지점의 에이전트

    ω가 성립하고 불가피하지 않을 때만 의미가 있으며, 그렇지 않으면 None.

    Returns:
        Optional[Tuple[int, Tuple[int, ...]]]: (기여 에이전트, 그 직전의 충분 연합)
    """
    oracle = get_oracle(theory, omega, plan.horizon)
    if not oracle.holds_for(s0, plan) or oracle.all_satisfy(s0, None):
        return None

    chain = list(plan.coalition)
    while chain:
        removed, rest = chain[0], chain[1:]
        if not oracle.all_satisfy(s0, subplan(plan, rest) if rest else None):
            return removed, tuple(chain)
        chain = rest
    return None


# =============================================================================
# 출력
# =============================================================================

def _indent_plan(plan: JointPlan, signature: Signature) -> List[str]:
    return [f"    {line}" for line in format_plan(plan, signature).splitlines()]


def render_verdict(kind: ResponsibilityKind, agent: int, verdict: Verdict,
                   signature: Signature, horizon: int) -> str:
    """
    판정 보고서 텍스트

    첫 줄 'X agent=<i> holds=<bool>', 이후 들여쓴 호라이즌과 증인 줄들.
    """
    lines = [
        f"{kind.value} agent={signature.agents.name_of(agent)} holds={str(verdict.holds).lower()}",
        f"  horizon: {horizon}",
    ]
    if verdict.witness_state is not None:
        lines.append(f"  witness_state: {format_state(verdict.witness_state, signature)}")
    if verdict.witness_coalition is not None:
        names = " ".join(signature.agents.name_of(a) for a in verdict.witness_coalition)
        lines.append(f"  witness_coalition: {names}")
    if verdict.witness_plan is not None:
        lines.append("  witness_plan:")
        lines.extend(_indent_plan(verdict.witness_plan, signature))
    if verdict.counter_plan is not None:
        lines.append("  counter_plan:")
        lines.extend(_indent_plan(verdict.counter_plan, signature))
    return "\n".join(lines) + "\n"
