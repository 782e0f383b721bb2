"""
책임 분석 엔진 - 정리 검증 모듈
시드 고정 무작위 소형 도메인 생성기와 책임 개념 사이의 정리/함의 관계를 전수 검사하는 실행 가능한 검증기
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, Field

from core_model import FALSE, TRUE, ActionTheory, And, Does, Formula, Not, Prop, Signature, State, disj
from domain_file import dumps_domain
from ltlf import Next, Until, eventually, globally, render_formula
from planning import (
    PPD, JointPlan, enumerate_individual_plans, format_plan, get_oracle, is_inevitable, subplan,
)
from responsibility import (
    ResponsibilityKind, anticipate, anticipate_aar_direct, attribute, coalition_chain_pivot,
    find_plan_avoiding_anticipated,
)

load_dotenv()

logger = logging.getLogger(__name__)

Kind = ResponsibilityKind


class DomainBounds(BaseModel):
    """무작위 도메인 생성 범위"""

    max_agents: int = Field(default=3, ge=1, le=6, description="최대 에이전트 수")
    max_props: int = Field(default=3, ge=1, le=12, description="최대 명제 수")
    max_actions: int = Field(default=3, ge=1, le=6, description="최대 행동 수 (skip 포함)")
    max_horizon: int = Field(default=2, ge=1, le=4, description="최대 호라이즌")
    effect_density: float = Field(default=0.5, ge=0.0, le=1.0, description="γ± 항목이 채워질 확률")
    formula_depth: int = Field(default=3, ge=1, le=6, description="결과 수식 최대 깊이")
    plans_per_domain: int = Field(default=4, ge=1, description="도메인당 검사할 공동 계획 수")
    rng_seed: int = Field(default=1, ge=0, lt=2 ** 64, description="난수 시드 (64비트)")

    @classmethod
    def from_env(cls, **overrides) -> "DomainBounds":
        """
        환경 변수에서 범위 생성 (인자 > 환경 변수 > 기본값)

        Args:
            overrides: None이 아닌 값만 환경 변수보다 우선 적용
        """
        values = {
            "max_agents": os.getenv("RESP_MAX_AGENTS", "3"),
            "max_props": os.getenv("RESP_MAX_PROPS", "3"),
            "max_actions": os.getenv("RESP_MAX_ACTIONS", "3"),
            "max_horizon": os.getenv("RESP_MAX_HORIZON", "2"),
            "effect_density": os.getenv("RESP_EFFECT_DENSITY", "0.5"),
            "formula_depth": os.getenv("RESP_FORMULA_DEPTH", "3"),
            "plans_per_domain": os.getenv("RESP_PLANS_PER_DOMAIN", "4"),
            "rng_seed": os.getenv("RESP_VERIFY_SEED", "1"),
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


# =============================================================================
# 무작위 생성
# =============================================================================

_PL_OPS = ("not", "and", "or")
_LTL_OPS = _PL_OPS + ("next", "until", "eventually", "globally")


def _random_atom(rng: np.random.Generator, signature: Signature, allow_const: bool) -> Formula:
    roll = rng.random()
    if allow_const and roll < 0.1:
        return TRUE if rng.random() < 0.5 else FALSE
    if roll < 0.75:
        return Prop(int(rng.integers(signature.n_props)))
    return Does(int(rng.integers(signature.n_agents)), int(rng.integers(signature.n_actions)))


def _random_tree(rng: np.random.Generator, signature: Signature, depth: int,
                 ops: Sequence[str], allow_const: bool = True) -> Formula:
    if depth <= 0 or rng.random() < 0.25:
        return _random_atom(rng, signature, allow_const)

    op = ops[int(rng.integers(len(ops)))]

    def child():
        return _random_tree(rng, signature, depth - 1, ops)

    if op == "not":
        return Not(child())
    if op == "and":
        return And(child(), child())
    if op == "or":
        return disj(child(), child())
    if op == "next":
        return Next(child())
    if op == "until":
        return Until(child(), child())
    if op == "eventually":
        return eventually(child())
    return globally(child())


def random_pl_formula(rng: np.random.Generator, signature: Signature, depth: int) -> Formula:
    return _random_tree(rng, signature, depth, _PL_OPS)


def random_outcome(rng: np.random.Generator, signature: Signature, depth: int) -> Formula:
    """깊이 depth 이하의 LTLf 수식 (절반은 루트 상수 금지)"""
    allow_const = bool(rng.random() < 0.5)
    return _random_tree(rng, signature, depth, _LTL_OPS, allow_const)


def random_ppd(bounds: DomainBounds) -> PPD:
    """
    시드에 대해 결정적인 무작위 PPD

    각 (에이전트, 행동≠skip, 명제) 칸은 effect_density 확률로 깊이 2 이하의 PL+ 수식을 받는다.
    E_i 는 s0 뒤에 최대 2개의 무작위 상태를 더한 집합.
    """
    rng = np.random.default_rng(bounds.rng_seed)
    n_agents = int(rng.integers(1, bounds.max_agents + 1))
    n_props = int(rng.integers(1, bounds.max_props + 1))
    n_actions = int(rng.integers(1, bounds.max_actions + 1))

    signature = Signature.build(
        [f"A{i + 1}" for i in range(n_agents)],
        [f"p{j + 1}" for j in range(n_props)],
        [f"a{a}" for a in range(1, n_actions)],
    )

    pos, neg = {}, {}
    for agent in range(n_agents):
        for action in range(1, n_actions):
            for prop in range(n_props):
                for table in (pos, neg):
                    if rng.random() < bounds.effect_density:
                        depth = int(rng.integers(0, 3))
                        table[(agent, action, prop)] = random_pl_formula(rng, signature, depth)
    theory = ActionTheory.build(signature, pos, neg)

    n_states = 2 ** n_props
    s0 = State(int(rng.integers(n_states)))
    epistemic = {}
    for agent in range(n_agents):
        extra = int(rng.integers(0, 3))
        epistemic[agent] = [s0] + [State(int(rng.integers(n_states))) for _ in range(extra)]
    return PPD.build(theory, s0, epistemic)


# =============================================================================
# 말뭉치
# =============================================================================

@dataclass(frozen=True, eq=False)
class CorpusItem:
    seed: int
    ppd: PPD
    horizon: int
    omega: Formula
    plans: Tuple[JointPlan, ...]


def _plan_at(index: int, n_agents: int, n_actions: int, k: int) -> JointPlan:
    """사전식 순서에서 index 번째 전체 계획"""
    digits = []
    for _ in range(n_agents * k):
        index, digit = divmod(index, n_actions)
        digits.append(digit)
    digits.reverse()
    return JointPlan(tuple((agent, tuple(digits[agent * k:(agent + 1) * k])) for agent in range(n_agents)))


def build_item(bounds: DomainBounds, seed: int) -> CorpusItem:
    ppd = random_ppd(bounds.model_copy(update={"rng_seed": seed}))
    sig = ppd.signature
    rng = np.random.default_rng([seed, 1])
    horizon = int(rng.integers(0, bounds.max_horizon + 1))
    omega = random_outcome(rng, sig, bounds.formula_depth)

    total = sig.n_actions ** (sig.n_agents * horizon)
    if total <= bounds.plans_per_domain:
        indices = list(range(total))
    else:
        indices = sorted(int(i) for i in rng.choice(total, size=bounds.plans_per_domain, replace=False))
    plans = tuple(_plan_at(i, sig.n_agents, sig.n_actions, horizon) for i in indices)
    return CorpusItem(seed, ppd, horizon, omega, plans)


def build_corpus(bounds: DomainBounds, seeds: Iterable[int]) -> List[CorpusItem]:
    """(시드, PPD, 호라이즌, ω, 공동 계획들) 목록"""
    return [build_item(bounds, seed) for seed in seeds]


# =============================================================================
# 항목별 검사
# =============================================================================

# (에이전트, 계획, 설명) 또는 None
Failure = Optional[Tuple[Optional[int], Optional[JointPlan], str]]


def _theorem_1(item: CorpusItem) -> Failure:
    ppd, omega = item.ppd, item.omega
    oracle = get_oracle(ppd.theory, omega, item.horizon)
    inevitable = oracle.all_satisfy(ppd.s0, None)
    for plan in item.plans:
        if not oracle.holds(ppd.s0, plan.rows()) or inevitable:
            continue
        bearers = [i for i in range(ppd.signature.n_agents)
                   if attribute(Kind.CCR, i, plan, ppd.s0, ppd, omega).holds]
        if not bearers:
            return None, plan, "ω가 성립하고 불가피하지 않은데 CCR을 지는 에이전트가 없음"
        pivot = coalition_chain_pivot(plan, ppd.s0, ppd.theory, omega)
        if pivot is None:
            return None, plan, "연합 연쇄에서 충분→불충분 전환점을 찾지 못함"
        agent, _ = pivot
        if agent not in bearers:
            return agent, plan, "연쇄 전환점의 에이전트가 CCR을 지지 않음"
    return None


def _fig2(item: CorpusItem) -> Failure:
    ppd, omega = item.ppd, item.omega
    for plan in item.plans:
        for agent in range(ppd.signature.n_agents):
            attr = {kind: attribute(kind, agent, plan, ppd.s0, ppd, omega).holds for kind in Kind}
            mine = subplan(plan, [agent])
            ant = {kind: anticipate(kind, agent, mine, ppd, omega).holds for kind in Kind}

            arrows = [
                ("AAR⇒CAR", attr[Kind.AAR], attr[Kind.CAR]),
                ("CAR⇒CCR", attr[Kind.CAR], attr[Kind.CCR]),
                ("CPR⇒CCR", attr[Kind.CPR], attr[Kind.CCR]),
                ("예견 AAR⇒CAR", ant[Kind.AAR], ant[Kind.CAR]),
                ("예견 CAR⇒CCR", ant[Kind.CAR], ant[Kind.CCR]),
                ("예견 CPR⇒CCR", ant[Kind.CPR], ant[Kind.CCR]),
                ("예견 CCR⇒CPR", ant[Kind.CCR], ant[Kind.CPR]),
            ]
            arrows += [(f"귀속 {kind.value}⇒예견 {kind.value}", attr[kind], ant[kind]) for kind in Kind]
            for name, premise, conclusion in arrows:
                if premise and not conclusion:
                    return agent, plan, f"함의 {name} 위반"
    return None


def _theorem_3(item: CorpusItem) -> Failure:
    ppd = item.ppd
    for agent in range(ppd.signature.n_agents):
        if find_plan_avoiding_anticipated(Kind.AAR, agent, ppd, item.omega, item.horizon) is None:
            return agent, None, "AAR을 예견하지 않는 개인 계획이 없음"
    return None


def _theorem_4(item: CorpusItem) -> Failure:
    ppd, omega = item.ppd, item.omega
    negated = Not(omega)
    for agent in range(ppd.signature.n_agents):
        candidates = list(enumerate_individual_plans(agent, item.horizon, ppd.signature))
        aar = [anticipate(Kind.AAR, agent, plan, ppd, omega).holds for plan in candidates]
        if not any(aar):
            logger.info(f"[T4] seed={item.seed} {ppd.signature.agents.name_of(agent)}: 전제조건 불충족 (AAR 예견 계획 없음)")
            continue
        for plan, anticipates_aar in zip(candidates, aar):
            avoids_cpr = not anticipate(Kind.CPR, agent, plan, ppd, negated).holds
            if avoids_cpr != anticipates_aar:
                return agent, plan, "¬ω CPR 비예견과 ω AAR 예견이 다름"
    return None


def _theorem_5(item: CorpusItem) -> Failure:
    ppd, omega = item.ppd, item.omega
    negated = Not(omega)
    oracle = get_oracle(ppd.theory, omega, item.horizon)
    for plan in item.plans:
        avoided = all(
            not anticipate(Kind.CPR, agent, subplan(plan, [agent]), ppd, negated).holds
            for agent in range(ppd.signature.n_agents)
        )
        if not avoided:
            continue
        if is_inevitable(negated, ppd.s0, item.horizon, ppd.theory).holds:
            continue
        if not oracle.holds(ppd.s0, plan.rows()):
            return None, plan, "모든 에이전트가 CPR을 피했는데 ω가 성립하지 않음"
    return None


def _exclusion(item: CorpusItem) -> Failure:
    ppd, omega = item.ppd, item.omega
    if not is_inevitable(omega, ppd.s0, item.horizon, ppd.theory).holds:
        return None
    for plan in item.plans:
        for agent in range(ppd.signature.n_agents):
            for kind in Kind:
                if attribute(kind, agent, plan, ppd.s0, ppd, omega).holds:
                    return agent, plan, f"불가피한 결과에 {kind.value} 귀속"
    return None


def _equivalences(item: CorpusItem) -> Failure:
    ppd, omega = item.ppd, item.omega
    for agent in range(ppd.signature.n_agents):
        for plan in enumerate_individual_plans(agent, item.horizon, ppd.signature):
            modular = anticipate(Kind.AAR, agent, plan, ppd, omega).holds
            if modular != anticipate_aar_direct(agent, plan, ppd, omega).holds:
                return agent, plan, "AAR 예견의 두 정의가 다름"
            if anticipate(Kind.CCR, agent, plan, ppd, omega).holds != anticipate(Kind.CPR, agent, plan, ppd, omega).holds:
                return agent, plan, "CCR 예견과 CPR 예견이 다름"
    return None


CHECKS: Dict[str, Callable[[CorpusItem], Failure]] = {
    "T1": _theorem_1,
    "FIG2": _fig2,
    "T3": _theorem_3,
    "T4": _theorem_4,
    "T5": _theorem_5,
    "EXCL": _exclusion,
    "EQUIV": _equivalences,
}


# =============================================================================
# 결과와 보고서
# =============================================================================

@dataclass(frozen=True)
class CheckResult:
    """검사 한 건의 결과 (프로세스 간 전달을 위해 텍스트만 보관)"""

    theorem: str
    seed: int
    passed: bool
    detail: str = ""
    replay_text: str = ""


def render_replay(item: CorpusItem, agent: Optional[int], plan: Optional[JointPlan]) -> str:
    """반례 재현 블록: 도메인 파일, 계획 파일, 에이전트, 호라이즌, 결과 수식"""
    sig = item.ppd.signature
    lines = ["--- domain ---", dumps_domain(item.ppd).rstrip("\n")]
    if plan is not None:
        lines += ["--- plan ---", format_plan(plan, sig).rstrip("\n")]
    if agent is not None:
        lines.append(f"agent: {sig.agents.name_of(agent)}")
    lines.append(f"horizon: {item.horizon}")
    lines.append(f"outcome: {render_formula(item.omega, sig)}")
    return "\n".join(lines)


def replay(theorem: str, item: CorpusItem) -> CheckResult:
    """말뭉치 항목 하나에 검사 하나를 다시 실행"""
    failure = CHECKS[theorem](item)
    if failure is None:
        return CheckResult(theorem, item.seed, True)
    agent, plan, detail = failure
    return CheckResult(theorem, item.seed, False, detail, render_replay(item, agent, plan))


def _check_corpus(theorem: str, corpus: Sequence[CorpusItem]) -> List[CheckResult]:
    return [replay(theorem, item) for item in corpus]


def check_theorem_1(corpus: Sequence[CorpusItem]) -> List[CheckResult]:
    return _check_corpus("T1", corpus)


def check_fig2(corpus: Sequence[CorpusItem]) -> List[CheckResult]:
    return _check_corpus("FIG2", corpus)


def check_theorem_3(corpus: Sequence[CorpusItem]) -> List[CheckResult]:
    return _check_corpus("T3", corpus)


def check_theorem_4(corpus: Sequence[CorpusItem]) -> List[CheckResult]:
    return _check_corpus("T4", corpus)


def check_theorem_5(corpus: Sequence[CorpusItem]) -> List[CheckResult]:
    return _check_corpus("T5", corpus)


def check_exclusion(corpus: Sequence[CorpusItem]) -> List[CheckResult]:
    return _check_corpus("EXCL", corpus)


def check_equivalences(corpus: Sequence[CorpusItem]) -> List[CheckResult]:
    return _check_corpus("EQUIV", corpus)


def _run_seed(bounds: DomainBounds, seed: int) -> List[CheckResult]:
    item = build_item(bounds, seed)
    return [replay(theorem, item) for theorem in CHECKS]


def run_suite(bounds: DomainBounds, seeds: Iterable[int], workers: int = 1) -> List[CheckResult]:
    """
    시드마다 말뭉치 항목을 만들어 모든 검사를 실행

    Args:
        bounds: 생성 범위
        seeds: 시드 목록
        workers: 프로세스 수 (1이면 현재 프로세스에서 실행)

    Returns:
        List[CheckResult]: (시드, 검사 순서)로 정렬된 결과
    """
    seeds = list(seeds)
    logger.info(f"[1단계] 정리 검증 시작: 시드 {len(seeds)}개, 작업자 {workers}개")

    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_run_seed, [bounds] * len(seeds), seeds))
    else:
        batches = [_run_seed(bounds, seed) for seed in seeds]

    order = {name: idx for idx, name in enumerate(CHECKS)}
    results = sorted((r for batch in batches for r in batch), key=lambda r: (r.seed, order[r.theorem]))
    failed = sum(1 for r in results if not r.passed)
    logger.info(f"[2단계] 정리 검증 완료: {len(results)}건 중 실패 {failed}건")
    return results


def render_report(results: Sequence[CheckResult]) -> str:
    """(검사, 시드)마다 한 줄 PASS/FAIL, 실패 줄 뒤에는 재현 블록"""
    order = {name: idx for idx, name in enumerate(CHECKS)}
    lines = []
    for result in sorted(results, key=lambda r: (r.seed, order.get(r.theorem, len(order)))):
        status = "PASS" if result.passed else "FAIL"
        lines.append(f"{result.theorem} seed={result.seed} {status}")
        if not result.passed:
            lines.append(f"  reason: {result.detail}")
            lines.extend(f"  {line}" for line in result.replay_text.splitlines())
    failed = sum(1 for r in results if not r.passed)
    lines.append(f"total={len(results)} failed={failed}")
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    demo_bounds = DomainBounds.from_env()
    print(render_report(run_suite(demo_bounds, range(1, 11))), end="")
