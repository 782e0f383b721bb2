"""
책임 분석 엔진 - 계획 모듈
공동 계획 대수(부분계획, 합집합, 호환성), PPD, 완성 계획 열거, 불가피성/무력함 판정
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Dict, Iterable, Iterator, Mapping, Optional, Sequence, Tuple

from core_model import ActionTheory, Formula, Signature, State, trace_states
from errors import DomainFileError, ValidationError
from ltlf import compile_formula, holds_on_trace, validate_ltlf

logger = logging.getLogger(__name__)

Rows = Tuple[Tuple[int, ...], ...]


# =============================================================================
# 공동 계획
# =============================================================================

@dataclass(frozen=True)
class JointPlan:
    """
    연합(coalition)의 에이전트별 길이 k 행동 시퀀스

    seqs 는 에이전트 ID 오름차순의 (agent, 시퀀스) 쌍. 개인 계획은 연합 크기 1인 경우.
    """

    seqs: Tuple[Tuple[int, Tuple[int, ...]], ...]

    def __post_init__(self):
        if not self.seqs:
            raise ValidationError("공동 계획의 연합은 비어 있을 수 없습니다.")
        agents = [agent for agent, _ in self.seqs]
        if agents != sorted(set(agents)):
            raise ValidationError("계획의 에이전트는 중복 없이 오름차순이어야 합니다.")
        lengths = {len(seq) for _, seq in self.seqs}
        if len(lengths) != 1:
            raise ValidationError(f"계획의 시퀀스 길이가 서로 다릅니다: {sorted(lengths)}")

    @classmethod
    def of(cls, seqs: Mapping[int, Sequence[int]]) -> "JointPlan":
        return cls(tuple(sorted((agent, tuple(seq)) for agent, seq in seqs.items())))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], n_agents: int) -> "JointPlan":
        """시점별 행동 행으로부터 전체 에이전트 계획 생성 (k=0 허용)"""
        return cls(tuple((agent, tuple(row[agent] for row in rows)) for agent in range(n_agents)))

    @property
    def coalition(self) -> Tuple[int, ...]:
        return tuple(agent for agent, _ in self.seqs)

    @property
    def horizon(self) -> int:
        return len(self.seqs[0][1])

    def seq(self, agent: int) -> Tuple[int, ...]:
        for member, seq in self.seqs:
            if member == agent:
                return seq
        raise ValidationError(f"에이전트 {agent}는 계획의 연합에 없습니다.")

    def row(self, t: int) -> Tuple[int, ...]:
        return tuple(seq[t] for _, seq in self.seqs)

    def rows(self) -> Rows:
        return tuple(self.row(t) for t in range(self.horizon))

    def validate(self, signature: Signature) -> "JointPlan":
        for agent, seq in self.seqs:
            signature.agents.name_of(agent)
            for action in seq:
                signature.actions.name_of(action)
        return self

    def is_full(self, signature: Signature) -> bool:
        return self.coalition == tuple(range(signature.n_agents))


def subplan(plan: JointPlan, coalition: Iterable[int]) -> JointPlan:
    """
    연합 J로 제한한 부분 계획 π^J

    Raises:
        ValidationError: J가 비었거나 계획의 연합에 포함되지 않을 때
    """
    wanted = set(coalition)
    if not wanted:
        raise ValidationError("부분 계획의 연합은 비어 있을 수 없습니다.")
    missing = wanted - set(plan.coalition)
    if missing:
        raise ValidationError(f"계획의 연합에 없는 에이전트: {sorted(missing)}")
    return JointPlan(tuple((agent, seq) for agent, seq in plan.seqs if agent in wanted))


def complement(plan: JointPlan, coalition: Iterable[int]) -> Optional[JointPlan]:
    """π^{−J}; 남는 에이전트가 없으면 빈 계획(None)"""
    removed = set(coalition)
    rest = tuple((agent, seq) for agent, seq in plan.seqs if agent not in removed)
    return JointPlan(rest) if rest else None


def plan_union(left: JointPlan, right: JointPlan) -> JointPlan:
    if set(left.coalition) & set(right.coalition):
        raise ValidationError(
            f"합집합의 연합이 겹칩니다: {sorted(set(left.coalition) & set(right.coalition))}"
        )
    if left.horizon != right.horizon:
        raise ValidationError(f"길이가 다른 계획은 합칠 수 없습니다: {left.horizon} vs {right.horizon}")
    return JointPlan(tuple(sorted(left.seqs + right.seqs)))


def is_compatible(smaller: JointPlan, larger: JointPlan) -> bool:
    """∃π3. larger = smaller ∪ π3"""
    if smaller.horizon != larger.horizon:
        return False
    mine = dict(larger.seqs)
    return all(agent in mine and mine[agent] == seq for agent, seq in smaller.seqs)


# =============================================================================
# 열거
# =============================================================================

def _check_partial(partial: Optional[JointPlan], k: int, signature: Signature):
    if k < 0:
        raise ValidationError(f"호라이즌은 0 이상이어야 합니다: {k}")
    if partial is not None:
        partial.validate(signature)
        if partial.horizon != k:
            raise ValidationError(f"부분 계획의 길이({partial.horizon})가 호라이즌({k})과 다릅니다.")


def completion_rows(partial: Optional[JointPlan], k: int, n_agents: int, n_actions: int) -> Iterator[Rows]:
    """
    부분 계획과 호환되는 전체 계획의 행동 행을 사전식 순서로 생성

    자유 슬롯은 (에이전트, 시점) 순서, 각 슬롯은 행동 선언 순서로 바뀐다.
    """
    fixed: Dict[int, Tuple[int, ...]] = dict(partial.seqs) if partial is not None else {}
    free = [(agent, t) for agent in range(n_agents) if agent not in fixed for t in range(k)]
    template = [[fixed[agent][t] if agent in fixed else 0 for agent in range(n_agents)] for t in range(k)]

    for choice in product(range(n_actions), repeat=len(free)):
        for (agent, t), action in zip(free, choice):
            template[t][agent] = action
        yield tuple(tuple(row) for row in template)


def enumerate_completions(partial: Optional[JointPlan], k: int, signature: Signature) -> Iterator[JointPlan]:
    """
    부분 계획(없으면 빈 계획)과 호환되는 모든 전체 k-계획을 사전식 순서로 생성

    Args:
        partial: 고정할 연합의 계획 또는 None
        k: 호라이즌
        signature: 에이전트/행동 기호 집합

    Returns:
        Iterator[JointPlan]: |Act|^(|Agt∖coalition|·k) 개
    """
    _check_partial(partial, k, signature)
    for rows in completion_rows(partial, k, signature.n_agents, signature.n_actions):
        yield JointPlan.from_rows(rows, signature.n_agents)


def enumerate_individual_plans(agent: int, k: int, signature: Signature) -> Iterator[JointPlan]:
    """에이전트 하나의 k-시퀀스를 사전식 순서로 생성"""
    signature.agents.name_of(agent)
    for seq in product(range(signature.n_actions), repeat=k):
        yield JointPlan(((agent, tuple(seq)),))


# =============================================================================
# 결과 판정 오라클
# =============================================================================

class OutcomeOracle:
    """
    (행동 이론, ω, 호라이즌) 단위로 결과 진리값을 메모하는 판정기

    모든 계획 양화(전칭/존재)는 이 클래스를 거친다.
    """

    def __init__(self, theory: ActionTheory, omega: Formula, horizon: int):
        if horizon < 0:
            raise ValidationError(f"호라이즌은 0 이상이어야 합니다: {horizon}")
        validate_ltlf(omega, theory.signature)
        self.theory = theory
        self.omega = omega
        self.horizon = horizon
        self._program = compile_formula(omega)
        self._holds: Dict[Tuple[State, Rows], bool] = {}
        self._first: Dict[tuple, Optional[Rows]] = {}

    @property
    def signature(self) -> Signature:
        return self.theory.signature

    def holds(self, s0: State, rows: Rows) -> bool:
        key = (s0, rows)
        value = self._holds.get(key)
        if value is None:
            states = trace_states(rows, s0, self.theory)
            value = holds_on_trace(self._program, states, rows)
            self._holds[key] = value
        return value

    def holds_for(self, s0: State, plan: JointPlan) -> bool:
        if not plan.is_full(self.signature):
            raise ValidationError("결과 판정에는 모든 에이전트를 포함하는 계획이 필요합니다.")
        if plan.horizon != self.horizon:
            raise ValidationError(f"계획의 길이({plan.horizon})가 호라이즌({self.horizon})과 다릅니다.")
        return self.holds(s0, plan.rows())

    def first_completion(self, s0: State, partial: Optional[JointPlan], want: bool) -> Optional[JointPlan]:
        """
        partial과 호환되며 ω의 진리값이 want인 사전식 첫 전체 계획

        Args:
            s0: 시작 상태
            partial: 고정할 부분 계획 (None이면 빈 계획)
            want: 찾는 진리값

        Returns:
            Optional[JointPlan]: 없으면 None
        """
        key = (s0, partial.seqs if partial is not None else None, want)
        if key not in self._first:
            _check_partial(partial, self.horizon, self.signature)
            found = None
            sig = self.signature
            for rows in completion_rows(partial, self.horizon, sig.n_agents, sig.n_actions):
                if self.holds(s0, rows) == want:
                    found = rows
                    break
            self._first[key] = found
        rows = self._first[key]
        return None if rows is None else JointPlan.from_rows(rows, self.signature.n_agents)

    def all_satisfy(self, s0: State, partial: Optional[JointPlan]) -> bool:
        return self.first_completion(s0, partial, False) is None

    def some_violates(self, s0: State, partial: Optional[JointPlan]) -> Optional[JointPlan]:
        return self.first_completion(s0, partial, False)


@lru_cache(maxsize=256)
def get_oracle(theory: ActionTheory, omega: Formula, horizon: int) -> OutcomeOracle:
    """(이론, ω, k) 별 오라클 캐시"""
    return OutcomeOracle(theory, omega, horizon)


# =============================================================================
# PPD와 판정 결과
# =============================================================================

@dataclass(frozen=True, eq=False)
class PPD:
    """
    부분 정보 다중 에이전트 계획 도메인

    epistemic[i] 는 에이전트 i가 가능하다고 보는 시작 상태들 (선언 순서 유지).
    """

    theory: ActionTheory
    s0: State
    epistemic: Tuple[Tuple[State, ...], ...]

    def __post_init__(self):
        sig = self.theory.signature
        self.s0.validate(sig)
        if len(self.epistemic) != sig.n_agents:
            raise ValidationError("모든 에이전트에 인식 집합이 하나씩 필요합니다.")
        for agent, states in enumerate(self.epistemic):
            name = sig.agents.name_of(agent)
            if not states:
                raise ValidationError(f"{name}의 인식 집합이 비어 있습니다.")
            if len(set(states)) != len(states):
                raise ValidationError(f"{name}의 인식 집합에 중복된 상태가 있습니다.")
            for state in states:
                state.validate(sig)
            if self.s0 not in states:
                raise ValidationError(f"{name}의 인식 집합에 실제 초기 상태가 없습니다.")

    @classmethod
    def build(cls, theory: ActionTheory, s0: State,
              epistemic: Optional[Mapping[int, Sequence[State]]] = None) -> "PPD":
        """
        PPD 생성 (인식 집합 기본값 {s0}, 누락된 s0는 경고 후 추가)

        Args:
            theory: 행동 이론
            s0: 실제 초기 상태
            epistemic: 에이전트별 가능한 시작 상태 목록 (생략 가능)

        Returns:
            PPD
        """
        epistemic = dict(epistemic or {})
        sets = []
        for agent in range(theory.signature.n_agents):
            states = list(dict.fromkeys(epistemic.get(agent, ())))
            if not states:
                states = [s0]
            elif s0 not in states:
                logger.warning(
                    f"{theory.signature.agents.name_of(agent)}의 인식 집합에 초기 상태가 없어 추가합니다."
                )
                states.append(s0)
            sets.append(tuple(states))
        return cls(theory, s0, tuple(sets))

    @property
    def signature(self) -> Signature:
        return self.theory.signature

    def epistemic_set(self, agent: int) -> Tuple[State, ...]:
        self.signature.agents.name_of(agent)
        return self.epistemic[agent]


@dataclass(frozen=True)
class Verdict:
    """판정 결과와 근거 (증인 계획/상태/연합 또는 반례 계획)"""

    holds: bool
    witness_plan: Optional[JointPlan] = None
    witness_state: Optional[State] = None
    witness_coalition: Optional[Tuple[int, ...]] = None
    counter_plan: Optional[JointPlan] = field(default=None)


# =============================================================================
# 불가피성, 무력함, 계획 탐색
# =============================================================================

def is_inevitable(omega: Formula, s0: State, k: int, theory: ActionTheory) -> Verdict:
    """
    s0에서 모든 공동 k-계획의 히스토리가 ω를 만족하는지 판정

    Returns:
        Verdict: 불가피하지 않으면 counter_plan에 ω를 위반하는 사전식 첫 계획
    """
    s0.validate(theory.signature)
    counter = get_oracle(theory, omega, k).some_violates(s0, None)
    return Verdict(holds=counter is None, counter_plan=counter)


def is_powerless(agent: int, plan: JointPlan, s0: State, theory: ActionTheory, omega: Formula) -> bool:
    """에이전트 i의 행동만 바꿔서는 ω의 진리값이 달라지지 않는지"""
    sig = theory.signature
    sig.agents.name_of(agent)
    plan.validate(sig)
    oracle = get_oracle(theory, omega, plan.horizon)
    value = oracle.holds_for(s0, plan)
    return oracle.first_completion(s0, complement(plan, [agent]), not value) is None


def find_plan(omega: Formula, s0: State, k: int, theory: ActionTheory,
              partial: Optional[JointPlan] = None) -> Optional[JointPlan]:
    """partial과 호환되며 s0에서 ω를 달성하는 사전식 첫 전체 k-계획 (없으면 None)"""
    s0.validate(theory.signature)
    return get_oracle(theory, omega, k).first_completion(s0, partial, True)


# =============================================================================
# 계획 파일
# =============================================================================

def parse_plan(text: str, signature: Signature, path: str = None) -> JointPlan:
    """
    계획 파일 파싱 ('AGENT: act act ...' 한 줄에 에이전트 하나, '#' 주석)

    Raises:
        DomainFileError: 형식 오류, 중복 에이전트, 길이 불일치, 선언되지 않은 기호
    """
    seqs: Dict[int, Tuple[int, ...]] = {}
    length = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, tail = line.partition(":")
        if not sep:
            raise DomainFileError("'AGENT: act ...' 형식이 아닙니다.", path, lineno)
        try:
            agent = signature.agents.id_of(head.strip())
            seq = tuple(signature.actions.id_of(tok) for tok in tail.split())
        except ValidationError as e:
            raise DomainFileError(str(e), path, lineno) from None
        if agent in seqs:
            raise DomainFileError(f"에이전트 '{head.strip()}'가 두 번 나옵니다.", path, lineno)
        if length is not None and len(seq) != length:
            raise DomainFileError(f"시퀀스 길이 {len(seq)}가 앞선 줄의 {length}와 다릅니다.", path, lineno)
        length = len(seq)
        seqs[agent] = seq

    if not seqs:
        raise DomainFileError("계획 파일에 에이전트가 없습니다.", path)
    return JointPlan.of(seqs)


def format_plan(plan: JointPlan, signature: Signature) -> str:
    lines = []
    for agent, seq in plan.seqs:
        words = " ".join(signature.actions.name_of(a) for a in seq)
        lines.append(f"{signature.agents.name_of(agent)}: {words}".rstrip())
    return "\n".join(lines) + "\n"


def format_state(state: State, signature: Signature) -> str:
    """상태를 '{p, q}' 형태로 (명제 선언 순서)"""
    return "{" + ", ".join(signature.props.name_of(p) for p in state.props()) + "}"
