"""
책임 분석 엔진 - 핵심 모델
기호 테이블, 상태, 행동 이론(γ⁺, γ⁻), PL+ 수식 평가, 관성 원칙 기반 다음 상태 계산
"""

import logging
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache
from types import MappingProxyType
from typing import TYPE_CHECKING, Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

from errors import ValidationError

if TYPE_CHECKING:
    from planning import JointPlan

logger = logging.getLogger(__name__)

# 아무것도 하지 않는 행동은 항상 ActionId 0
SKIP = "skip"
SKIP_ID = 0

IDENT_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

# 명제 이름으로 쓸 수 없는 예약어
RESERVED_WORDS = frozenset({"X", "U", "G", "F", "do", "true", "false"})
# 에이전트/행동 이름은 do(...) 안에서만 쓰이므로 시간 연산자 이름은 허용
RESERVED_ACTOR_WORDS = frozenset({"do", "true", "false"})


# =============================================================================
# 기호 테이블
# =============================================================================

@dataclass(frozen=True)
class SymbolTable:
    """선언 순서대로 이름을 정수 ID로 매핑하는 테이블"""

    kind: str
    names: Tuple[str, ...]

    def __post_init__(self):
        seen = set()
        for name in self.names:
            if not IDENT_PATTERN.match(name):
                raise ValidationError(f"잘못된 {self.kind} 이름: '{name}'")
            if name in seen:
                raise ValidationError(f"중복 선언된 {self.kind}: '{name}'")
            seen.add(name)

    @cached_property
    def _index(self) -> Dict[str, int]:
        return {name: idx for idx, name in enumerate(self.names)}

    def id_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ValidationError(f"선언되지 않은 {self.kind}: '{name}'") from None

    def name_of(self, ident: int) -> str:
        if not 0 <= ident < len(self.names):
            raise ValidationError(f"범위를 벗어난 {self.kind} ID: {ident}")
        return self.names[ident]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class Signature:
    """명제, 에이전트, 행동 기호 집합"""

    props: SymbolTable
    agents: SymbolTable
    actions: SymbolTable

    @classmethod
    def build(cls, agents: Iterable[str], props: Iterable[str], actions: Iterable[str]) -> "Signature":
        """
        이름 목록으로 시그니처 생성

        skip은 선언 여부와 관계없이 ActionId 0으로 고정된다.

        Args:
            agents: 에이전트 이름 (선언 순서)
            props: 명제 이름 (선언 순서)
            actions: 행동 이름 (skip 포함 여부 무관)

        Returns:
            Signature
        """
        agents = tuple(agents)
        props = tuple(props)
        actions = (SKIP,) + tuple(a for a in actions if a != SKIP)

        if not agents:
            raise ValidationError("에이전트가 하나 이상 필요합니다.")
        for name in props:
            if name in RESERVED_WORDS:
                raise ValidationError(f"예약어는 명제 이름으로 쓸 수 없습니다: '{name}'")
        for name in agents + actions:
            if name in RESERVED_ACTOR_WORDS:
                raise ValidationError(f"예약어는 에이전트/행동 이름으로 쓸 수 없습니다: '{name}'")

        return cls(
            props=SymbolTable("명제", props),
            agents=SymbolTable("에이전트", agents),
            actions=SymbolTable("행동", actions),
        )

    @property
    def n_props(self) -> int:
        return len(self.props)

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def n_actions(self) -> int:
        return len(self.actions)


# =============================================================================
# 상태
# =============================================================================

@dataclass(frozen=True, order=True)
class State:
    """참인 명제 집합 (선언된 명제 위의 비트셋)"""

    bits: int = 0

    @classmethod
    def of(cls, props: Iterable[int]) -> "State":
        bits = 0
        for p in props:
            if p < 0:
                raise ValidationError(f"잘못된 명제 ID: {p}")
            bits |= 1 << p
        return cls(bits)

    def __contains__(self, prop: int) -> bool:
        return (self.bits >> prop) & 1 == 1

    def props(self) -> Tuple[int, ...]:
        return tuple(p for p in range(self.bits.bit_length()) if (self.bits >> p) & 1)

    def validate(self, signature: Signature) -> "State":
        if self.bits < 0 or self.bits >> signature.n_props:
            raise ValidationError(f"선언되지 않은 명제를 포함한 상태: {self.bits:b}")
        return self


# =============================================================================
# 수식 (L_PL+ 커널)
# =============================================================================

class Formula:
    """수식 AST 공통 기반"""

    __slots__ = ()

    def children(self) -> Tuple["Formula", ...]:
        return ()


@dataclass(frozen=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True)
class Prop(Formula):
    prop: int


@dataclass(frozen=True)
class Does(Formula):
    agent: int
    action: int


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


TRUE = Const(True)
FALSE = Const(False)

PL_NODE_TYPES = (Const, Prop, Does, Not, And)


def disj(left: Formula, right: Formula) -> Formula:
    """φ ∨ ψ ≜ ¬(¬φ ∧ ¬ψ)"""
    return Not(And(Not(left), Not(right)))


def implies(left: Formula, right: Formula) -> Formula:
    """φ → ψ ≜ ¬(φ ∧ ¬ψ)"""
    return Not(And(left, Not(right)))


def validate_formula(formula: Formula, signature: Signature,
                     node_types: Tuple[type, ...] = PL_NODE_TYPES) -> Formula:
    """
    수식의 모든 원자가 선언된 기호를 참조하는지 검사

    Args:
        formula: 검사할 수식
        signature: 기호 집합
        node_types: 허용되는 노드 타입 (기본: PL+ 커널)

    Returns:
        Formula: 입력 그대로

    Raises:
        ValidationError: 선언되지 않은 기호 또는 허용되지 않은 연산자
    """
    stack = [formula]
    while stack:
        node = stack.pop()
        if not isinstance(node, node_types):
            raise ValidationError(f"이 위치에서 허용되지 않는 연산자: {type(node).__name__}")
        if isinstance(node, Prop):
            signature.props.name_of(node.prop)
        elif isinstance(node, Does):
            signature.agents.name_of(node.agent)
            signature.actions.name_of(node.action)
        stack.extend(node.children())
    return formula


def holds_at(formula: Formula, state: State, row: Optional[Tuple[int, ...]]) -> bool:
    """상태와 해당 시점의 행동 행(마지막 시점이면 None)에서 PL+ 수식 평가"""
    if isinstance(formula, Prop):
        return formula.prop in state
    if isinstance(formula, Not):
        return not holds_at(formula.operand, state, row)
    if isinstance(formula, And):
        return holds_at(formula.left, state, row) and holds_at(formula.right, state, row)
    if isinstance(formula, Does):
        return row is not None and row[formula.agent] == formula.action
    if isinstance(formula, Const):
        return formula.value
    raise ValidationError(f"PL+ 평가에서 지원하지 않는 연산자: {type(formula).__name__}")


@lru_cache(maxsize=4096)
def _validated(formula: Formula, signature: Signature) -> Formula:
    return validate_formula(formula, signature)


# =============================================================================
# 행동 이론
# =============================================================================

# (agent, action, prop)
EffectKey = Tuple[int, int, int]


@dataclass(frozen=True, eq=False)
class ActionTheory:
    """
    양/음 효과 전제조건 함수 쌍 (γ⁺, γ⁻)

    항목이 없으면 상수 거짓. skip 행동에는 항목을 둘 수 없다.
    """

    signature: Signature
    pos: Mapping[EffectKey, Formula]
    neg: Mapping[EffectKey, Formula]

    def __post_init__(self):
        for label, table in (("γ+", self.pos), ("γ-", self.neg)):
            for (agent, action, prop), formula in table.items():
                self.signature.agents.name_of(agent)
                self.signature.actions.name_of(action)
                self.signature.props.name_of(prop)
                if action == SKIP_ID:
                    raise ValidationError(
                        f"skip 행동에는 효과를 줄 수 없습니다: {label}"
                        f"({self.signature.agents.name_of(agent)}, skip, {self.signature.props.name_of(prop)})"
                    )
                validate_formula(formula, self.signature)
        object.__setattr__(self, "pos", MappingProxyType(dict(self.pos)))
        object.__setattr__(self, "neg", MappingProxyType(dict(self.neg)))

    @classmethod
    def build(cls, signature: Signature, pos: Mapping[EffectKey, Formula] = None,
              neg: Mapping[EffectKey, Formula] = None) -> "ActionTheory":
        return cls(signature, dict(pos or {}), dict(neg or {}))

    def gamma_plus(self, agent: int, action: int, prop: int) -> Formula:
        return self.pos.get((agent, action, prop), FALSE)

    @cached_property
    def _effects(self) -> Dict[Tuple[int, int], Tuple[tuple, tuple]]:
        grouped: Dict[Tuple[int, int], Tuple[list, list]] = {}
        for (agent, action, prop), formula in sorted(self.pos.items()):
            grouped.setdefault((agent, action), ([], []))[0].append((prop, formula))
        for (agent, action, prop), formula in sorted(self.neg.items()):
            grouped.setdefault((agent, action), ([], []))[1].append((prop, formula))
        return {key: (tuple(adds), tuple(dels)) for key, (adds, dels) in grouped.items()}

    def effects_of(self, agent: int, action: int) -> Tuple[tuple, tuple]:
        """(agent, action)의 ((prop, γ⁺) 목록, (prop, γ⁻) 목록)"""
        return self._effects.get((agent, action), ((), ()))


# =============================================================================
# 히스토리
# =============================================================================

@dataclass(frozen=True)
class History:
    """
    k-히스토리: 상태 0..k, 행동 행렬 0..k-1

    actions[t][agent] 는 t와 t+1 사이에 agent가 수행한 행동
    """

    signature: Signature
    states: Tuple[State, ...]
    actions: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if not self.states:
            raise ValidationError("히스토리에는 상태가 하나 이상 필요합니다.")
        if len(self.actions) != len(self.states) - 1:
            raise ValidationError(
                f"행동 행 수({len(self.actions)})가 상태 수({len(self.states)}) - 1 과 다릅니다."
            )
        for row in self.actions:
            if len(row) != self.signature.n_agents:
                raise ValidationError("행동 행이 모든 에이전트를 정확히 한 번씩 포함해야 합니다.")
            for action in row:
                self.signature.actions.name_of(action)
        for state in self.states:
            state.validate(self.signature)

    @property
    def horizon(self) -> int:
        return len(self.states) - 1

    def action(self, agent: int, t: int) -> int:
        return self.actions[t][agent]

    def row(self, t: int) -> Optional[Tuple[int, ...]]:
        return self.actions[t] if t < self.horizon else None

    def check_consistency(self, theory: ActionTheory) -> bool:
        """각 상태가 직전 상태와 행동 행에서 다시 계산한 결과와 같은지 확인"""
        for t in range(self.horizon):
            if successor_state(self.states[t], self.actions[t], theory) != self.states[t + 1]:
                logger.debug(f"{t}단계 재계산 불일치")
                return False
        return True


def _check_time(history: History, t: int):
    if not 0 <= t <= history.horizon:
        raise ValidationError(f"시점 {t}가 0..{history.horizon} 범위를 벗어났습니다.")


def eval_pl(history: History, t: int, formula: Formula) -> bool:
    """
    히스토리의 시점 t에서 PL+ 수식 평가

    Args:
        history: 평가 대상 히스토리
        t: 시점 (0..k)
        formula: PL+ 수식

    Returns:
        bool: h, t ⊨ φ

    Raises:
        ValidationError: 선언되지 않은 기호, 시간 연산자, 범위 밖 시점
    """
    _check_time(history, t)
    _validated(formula, history.signature)
    return holds_at(formula, history.states[t], history.row(t))


JointAction = Union[Mapping[int, int], Sequence[int]]


def _as_row(joint_action: JointAction, signature: Signature) -> Tuple[int, ...]:
    if isinstance(joint_action, Mapping):
        if set(joint_action) != set(range(signature.n_agents)):
            raise ValidationError("공동 행동은 모든 에이전트에게 정확히 하나의 행동을 배정해야 합니다.")
        row = tuple(joint_action[agent] for agent in range(signature.n_agents))
    else:
        row = tuple(joint_action)
        if len(row) != signature.n_agents:
            raise ValidationError("공동 행동은 모든 에이전트에게 정확히 하나의 행동을 배정해야 합니다.")
    for action in row:
        signature.actions.name_of(action)
    return row


def successor_state(state: State, joint_action: JointAction, theory: ActionTheory) -> State:
    """
    관성 원칙을 따르는 다음 상태 계산

    s' = (s \\ D) ∪ A, 실행된 행동의 효과만 반영하며 같은 명제에 대해
    추가와 삭제가 동시에 성립하면 진리값을 유지한다.

    Args:
        state: 현재 상태
        joint_action: 에이전트별 행동 (매핑 또는 에이전트 순서의 시퀀스)
        theory: 행동 이론

    Returns:
        State: 다음 상태
    """
    return step_state(state, _as_row(joint_action, theory.signature), theory)


def step_state(state: State, row: Tuple[int, ...], theory: ActionTheory) -> State:
    """검증 없이 한 단계 진행 (row는 이미 검증된 행동 행)"""
    added = 0
    deleted = 0
    for agent, action in enumerate(row):
        adds, dels = theory.effects_of(agent, action)
        for prop, formula in adds:
            if holds_at(formula, state, row):
                added |= 1 << prop
        for prop, formula in dels:
            if holds_at(formula, state, row):
                deleted |= 1 << prop

    # 충돌 명제는 관성
    net_add = added & ~deleted
    net_del = deleted & ~added
    return State((state.bits & ~net_del) | net_add)


def generate_history(plan: "JointPlan", s0: State, theory: ActionTheory) -> History:
    """
    전체 에이전트 공동 계획을 s0에서 실행한 히스토리 생성

    Args:
        plan: 모든 에이전트를 포함하는 공동 k-계획
        s0: 초기 상태
        theory: 행동 이론

    Returns:
        History: 결정적으로 생성된 k-히스토리
    """
    signature = theory.signature
    if plan.coalition != tuple(range(signature.n_agents)):
        raise ValidationError("히스토리 생성에는 모든 에이전트를 포함하는 계획이 필요합니다.")
    s0.validate(signature)

    rows = plan.rows()
    return History(signature, trace_states(rows, s0, theory), rows)


def trace_states(rows: Sequence[Tuple[int, ...]], s0: State, theory: ActionTheory) -> Tuple[State, ...]:
    """행동 행 시퀀스를 s0에서 실행한 상태 열"""
    states = [s0]
    for row in rows:
        states.append(step_state(states[-1], row, theory))
    return tuple(states)
