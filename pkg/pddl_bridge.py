"""
책임 분석 엔진 - PDDL 변환 모듈
PPD와 귀속/예견 질의를 다중 에이전트 PDDL 도메인/문제 파일 묶음으로 내보내고, 같은 구조를 내부 탐색으로 풀어 판정 규칙을 검증
"""

import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from lark import Lark, Token, Tree
from lark.exceptions import LarkError

from core_model import FALSE, TRUE, And, Const, Does, Formula, Not, Prop, Signature, State, holds_at
from errors import UnsupportedFeatureError, UnsupportedFragmentError, ValidationError
from ltlf import Next, Until, render_formula
from planning import PPD, JointPlan, complement, completion_rows, find_plan, get_oracle, subplan
from responsibility import ResponsibilityKind

logger = logging.getLogger(__name__)

HEADER = (
    ";; responsibility engine PDDL bridge (multi-agent PDDL with PDDL3 constraints)\n"
    ";; encoding: each agent records its choice for step ?t with (do ?a <act> ?t) and stages the\n"
    ";; effects of that choice whose preconditions mention no other agent as (pending-add-p ?w) /\n"
    ";; (pending-del-p ?w). the tick action moves world ?w from ?t to its successor once every member\n"
    ";; agent has chosen, resolving staged effects and the remaining effect preconditions with inertia\n"
    ";; on conflicts. do(j,b) inside a tick condition is read as: the member of ?w playing role-j\n"
    ";; chose b at ?t.\n"
    ";; outcome constraints are boolean combinations of (always s) / (sometime s) / (at end s) over\n"
    ";; state formulas; a top-level (at end s) is stated as a final-state goal. a state formula outside\n"
    ";; any temporal operator is evaluated at the initial state and folded.\n"
)

ENCODING_WORDS = frozenset({
    "agent", "act", "step", "world", "role", "member", "now", "succ", "chosen", "do", "tick", "w",
})
PDDL_KEYWORDS = frozenset({
    "define", "domain", "problem", "and", "or", "not", "imply", "exists", "forall", "when",
    "either", "object", "number", "always", "sometime", "within", "at-most-once", "sometime-after",
    "sometime-before", "always-within", "hold-during", "hold-after", "at", "end", "start", "over",
    "all", "preference", "increase", "decrease", "assign", "total-time", "minimize", "maximize",
})
_STEP_NAME = re.compile(r"^t\d+$")
_PDDL_NAME = re.compile(r"^[A-Za-z][A-Za-z0-9_-]*$")


# =============================================================================
# 구조화된 문제
# =============================================================================

@dataclass(frozen=True)
class WorldCopy:
    """문제 안의 세계 사본 하나 (사본 접미사, 초기 상태, 고정 계획, 결과 제약)"""

    suffix: str
    init: State
    pinned: Optional[JointPlan]
    outcome: Optional[Formula]


@dataclass(frozen=True)
class BridgeProblem:
    """
    내보낼 문제 하나

    agreement 의 에이전트들은 모든 사본에서 같은 행동을 해야 한다.
    """

    name: str
    horizon: int
    worlds: Tuple[WorldCopy, ...]
    agreement: Tuple[int, ...] = ()


@dataclass(frozen=True)
class DecisionRule:
    """
    문제별 풀림 여부로 책임 판정을 복원하는 규칙

    mode 'all': 모든 문제의 풀림 여부가 expected와 같을 때 참
    mode 'any': 어떤 문제라도 풀림 여부가 expected와 같으면 참
    mode 'any-group': 연속된 문제 묶음(groups 크기) 중 하나라도 전부 expected와 같으면 참
    """

    mode: str
    expected: Tuple[bool, ...]
    groups: Tuple[int, ...] = ()

    @classmethod
    def all_solvable(cls, n: int) -> "DecisionRule":
        return cls("all", (True,) * n)

    @classmethod
    def any_solvable(cls, n: int) -> "DecisionRule":
        return cls("any", (True,) * n)

    @classmethod
    def first_solvable_rest_unsolvable(cls, n: int) -> "DecisionRule":
        return cls("all", (True,) + (False,) * (n - 1))

    @classmethod
    def any_group(cls, rules: Sequence["DecisionRule"]) -> "DecisionRule":
        """'all' 규칙들 중 하나라도 성립하면 참인 규칙"""
        expected = tuple(want for rule in rules for want in rule.expected)
        return cls("any-group", expected, tuple(len(rule.expected) for rule in rules))

    def group_slices(self) -> List[slice]:
        bounds, start = [], 0
        for size in self.groups:
            bounds.append(slice(start, start + size))
            start += size
        return bounds

    def describe(self, filenames: Sequence[str]) -> str:
        parts = [f"{name} {'solvable' if want else 'unsolvable'}" for name, want in zip(filenames, self.expected)]
        if self.mode == "any-group":
            groups = [" and ".join(parts[part]) for part in self.group_slices()]
            return "holds iff " + " or ".join(f"({group})" for group in groups)
        joiner = " and " if self.mode == "all" else " or "
        return "holds iff " + joiner.join(parts)


def evaluate_rule(rule: DecisionRule, solved: Sequence[bool]) -> bool:
    if len(solved) != len(rule.expected):
        raise ValidationError(f"규칙의 문제 수({len(rule.expected)})와 결과 수({len(solved)})가 다릅니다.")
    matches = [got == want for got, want in zip(solved, rule.expected)]
    if rule.mode == "any-group":
        return any(all(matches[part]) for part in rule.group_slices())
    return all(matches) if rule.mode == "all" else any(matches)


@dataclass(frozen=True)
class BridgeFile:
    filename: str
    text: str
    problem: BridgeProblem


@dataclass(frozen=True)
class BridgeExport:
    """질의 하나에 대한 문제 파일들과 판정 규칙"""

    label: str
    files: Tuple[BridgeFile, ...]
    rule: DecisionRule

    def entries(self) -> List[Tuple[str, str, str]]:
        """(파일명, 텍스트, 규칙 설명) 목록"""
        description = f"{self.label} {self.rule.describe([f.filename for f in self.files])}"
        return [(f.filename, f.text, description) for f in self.files]


@dataclass(frozen=True)
class BridgeQuery:
    """(PPD, 계획, 에이전트, ω). 귀속이면 전체 계획, 예견이면 개인 계획"""

    ppd: PPD
    plan: JointPlan
    agent: int
    omega: Formula
    name: str = "resp"


# =============================================================================
# 이름 검사
# =============================================================================

def check_names(signature: Signature):
    """
    PDDL 인코딩 어휘/키워드와 충돌하는 기호 이름 거부

    PDDL은 대소문자를 구분하지 않으므로 소문자 기준으로 비교한다.

    Raises:
        UnsupportedFeatureError: 충돌하는 이름
    """
    objects: Dict[str, str] = {}
    for kind, names in (("에이전트", signature.agents.names), ("행동", signature.actions.names)):
        for name in names:
            lowered = name.lower()
            if lowered in ENCODING_WORDS or lowered in PDDL_KEYWORDS or _STEP_NAME.match(lowered):
                raise UnsupportedFeatureError(f"{kind} 이름 '{name}'이 PDDL 인코딩 어휘와 충돌합니다.")
            if not _PDDL_NAME.match(name):
                raise UnsupportedFeatureError(f"{kind} 이름 '{name}'은 PDDL 이름으로 쓸 수 없습니다.")
            if lowered in objects:
                raise UnsupportedFeatureError(
                    f"{kind} 이름 '{name}'이 {objects[lowered]} 이름과 대소문자 없이 같습니다."
                )
            objects[lowered] = kind
    predicates = set()
    for name in signature.props.names:
        lowered = name.lower()
        if lowered in ENCODING_WORDS or lowered in PDDL_KEYWORDS or not _PDDL_NAME.match(name):
            raise UnsupportedFeatureError(f"명제 이름 '{name}'을 PDDL 술어로 쓸 수 없습니다.")
        if lowered in predicates:
            raise UnsupportedFeatureError(f"명제 이름 '{name}'이 다른 명제와 대소문자 없이 같습니다.")
        predicates.add(lowered)


def _check_name(name: str) -> str:
    if not _PDDL_NAME.match(name):
        raise ValidationError(f"PDDL 이름으로 쓸 수 없습니다: '{name}'")
    return name


# =============================================================================
# 결과 수식 → 제약
# =============================================================================

def _is_state_formula(formula: Formula) -> bool:
    if isinstance(formula, (Prop, Const)):
        return True
    if isinstance(formula, Does):
        raise UnsupportedFragmentError("결과 수식의 do(...) 원자는 PDDL 제약으로 표현할 수 없습니다.")
    if isinstance(formula, Not):
        return _is_state_formula(formula.operand)
    if isinstance(formula, And):
        return _is_state_formula(formula.left) and _is_state_formula(formula.right)
    return False


def _negate(formula: Formula) -> Formula:
    return formula.operand if isinstance(formula, Not) else Not(formula)


def _final_state_operand(formula: Formula) -> Optional[Formula]:
    """
    ◇ 아래의 ¬◇X (X는 상태 수식) 이면 ¬X

    유한 트레이스에서 ◇□ψ 와 □◇ψ 는 모두 마지막 상태의 ψ 와 같다.
    """
    if not (isinstance(formula, Not) and isinstance(formula.operand, Until)):
        return None
    inner = formula.operand
    if inner.left != TRUE or not _is_state_formula(inner.right):
        return None
    return _negate(inner.right)


# 제약 트리: ("const", bool) | ("and", a, b) | ("or", a, b) | ("always", s) | ("sometime", s) | ("at-end", s)
Constraint = tuple


def _and(left: Constraint, right: Constraint) -> Constraint:
    if left == ("const", False) or right == ("const", False):
        return ("const", False)
    if left == ("const", True):
        return right
    if right == ("const", True):
        return left
    return ("and", left, right)


def _or(left: Constraint, right: Constraint) -> Constraint:
    if left == ("const", True) or right == ("const", True):
        return ("const", True)
    if left == ("const", False):
        return right
    if right == ("const", False):
        return left
    return ("or", left, right)


def outcome_constraint(formula: Formula, init: State, positive: bool = True) -> Constraint:
    """
    지원 조각의 결과 수식을 부정 정규형 제약 트리로 변환

    Raises:
        UnsupportedFragmentError: X, 일반 U, ◇□/□◇ 밖의 중첩 시간 연산자, do 원자
    """
    if _is_state_formula(formula):
        return ("const", holds_at(formula, init, None) == positive)
    if isinstance(formula, Not):
        return outcome_constraint(formula.operand, init, not positive)
    if isinstance(formula, And):
        left = outcome_constraint(formula.left, init, positive)
        right = outcome_constraint(formula.right, init, positive)
        return _and(left, right) if positive else _or(left, right)
    if isinstance(formula, Until):
        if formula.left != TRUE:
            raise UnsupportedFragmentError("F/G 가 아닌 일반 U 는 PDDL 제약으로 표현할 수 없습니다.")
        final = _final_state_operand(formula.right)
        if final is not None:
            return ("at-end", final if positive else _negate(final))
        if not _is_state_formula(formula.right):
            raise UnsupportedFragmentError("PDDL 제약은 시간 연산자의 중첩을 지원하지 않습니다.")
        if positive:
            return ("sometime", formula.right)
        return ("always", Not(formula.right))
    if isinstance(formula, Next):
        raise UnsupportedFragmentError("X(다음) 연산자는 PDDL 제약으로 표현할 수 없습니다.")
    raise UnsupportedFragmentError(f"지원하지 않는 수식 노드: {type(formula).__name__}")


def check_fragment(formula: Formula):
    """ω와 ¬ω가 모두 지원 조각인지 확인 (초기 상태와 무관)"""
    outcome_constraint(formula, State(), True)
    outcome_constraint(formula, State(), False)


# =============================================================================
# 렌더링
# =============================================================================

def _state_pddl(formula: Formula, signature: Signature, world: str, step: str = "?t") -> str:
    if isinstance(formula, Prop):
        return f"({signature.props.name_of(formula.prop)} {world})"
    if isinstance(formula, Const):
        return "(and)" if formula.value else "(or)"
    if isinstance(formula, Not):
        return f"(not {_state_pddl(formula.operand, signature, world, step)})"
    if isinstance(formula, And):
        return (f"(and {_state_pddl(formula.left, signature, world, step)} "
                f"{_state_pddl(formula.right, signature, world, step)})")
    if isinstance(formula, Does):
        return _executed(formula.agent, formula.action, signature, world, step)
    raise UnsupportedFragmentError(f"상태 수식에 올 수 없는 노드: {type(formula).__name__}")


def _executed(agent: int, action: int, signature: Signature, world: str = "?w", step: str = "?t") -> str:
    role = f"role-{signature.agents.name_of(agent)}"
    return (f"(exists (?y - agent) (and (member ?y {world}) (role ?y {role}) "
            f"(do ?y {signature.actions.name_of(action)} {step})))")


def _constraint_pddl(constraint: Constraint, signature: Signature, world: str) -> str:
    tag = constraint[0]
    if tag == "const":
        return "(and)" if constraint[1] else "(always (or))"
    if tag in ("and", "or"):
        return (f"({tag} {_constraint_pddl(constraint[1], signature, world)} "
                f"{_constraint_pddl(constraint[2], signature, world)})")
    if tag == "at-end":
        return f"(at end {_state_pddl(constraint[1], signature, world)})"
    return f"({tag} {_state_pddl(constraint[1], signature, world)})"


def _split_final(tree: Constraint) -> Tuple[List[Formula], Constraint]:
    """최상위 논리곱의 at-end 항을 마지막 상태 목표로 분리"""
    if tree[0] == "at-end":
        return [tree[1]], ("const", True)
    if tree[0] == "and":
        left_finals, left = _split_final(tree[1])
        right_finals, right = _split_final(tree[2])
        return left_finals + right_finals, _and(left, right)
    return [], tree


def _goal_literals(formula: Formula, signature: Signature, world: str) -> List[str]:
    if isinstance(formula, And):
        return _goal_literals(formula.left, signature, world) + _goal_literals(formula.right, signature, world)
    if formula == TRUE:
        return []
    return [_state_pddl(formula, signature, world)]


def _executed_parts(entries: Sequence[Tuple[int, int, Formula]], signature: Signature) -> List[str]:
    return [
        f"(and {_executed(agent, action, signature)} {_state_pddl(formula, signature, '?w')})"
        for agent, action, formula in entries
    ]


def _disjunction(parts: Sequence[str]) -> Optional[str]:
    if not parts:
        return None
    if len(parts) == 1:
        return parts[0]
    return "(or " + " ".join(parts) + ")"


def _mentions_other_agent(formula: Formula, agent: int) -> bool:
    stack = [formula]
    while stack:
        node = stack.pop()
        if isinstance(node, Does) and node.agent != agent:
            return True
        stack.extend(node.children())
    return False


def _fold_own_choice(formula: Formula, agent: int, action: int) -> Formula:
    """γ 안의 do(agent, ·) 를 agent가 고른 행동으로 확정"""
    if isinstance(formula, Does) and formula.agent == agent:
        return Const(formula.action == action)
    if isinstance(formula, Not):
        return Not(_fold_own_choice(formula.operand, agent, action))
    if isinstance(formula, And):
        return And(_fold_own_choice(formula.left, agent, action), _fold_own_choice(formula.right, agent, action))
    return formula


# (부호, 명제) → [(에이전트, 행동, γ)]
EffectTable = Dict[Tuple[str, int], List[Tuple[int, int, Formula]]]


def _partition_effects(ppd: PPD) -> Tuple[EffectTable, EffectTable]:
    """
    γ± 항목을 행동 블록에서 미리 계산할 항목과 tick 에서 풀 항목으로 나누기

    다른 에이전트의 do(...)를 참조하지 않는 항목만 행동 블록에 둔다 (자기 do 원자는 접어서).
    """
    staged: EffectTable = {}
    deferred: EffectTable = {}
    for sign, table in (("add", ppd.theory.pos), ("del", ppd.theory.neg)):
        for (agent, action, prop), formula in sorted(table.items()):
            if _mentions_other_agent(formula, agent):
                deferred.setdefault((sign, prop), []).append((agent, action, formula))
                continue
            folded = _fold_own_choice(formula, agent, action)
            if folded != FALSE:
                staged.setdefault((sign, prop), []).append((agent, action, folded))
    return staged, deferred


def _pending(sign: str, prop: int, signature: Signature) -> str:
    return f"pending-{sign}-{signature.props.name_of(prop)}"


def _ordered_keys(table: EffectTable, signature: Signature) -> List[Tuple[str, int]]:
    return sorted(table, key=lambda key: (signature.props.name_of(key[1]), key[0]))


def _action_block(action: str, staged: EffectTable, signature: Signature) -> List[str]:
    action_id = signature.actions.id_of(action)
    effects = []
    for sign, prop in _ordered_keys(staged, signature):
        for agent, chosen, formula in staged[(sign, prop)]:
            if chosen != action_id:
                continue
            role = f"(role ?a role-{signature.agents.name_of(agent)})"
            condition = role if formula == TRUE else f"(and {role} {_state_pddl(formula, signature, '?w')})"
            effects.append(f"      (when {condition} ({_pending(sign, prop, signature)} ?w))")

    lines = [
        f"  (:action {action}",
        "    :agent ?a - agent",
        "    :parameters (?w - world ?t - step)",
        "    :precondition (and (member ?a ?w) (now ?w ?t) (not (chosen ?a ?t)))",
    ]
    if not effects:
        lines.append(f"    :effect (and (chosen ?a ?t) (do ?a {action} ?t)))")
        return lines
    lines.append(f"    :effect (and (chosen ?a ?t) (do ?a {action} ?t)")
    lines += effects
    lines[-1] += "))"
    return lines


def export_domain(ppd: PPD, name: str = "resp") -> str:
    """
    PPD를 다중 에이전트 PDDL 도메인으로 변환 (바이트 단위 결정적)

    각 행동 블록은 자기 γ± 조건을 pending-add/pending-del 로 기록하고,
    tick 은 그 기록과 다른 에이전트를 참조하는 나머지 조건을 관성 규칙으로 반영한다.

    Args:
        ppd: 도메인
        name: PDDL 도메인 이름

    Returns:
        str: (define (domain ...)) 문서

    Raises:
        UnsupportedFeatureError: 인코딩 어휘와 충돌하는 기호 이름
    """
    sig = ppd.signature
    check_names(sig)
    _check_name(name)
    staged, deferred = _partition_effects(ppd)

    roles = " ".join(f"role-{agent}" for agent in sig.agents.names)
    lines = [
        HEADER.rstrip("\n"),
        f"(define (domain {name})",
        "  (:requirements :strips :typing :negative-preconditions :disjunctive-preconditions",
        "    :existential-preconditions :universal-preconditions :conditional-effects",
        "    :constraints :multi-agent)",
        "  (:types agent act step world role)",
        "  (:constants",
        f"    {' '.join(sorted(sig.actions.names))} - act",
        f"    {roles} - role)",
        "  (:predicates",
    ]
    lines += [f"    ({prop} ?w - world)" for prop in sorted(sig.props.names)]
    lines += [f"    ({_pending(sign, prop, sig)} ?w - world)" for sign, prop in _ordered_keys(staged, sig)]
    lines += [
        "    (member ?a - agent ?w - world)",
        "    (role ?a - agent ?r - role)",
        "    (now ?w - world ?t - step)",
        "    (succ ?t - step ?u - step)",
        "    (chosen ?a - agent ?t - step)",
        "    (do ?a - agent ?c - act ?t - step))",
    ]

    for action in sorted(sig.actions.names):
        lines += _action_block(action, staged, sig)

    effects = []
    for prop_name in sorted(sig.props.names):
        prop = sig.props.id_of(prop_name)
        conditions = {}
        for sign in ("add", "del"):
            parts = [f"({_pending(sign, prop, sig)} ?w)"] if (sign, prop) in staged else []
            parts += _executed_parts(deferred.get((sign, prop), []), sig)
            conditions[sign] = _disjunction(parts)
        add, delete = conditions["add"], conditions["del"]
        # 충돌 명제는 관성
        if add and delete:
            effects.append(f"      (when (and {add} (not {delete})) ({prop_name} ?w))")
            effects.append(f"      (when (and {delete} (not {add})) (not ({prop_name} ?w)))")
        elif add:
            effects.append(f"      (when {add} ({prop_name} ?w))")
        elif delete:
            effects.append(f"      (when {delete} (not ({prop_name} ?w)))")
    effects += [f"      (not ({_pending(sign, prop, sig)} ?w))" for sign, prop in _ordered_keys(staged, sig)]

    lines += [
        "  (:action tick",
        "    :agent ?a - agent",
        "    :parameters (?w - world ?t - step ?u - step)",
        "    :precondition (and (member ?a ?w) (now ?w ?t) (succ ?t ?u)",
        "      (forall (?y - agent) (imply (member ?y ?w) (chosen ?y ?t))))",
        "    :effect (and",
        "      (not (now ?w ?t))",
        "      (now ?w ?u)",
    ]
    lines += effects
    lines[-1] += "))"
    lines.append(")")
    return "\n".join(lines) + "\n"


def render_problem(problem: BridgeProblem, ppd: PPD, domain_name: str) -> str:
    """구조화된 문제를 (define (problem ...)) 문서로"""
    sig = ppd.signature
    k = problem.horizon
    steps = " ".join(f"t{t}" for t in range(k + 1))
    worlds = [f"w{copy.suffix}" for copy in problem.worlds]
    agents = [f"{name}{copy.suffix}" for copy in problem.worlds for name in sig.agents.names]

    lines = [
        HEADER.rstrip("\n"),
        f"(define (problem {problem.name})",
        f"  (:domain {domain_name})",
        "  (:objects",
        f"    {' '.join(agents)} - agent",
        f"    {' '.join(worlds)} - world",
        f"    {steps} - step)",
        "  (:init",
    ]
    for copy, world in zip(problem.worlds, worlds):
        for name in sig.agents.names:
            lines.append(f"    (member {name}{copy.suffix} {world}) (role {name}{copy.suffix} role-{name})")
        lines.append(f"    (now {world} t0)")
        lines += [f"    ({sig.props.name_of(p)} {world})" for p in sorted(copy.init.props(), key=sig.props.name_of)]
    lines += [f"    (succ t{t} t{t + 1})" for t in range(k)]
    lines[-1] += ")"

    goal = [f"(now {world} t{k})" for world in worlds]
    constraints = []
    for copy, world in zip(problem.worlds, worlds):
        if copy.outcome is None:
            continue
        finals, tree = _split_final(outcome_constraint(copy.outcome, copy.init))
        for formula in finals:
            goal += _goal_literals(formula, sig, world)
        if tree != ("const", True):
            constraints.append(_constraint_pddl(tree, sig, world))

    for copy in problem.worlds:
        if copy.pinned is None:
            continue
        for agent, seq in copy.pinned.seqs:
            who = f"{sig.agents.name_of(agent)}{copy.suffix}"
            goal += [f"(do {who} {sig.actions.name_of(a)} t{t})" for t, a in enumerate(seq)]
    for agent in problem.agreement:
        name = sig.agents.name_of(agent)
        for copy in problem.worlds[1:]:
            for t in range(k):
                for action in sig.actions.names:
                    goal.append(f"(imply (do {name} {action} t{t}) (do {name}{copy.suffix} {action} t{t}))")
    lines.append("  (:goal (and")
    lines += [f"    {atom}" for atom in goal]
    lines[-1] += "))"

    if constraints:
        lines.append("  (:constraints (and")
        lines += [f"    {c}" for c in constraints]
        lines[-1] += "))"
    lines.append(")")
    return "\n".join(lines) + "\n"


# =============================================================================
# 질의 → 문제 묶음
# =============================================================================

def _validate_query(query: BridgeQuery, full: bool):
    sig = query.ppd.signature
    check_names(sig)
    _check_name(query.name)
    sig.agents.name_of(query.agent)
    query.plan.validate(sig)
    if full and not query.plan.is_full(sig):
        raise ValidationError("귀속 질의에는 모든 에이전트를 포함하는 계획이 필요합니다.")
    if not full and query.plan.coalition != (query.agent,):
        raise ValidationError("예견 질의에는 대상 에이전트의 개인 계획이 필요합니다.")
    check_fragment(query.omega)


def _files(query: BridgeQuery, label: str, problems: List[BridgeProblem]) -> Tuple[BridgeFile, ...]:
    stem = label.lower()
    return tuple(
        BridgeFile(f"{stem}-{n}.pddl", render_problem(problem, query.ppd, query.name), problem)
        for n, problem in enumerate(problems, start=1)
    )


def _sufficiency_problems(stem: str, k: int, start: State, mine: JointPlan, negated: Formula,
                          states: Sequence[State], aar: bool, first: int = 1) -> List[BridgeProblem]:
    """CAR 한 벌 (¬ω 고정 없음, ¬ω i 고정), AAR이면 E_i 의 다른 상태마다 (¬ω, i 고정) 추가"""
    pinned_starts = [start] + ([s for s in states if s != start] if aar else [])
    problems = [BridgeProblem(f"{stem}-{first}", k, (WorldCopy("", start, None, negated),))]
    problems += [
        BridgeProblem(f"{stem}-{n}", k, (WorldCopy("", s1, mine, negated),))
        for n, s1 in enumerate(pinned_starts, start=first + 1)
    ]
    return problems


def export_attribution_problems(kind: ResponsibilityKind, query: BridgeQuery) -> BridgeExport:
    """
    귀속 질의(CAR, CPR, AAR)를 문제 파일 묶음과 판정 규칙으로 변환

    CPR: (ω, 전원 고정) 과 (¬ω, i 제외 고정) 이 모두 풀리면 참
    CAR: (¬ω, 고정 없음) 은 풀리고 (¬ω, i 고정) 은 안 풀리면 참
    AAR: CAR 두 문제에 더해 E_i 의 다른 상태마다 (¬ω, i 고정) 이 안 풀리면 참

    Raises:
        UnsupportedFragmentError: CCR, 지원 조각 밖의 ω, 인코딩과 충돌하는 이름
    """
    if kind is ResponsibilityKind.CCR:
        raise UnsupportedFragmentError("CCR 귀속은 연합 수가 지수적이라 PDDL로 내보내지 않습니다 (CPR 예견을 사용).")
    _validate_query(query, full=True)

    ppd, plan, agent, omega = query.ppd, query.plan, query.agent, query.omega
    k = plan.horizon
    negated = Not(omega)
    label = kind.value

    if kind is ResponsibilityKind.CPR:
        problems = [
            BridgeProblem(f"{query.name}-cpr-1", k, (WorldCopy("", ppd.s0, plan, omega),)),
            BridgeProblem(f"{query.name}-cpr-2", k, (WorldCopy("", ppd.s0, complement(plan, [agent]), negated),)),
        ]
        return BridgeExport(label, _files(query, label, problems), DecisionRule.all_solvable(2))

    problems = _sufficiency_problems(f"{query.name}-{label.lower()}", k, ppd.s0, subplan(plan, [agent]), negated,
                                     ppd.epistemic_set(agent), kind is ResponsibilityKind.AAR)
    return BridgeExport(label, _files(query, label, problems),
                        DecisionRule.first_solvable_rest_unsolvable(len(problems)))


def export_cpr_anticipation_problem(query: BridgeQuery, label: str = "anticipate-CPR") -> BridgeExport:
    """
    CPR 예견 질의를 E_i 의 상태마다 하나씩 이중 사본 문제로 변환

    원본 사본은 i의 계획을 고정하고 ω, 복제 사본(-1)은 ¬ω, 다른 에이전트는 두 사본에서 같은 행동.
    """
    _validate_query(query, full=False)
    ppd, agent = query.ppd, query.agent
    k = query.plan.horizon
    others = tuple(a for a in range(ppd.signature.n_agents) if a != agent)
    problems = [
        BridgeProblem(
            f"{query.name}-{label.lower()}-{n}", k,
            (WorldCopy("", s1, query.plan, query.omega), WorldCopy("-1", s1, None, Not(query.omega))),
            agreement=others,
        )
        for n, s1 in enumerate(ppd.epistemic_set(agent), start=1)
    ]
    return BridgeExport(label, _files(query, label, problems), DecisionRule.any_solvable(len(problems)))


def export_anticipation_problems(kind: ResponsibilityKind, query: BridgeQuery) -> BridgeExport:
    """
    예견 질의를 문제 파일 묶음과 판정 규칙으로 변환

    CAR/AAR: E_i 의 상태마다 그 상태에서 시작하는 귀속 절차를 한 벌씩 반복하고, 어느 한 벌이라도 성립하면 참.
    CPR, CCR: 이중 사본 문제 (예견된 CCR 은 예견된 CPR 과 같다).

    Args:
        kind: 예견할 책임 종류
        query: 대상 에이전트의 개인 계획을 담은 질의

    Returns:
        BridgeExport: 'anticipate-<X>' 묶음
    """
    label = f"anticipate-{kind.value}"
    if kind in (ResponsibilityKind.CPR, ResponsibilityKind.CCR):
        return export_cpr_anticipation_problem(query, label)
    _validate_query(query, full=False)

    ppd, agent = query.ppd, query.agent
    k = query.plan.horizon
    negated = Not(query.omega)
    states = ppd.epistemic_set(agent)
    problems: List[BridgeProblem] = []
    rules = []
    for s1 in states:
        group = _sufficiency_problems(f"{query.name}-{label.lower()}", k, s1, query.plan, negated, states,
                                      kind is ResponsibilityKind.AAR, first=len(problems) + 1)
        problems += group
        rules.append(DecisionRule.first_solvable_rest_unsolvable(len(group)))
    return BridgeExport(label, _files(query, label, problems), DecisionRule.any_group(rules))


# =============================================================================
# 내부 풀이
# =============================================================================

def _copy_solvable(copy: WorldCopy, shared: Dict[int, Tuple[int, ...]], ppd: PPD, k: int) -> bool:
    fixed = dict(copy.pinned.seqs) if copy.pinned is not None else {}
    for agent, seq in shared.items():
        if fixed.get(agent, seq) != seq:
            return False
        fixed[agent] = seq
    partial = JointPlan.of(fixed) if fixed else None
    return find_plan(copy.outcome or TRUE, copy.init, k, ppd.theory, partial) is not None


def solve_problem(problem: BridgeProblem, ppd: PPD) -> bool:
    """
    외부 플래너 대신 엔진의 유계 계획 존재 탐색으로 문제를 풀기

    첫 사본의 완성 계획을 사전식으로 돌며 agreement 에이전트의 행동을 나머지 사본에 고정한다.
    """
    sig = ppd.signature
    k = problem.horizon
    first, rest = problem.worlds[0], problem.worlds[1:]
    if not rest:
        return _copy_solvable(first, {}, ppd, k)

    oracle = get_oracle(ppd.theory, first.outcome or TRUE, k)
    for rows in completion_rows(first.pinned, k, sig.n_agents, sig.n_actions):
        if not oracle.holds(first.init, rows):
            continue
        plan = JointPlan.from_rows(rows, sig.n_agents)
        shared = {agent: plan.seq(agent) for agent in problem.agreement}
        if all(_copy_solvable(copy, shared, ppd, k) for copy in rest):
            return True
    return False


def decide(export: BridgeExport, ppd: PPD) -> bool:
    """내보낸 묶음의 판정 규칙을 내부 풀이로 평가"""
    solved = [solve_problem(f.problem, ppd) for f in export.files]
    logger.debug(f"{export.label} 문제 풀림 여부: {solved}")
    return evaluate_rule(export.rule, solved)


# =============================================================================
# 형식 검사와 파일 쓰기
# =============================================================================

SEXPR_GRAMMAR = r"""
    start: sexpr
    sexpr: "(" item* ")"
    ?item: sexpr | ATOM
    ATOM: /[^\s();]+/
    COMMENT: /;[^\n]*/
    %ignore COMMENT
    %import common.WS
    %ignore WS
"""

_LOGICAL_HEADS = frozenset({"and", "or", "not", "imply", "when", "always", "sometime"})
_BINDING_HEADS = frozenset({"exists", "forall"})


@lru_cache(maxsize=1)
def _sexpr_parser() -> Lark:
    return Lark(SEXPR_GRAMMAR, parser="lalr")


def _parse_sexpr(text: str):
    tree = _sexpr_parser().parse(text)

    def convert(node: Union[Tree, Token]):
        if isinstance(node, Token):
            return str(node)
        return [convert(child) for child in node.children]

    return convert(tree.children[0])


def _declared(items: List) -> set:
    """'a b - type c - type2' 목록에서 선언된 이름 (타입 이름 제외)"""
    names = set()
    pending = []
    skip_next = False
    for item in items:
        if skip_next:
            skip_next = False
            continue
        if item == "-":
            names.update(pending)
            pending = []
            skip_next = True
        else:
            pending.append(item)
    names.update(pending)
    return {name.lower() for name in names}


def _referenced(expr, out: set):
    """원자식 인자 중 변수(?x)가 아닌 이름 수집"""
    if not isinstance(expr, list) or not expr:
        return
    head = expr[0]
    if isinstance(head, list):
        for child in expr:
            _referenced(child, out)
        return
    if head in _BINDING_HEADS:
        for child in expr[2:]:
            _referenced(child, out)
    elif head in _LOGICAL_HEADS:
        for child in expr[1:]:
            _referenced(child, out)
    elif head == "at" and len(expr) > 1 and expr[1] == "end":
        for child in expr[2:]:
            _referenced(child, out)
    else:
        for arg in expr[1:]:
            if isinstance(arg, str):
                if not arg.startswith("?"):
                    out.add(arg.lower())
            else:
                _referenced(arg, out)


def _section(sections: List, key: str) -> Optional[List]:
    for section in sections:
        if isinstance(section, list) and section and section[0] == key:
            return section
    return None


def check_well_formed(text: str, constants: Iterable[str] = ()) -> List[str]:
    """
    PDDL 문서의 형식 검사

    괄호 균형, 선언된 객체/상수만 참조, 모든 (:action) 에 :agent/:parameters/:precondition/:effect.

    Args:
        text: 도메인 또는 문제 문서
        constants: 문제 검사 시 도메인에서 선언된 상수

    Returns:
        List[str]: 발견된 문제 (비어 있으면 통과)
    """
    try:
        doc = _parse_sexpr(text)
    except LarkError as e:
        return [f"S-식 파싱 실패 (괄호 불균형 등): {type(e).__name__}"]

    if len(doc) < 2 or doc[0] != "define" or not isinstance(doc[1], list) or len(doc[1]) != 2:
        return ["(define (domain|problem <name>) ...) 형식이 아닙니다."]

    issues = []
    kind = doc[1][0]
    sections = doc[2:]
    known = {name.lower() for name in constants}

    if kind == "domain":
        declared = _section(sections, ":constants")
        known |= _declared(declared[1:]) if declared else set()
        for section in sections:
            if not (isinstance(section, list) and section and section[0] == ":action"):
                continue
            name = section[1] if len(section) > 1 else "?"
            keys = [item for item in section if isinstance(item, str) and item.startswith(":")]
            for required in (":agent", ":parameters", ":precondition", ":effect"):
                if required not in keys:
                    issues.append(f"action {name}: {required} 섹션 누락")
            for key in (":precondition", ":effect"):
                if key in section:
                    used = set()
                    _referenced(section[section.index(key) + 1], used)
                    for ref in sorted(used - known):
                        issues.append(f"action {name}: 선언되지 않은 상수 '{ref}'")
    elif kind == "problem":
        objects = _section(sections, ":objects")
        if objects is None:
            issues.append(":objects 섹션 누락")
        else:
            known |= _declared(objects[1:])
        for key in (":init", ":goal", ":constraints"):
            section = _section(sections, key)
            if section is None:
                if key != ":constraints":
                    issues.append(f"{key} 섹션 누락")
                continue
            used = set()
            for expr in section[1:]:
                _referenced(expr, used)
            for ref in sorted(used - known):
                issues.append(f"{key}: 선언되지 않은 객체 '{ref}'")
    else:
        issues.append(f"알 수 없는 문서 종류: {kind}")
    return issues


def domain_constants(ppd: PPD) -> List[str]:
    sig = ppd.signature
    return list(sig.actions.names) + [f"role-{name}" for name in sig.agents.names]


def write_bundle(domain_text: str, export: Optional[BridgeExport], out_dir: Union[str, Path],
                 domain_file: str = "domain.pddl") -> List[Path]:
    """
    도메인/문제 파일과 manifest.txt 쓰기 (UTF-8, LF)

    manifest 는 '<파일>\\t<역할>' 줄과 마지막 'rule\\t<설명>' 줄로 이루어진다.

    Returns:
        List[Path]: 쓴 파일 경로 (manifest 포함)
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    written = []
    manifest = [f"{domain_file}\tdomain"]

    def _write(name: str, text: str):
        path = out / name
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        written.append(path)

    _write(domain_file, domain_text)
    if export is not None:
        for bridge_file, want in zip(export.files, export.rule.expected):
            _write(bridge_file.filename, bridge_file.text)
            manifest.append(f"{bridge_file.filename}\t{'solvable' if want else 'unsolvable'}")
        manifest.append(f"rule\t{export.label} {export.rule.describe([f.filename for f in export.files])}")

    _write("manifest.txt", "\n".join(manifest) + "\n")
    logger.info(f"PDDL 파일 {len(written)}개 저장: {out}")
    return written


def describe_query(query: BridgeQuery) -> str:
    sig = query.ppd.signature
    return f"agent={sig.agents.name_of(query.agent)} outcome={render_formula(query.omega, sig)}"
