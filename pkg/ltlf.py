"""
책임 분석 엔진 - LTLf 모듈
수식 AST, 두 수식 언어(PL+, LTLf) 파서, 유한 트레이스 평가(부분식 × 시점 메모 테이블)
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import List, Sequence, Tuple

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError

from core_model import (
    FALSE, PL_NODE_TYPES, TRUE, And, Const, Does, Formula, History, Not, Prop, Signature, State,
    disj, implies, validate_formula,
)
from errors import FormulaSyntaxError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Next(Formula):
    """강한 다음 (마지막 시점에서는 거짓)"""

    operand: Formula

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


LTL_NODE_TYPES = PL_NODE_TYPES + (Next, Until)


def eventually(formula: Formula) -> Formula:
    """◇φ ≜ ⊤ U φ"""
    return Until(TRUE, formula)


def globally(formula: Formula) -> Formula:
    """□φ ≜ ¬◇¬φ"""
    return Not(eventually(Not(formula)))


class FormulaMode(Enum):
    PL = "PL+"
    LTLF = "LTLf"


# =============================================================================
# 파서
# =============================================================================

# 우선순위 (낮음 → 높음): ->, |, &, U, 전위 연산자(! X G F), 원자
FORMULA_GRAMMAR = r"""
    ?start: formula

    ?formula: implication

    ?implication: disjunction
                | disjunction "->" implication   -> implies

    ?disjunction: conjunction
                | disjunction "|" conjunction    -> disj

    ?conjunction: until
                | conjunction "&" until          -> conj

    ?until: unary
          | unary UNTIL until                    -> until

    ?unary: "!" unary                            -> neg
          | NEXT unary                           -> next
          | ALWAYS unary                         -> globally
          | EVENTUALLY unary                     -> eventually
          | atom

    ?atom: "(" formula ")"
         | "do" "(" name "," name ")"            -> does
         | "true"                                -> true
         | "false"                               -> false
         | IDENT                                 -> prop

    name: IDENT | NEXT | ALWAYS | EVENTUALLY | UNTIL

    NEXT: "X"
    ALWAYS: "G"
    EVENTUALLY: "F"
    UNTIL: "U"
    IDENT: /[A-Za-z_][A-Za-z0-9_]*/

    %import common.WS
    %ignore WS
"""


@lru_cache(maxsize=1)
def _parser() -> Lark:
    return Lark(FORMULA_GRAMMAR, parser="lalr")


@v_args(inline=True)
class _Resolver(Transformer):
    """파스 트리를 기호 ID로 해석된 AST로 변환"""

    def __init__(self, signature: Signature, mode: FormulaMode):
        super().__init__()
        self.signature = signature
        self.mode = mode

    def _temporal(self, op: Token):
        if self.mode is FormulaMode.PL:
            raise FormulaSyntaxError(
                f"PL+ 수식에서는 시간 연산자 '{op}'를 쓸 수 없습니다", op.line, op.column
            )

    def _resolve(self, table, tok: Token) -> int:
        try:
            return table.id_of(str(tok))
        except ValidationError as e:
            raise FormulaSyntaxError(str(e), tok.line, tok.column) from None

    def implies(self, left, right):
        return implies(left, right)

    def disj(self, left, right):
        return disj(left, right)

    def conj(self, left, right):
        return And(left, right)

    def until(self, left, op, right):
        self._temporal(op)
        return Until(left, right)

    def neg(self, operand):
        return Not(operand)

    def next(self, op, operand):
        self._temporal(op)
        return Next(operand)

    def globally(self, op, operand):
        self._temporal(op)
        return globally(operand)

    def eventually(self, op, operand):
        self._temporal(op)
        return eventually(operand)

    def does(self, agent, action):
        return Does(self._resolve(self.signature.agents, agent),
                    self._resolve(self.signature.actions, action))

    def true(self):
        return TRUE

    def false(self):
        return FALSE

    def prop(self, tok):
        return Prop(self._resolve(self.signature.props, tok))

    def name(self, tok):
        return tok


def parse_formula(text: str, signature: Signature, mode: FormulaMode = FormulaMode.LTLF) -> Formula:
    """
    수식 텍스트를 AST로 파싱

    Args:
        text: 수식 문자열 (예: "G !collision")
        signature: 식별자를 해석할 기호 집합
        mode: PL+ 또는 LTLf (PL+는 시간 연산자 거부)

    Returns:
        Formula: F/G/|/-> 가 not/and/until 로 풀린 AST

    Raises:
        FormulaSyntaxError: 문법 오류, PL+의 시간 연산자, 선언되지 않은 식별자
    """
    if not text or not text.strip():
        raise FormulaSyntaxError("빈 수식입니다")

    try:
        tree = _parser().parse(text)
    except UnexpectedEOF:
        raise FormulaSyntaxError("수식이 중간에 끝났습니다", 1, len(text) + 1) from None
    except UnexpectedToken as e:
        raise FormulaSyntaxError(f"예상하지 못한 토큰 '{e.token}'", e.line, e.column) from None
    except UnexpectedCharacters as e:
        raise FormulaSyntaxError(f"예상하지 못한 문자 '{e.char}'", e.line, e.column) from None
    except UnexpectedInput as e:
        raise FormulaSyntaxError("문법 오류", e.line, e.column) from None

    try:
        return _Resolver(signature, mode).transform(tree)
    except VisitError as e:
        raise e.orig_exc from None


def render_formula(formula: Formula, signature: Signature) -> str:
    """
    다시 파싱하면 같은 AST가 되는 정규 텍스트로 변환

    F, G, | 축약형은 복원하고 이항 연산은 항상 괄호로 감싼다.
    """
    if isinstance(formula, Const):
        return "true" if formula.value else "false"
    if isinstance(formula, Prop):
        return signature.props.name_of(formula.prop)
    if isinstance(formula, Does):
        return f"do({signature.agents.name_of(formula.agent)},{signature.actions.name_of(formula.action)})"
    if isinstance(formula, Not):
        inner = formula.operand
        if isinstance(inner, Until) and inner.left == TRUE and isinstance(inner.right, Not):
            return f"G {render_formula(inner.right.operand, signature)}"
        if isinstance(inner, And) and isinstance(inner.left, Not) and isinstance(inner.right, Not):
            return (f"({render_formula(inner.left.operand, signature)} | "
                    f"{render_formula(inner.right.operand, signature)})")
        return f"!{render_formula(inner, signature)}"
    if isinstance(formula, And):
        return f"({render_formula(formula.left, signature)} & {render_formula(formula.right, signature)})"
    if isinstance(formula, Next):
        return f"X {render_formula(formula.operand, signature)}"
    if isinstance(formula, Until):
        if formula.left == TRUE:
            return f"F {render_formula(formula.right, signature)}"
        return f"({render_formula(formula.left, signature)} U {render_formula(formula.right, signature)})"
    raise ValidationError(f"알 수 없는 수식 노드: {type(formula).__name__}")


def formula_size(formula: Formula) -> int:
    return 1 + sum(formula_size(child) for child in formula.children())


def subformulas(formula: Formula) -> List[Formula]:
    """후위 순서의 서로 다른 부분식 목록 (루트가 마지막)"""
    seen = {}

    def visit(node: Formula):
        if node in seen:
            return
        for child in node.children():
            visit(child)
        seen[node] = None

    visit(formula)
    return list(seen)


# =============================================================================
# 평가
# =============================================================================

_CONST, _PROP, _DOES, _NOT, _AND, _NEXT, _UNTIL = range(7)

# (opcode, x, y): 자식은 앞선 노드의 인덱스
Program = Tuple[Tuple[int, int, int], ...]


@lru_cache(maxsize=4096)
def compile_formula(formula: Formula) -> Program:
    """부분식을 후위 순서로 나열 (같은 부분식은 한 번만)"""
    nodes: List[Tuple[int, int, int]] = []
    index = {}

    def visit(node: Formula) -> int:
        if node in index:
            return index[node]
        if isinstance(node, Const):
            entry = (_CONST, int(node.value), 0)
        elif isinstance(node, Prop):
            entry = (_PROP, node.prop, 0)
        elif isinstance(node, Does):
            entry = (_DOES, node.agent, node.action)
        elif isinstance(node, Not):
            entry = (_NOT, visit(node.operand), 0)
        elif isinstance(node, And):
            entry = (_AND, visit(node.left), visit(node.right))
        elif isinstance(node, Next):
            entry = (_NEXT, visit(node.operand), 0)
        elif isinstance(node, Until):
            entry = (_UNTIL, visit(node.left), visit(node.right))
        else:
            raise ValidationError(f"알 수 없는 수식 노드: {type(node).__name__}")
        index[node] = len(nodes)
        nodes.append(entry)
        return index[node]

    visit(formula)
    return tuple(nodes)


def evaluate_table(program: Program, states: Sequence[State],
                   rows: Sequence[Tuple[int, ...]]) -> List[List[bool]]:
    """부분식 × 시점 진리값 테이블을 구조 귀납으로 채움"""
    k = len(states) - 1
    table: List[List[bool]] = []
    for op, x, y in program:
        if op == _PROP:
            col = [(s.bits >> x) & 1 == 1 for s in states]
        elif op == _NOT:
            col = [not v for v in table[x]]
        elif op == _AND:
            col = [a and b for a, b in zip(table[x], table[y])]
        elif op == _UNTIL:
            left, right = table[x], table[y]
            col = [False] * (k + 1)
            later = False
            for t in range(k, -1, -1):
                later = right[t] or (left[t] and later)
                col[t] = later
        elif op == _NEXT:
            col = table[x][1:] + [False]
        elif op == _DOES:
            col = [rows[t][x] == y for t in range(k)] + [False]
        else:
            col = [bool(x)] * (k + 1)
        table.append(col)
    return table


def holds_on_trace(program: Program, states: Sequence[State], rows: Sequence[Tuple[int, ...]]) -> bool:
    """시점 0에서의 진리값 (검증 없는 내부 경로)"""
    return evaluate_table(program, states, rows)[-1][0]


@lru_cache(maxsize=4096)
def validate_ltlf(formula: Formula, signature: Signature) -> Formula:
    return validate_formula(formula, signature, LTL_NODE_TYPES)


def eval_ltlf(history: History, t: int, formula: Formula) -> bool:
    """
    히스토리의 시점 t에서 LTLf 수식 평가

    Args:
        history: k-히스토리
        t: 시점 (0..k)
        formula: LTLf 수식

    Returns:
        bool: h, t ⊨ φ
    """
    if not 0 <= t <= history.horizon:
        raise ValidationError(f"시점 {t}가 0..{history.horizon} 범위를 벗어났습니다.")
    validate_ltlf(formula, history.signature)
    table = evaluate_table(compile_formula(formula), history.states, history.actions)
    return table[-1][t]


if __name__ == "__main__":
    print("=" * 60)
    print("LTLf 파서 테스트")
    print("=" * 60)

    sig = Signature.build(["A1", "A2"], ["crossed1", "crossed2", "collision"], ["skip", "F"])
    for sample in ["G !collision", "F crossed1", "!( !crossed2 & do(A2,F) ) & !collision", "p U"]:
        try:
            parsed = parse_formula(sample, sig)
            print(f"{sample:45s} → {render_formula(parsed, sig)}")
        except FormulaSyntaxError as e:
            print(f"{sample:45s} ✗ {e}")
