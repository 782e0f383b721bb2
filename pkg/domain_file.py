"""
책임 분석 엔진 - 도메인 파일 모듈
줄 단위 도메인 파일(agents/props/actions/init/epistemic/effect±)을 PPD로 읽고 정규형으로 쓰기
"""

import logging
import re
from pathlib import Path
from typing import Dict, List, Tuple

from pydantic import BaseModel, Field

from core_model import ActionTheory, Signature, State, SKIP
from errors import DomainFileError, FormulaSyntaxError, ValidationError
from ltlf import FormulaMode, parse_formula, render_formula
from planning import PPD, format_state

logger = logging.getLogger(__name__)

_SECTION = re.compile(r"^(agents|props|actions|init)\s*:(.*)$")
_EPISTEMIC = re.compile(r"^epistemic\s+([A-Za-z_][A-Za-z0-9_]*)\s*:(.*)$")
_EFFECT = re.compile(
    r"^effect([+-])\s+([A-Za-z_][A-Za-z0-9_]*)\s+([A-Za-z_][A-Za-z0-9_]*)\s+([A-Za-z_][A-Za-z0-9_]*)\s*:(.*)$"
)
_BRACES = re.compile(r"\{([^{}]*)\}")


class EffectEntry(BaseModel):
    sign: str = Field(description="'+' 는 γ⁺, '-' 는 γ⁻")
    agent: str = Field(description="에이전트 이름")
    action: str = Field(description="행동 이름")
    prop: str = Field(description="영향받는 명제")
    formula: str = Field(description="효과 전제조건 (PL+ 수식 텍스트)")
    line: int = Field(default=0, description="원본 줄 번호")


class DomainFile(BaseModel):
    """도메인 파일의 구문 수준 표현 (이름은 아직 해석되지 않음)"""

    agents: List[str] = Field(default_factory=list, description="에이전트 (선언 순서)")
    props: List[str] = Field(default_factory=list, description="명제 (선언 순서)")
    actions: List[str] = Field(default_factory=list, description="행동 (skip 생략 가능)")
    init: List[str] = Field(default_factory=list, description="초기 상태에서 참인 명제")
    epistemic: Dict[str, List[List[str]]] = Field(default_factory=dict, description="에이전트별 가능한 시작 상태")
    effects: List[EffectEntry] = Field(default_factory=list, description="γ± 항목")
    lines: Dict[str, int] = Field(default_factory=dict, description="섹션별 줄 번호")


def _brace_sets(text: str, path: str, lineno: int) -> List[List[str]]:
    sets = [m.group(1).replace(",", " ").split() for m in _BRACES.finditer(text)]
    rest = _BRACES.sub("", text)
    if rest.strip():
        raise DomainFileError(f"중괄호 집합 밖의 내용: '{rest.strip()}'", path, lineno)
    return sets


def read_domain_file(text: str, path: str = None) -> DomainFile:
    """
    도메인 파일을 구문 수준으로 읽기

    Raises:
        DomainFileError: 알 수 없는 줄, 중복 섹션, 잘못된 집합 표기
    """
    domain = DomainFile()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        match = _SECTION.match(line)
        if match:
            section, body = match.groups()
            if section in domain.lines:
                raise DomainFileError(f"'{section}:' 섹션이 두 번 나옵니다.", path, lineno)
            domain.lines[section] = lineno
            if section == "init":
                sets = _brace_sets(body, path, lineno)
                if len(sets) != 1:
                    raise DomainFileError("init 에는 중괄호 집합이 정확히 하나 필요합니다.", path, lineno)
                domain.init = sets[0]
            else:
                setattr(domain, section, body.split())
            continue

        match = _EPISTEMIC.match(line)
        if match:
            agent, body = match.groups()
            if agent in domain.epistemic:
                raise DomainFileError(f"'{agent}'의 인식 집합이 두 번 선언되었습니다.", path, lineno)
            sets = _brace_sets(body, path, lineno)
            if not sets:
                raise DomainFileError(f"'{agent}'의 인식 집합이 비어 있습니다.", path, lineno)
            domain.epistemic[agent] = sets
            domain.lines[f"epistemic {agent}"] = lineno
            continue

        match = _EFFECT.match(line)
        if match:
            sign, agent, action, prop, formula = match.groups()
            domain.effects.append(EffectEntry(
                sign=sign, agent=agent, action=action, prop=prop, formula=formula.strip(), line=lineno,
            ))
            continue

        raise DomainFileError(f"알 수 없는 줄: '{line}'", path, lineno)

    for section in ("agents", "props", "actions", "init"):
        if section not in domain.lines:
            raise DomainFileError(f"'{section}:' 섹션이 없습니다.", path)
    return domain


def _state_of(names: List[str], signature: Signature, path: str, lineno: int) -> State:
    try:
        return State.of(signature.props.id_of(name) for name in names)
    except ValidationError as e:
        raise DomainFileError(str(e), path, lineno) from None


def build_ppd(domain: DomainFile, path: str = None) -> PPD:
    """구문 수준 도메인을 기호 해석하여 PPD 생성"""
    try:
        signature = Signature.build(domain.agents, domain.props, domain.actions)
    except ValidationError as e:
        raise DomainFileError(str(e), path, domain.lines.get("agents")) from None

    pos, neg = {}, {}
    for entry in domain.effects:
        if entry.action == SKIP:
            raise DomainFileError("skip 행동에는 효과를 줄 수 없습니다.", path, entry.line)
        try:
            key = (signature.agents.id_of(entry.agent), signature.actions.id_of(entry.action),
                   signature.props.id_of(entry.prop))
        except ValidationError as e:
            raise DomainFileError(str(e), path, entry.line) from None
        table = pos if entry.sign == "+" else neg
        if key in table:
            raise DomainFileError(
                f"effect{entry.sign} {entry.agent} {entry.action} {entry.prop} 항목이 중복되었습니다.",
                path, entry.line,
            )
        try:
            table[key] = parse_formula(entry.formula, signature, FormulaMode.PL)
        except FormulaSyntaxError as e:
            raise DomainFileError(str(e), path, entry.line) from None

    theory = ActionTheory.build(signature, pos, neg)
    s0 = _state_of(domain.init, signature, path, domain.lines["init"])

    epistemic = {}
    for name, sets in domain.epistemic.items():
        lineno = domain.lines[f"epistemic {name}"]
        try:
            agent = signature.agents.id_of(name)
        except ValidationError as e:
            raise DomainFileError(str(e), path, lineno) from None
        epistemic[agent] = [_state_of(names, signature, path, lineno) for names in sets]

    return PPD.build(theory, s0, epistemic)


def parse_domain(text: str, path: str = None) -> PPD:
    return build_ppd(read_domain_file(text, path), path)


def load_domain(path: str) -> PPD:
    """도메인 파일 경로에서 PPD 읽기"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DomainFileError(f"파일을 읽을 수 없습니다: {e.strerror}", str(path)) from None
    ppd = parse_domain(text, str(path))
    logger.debug(f"도메인 로드 완료: {path}")
    return ppd


def dumps_domain(ppd: PPD) -> str:
    """
    PPD의 정규형 텍스트

    parse_domain(dumps_domain(p)) 를 다시 직렬화하면 같은 텍스트가 된다.
    """
    sig = ppd.signature
    lines = [
        f"agents: {' '.join(sig.agents.names)}",
        f"props: {' '.join(sig.props.names)}".rstrip(),
        f"actions: {' '.join(sig.actions.names)}",
        f"init: {format_state(ppd.s0, sig)}",
    ]
    for agent, states in enumerate(ppd.epistemic):
        sets = " ".join(format_state(s, sig) for s in states)
        lines.append(f"epistemic {sig.agents.name_of(agent)}: {sets}")

    entries: List[Tuple[Tuple[int, int, int], str, object]] = []
    entries += [(key, "+", formula) for key, formula in ppd.theory.pos.items()]
    entries += [(key, "-", formula) for key, formula in ppd.theory.neg.items()]
    for (agent, action, prop), sign, formula in sorted(entries, key=lambda e: (e[0], e[1])):
        lines.append(
            f"effect{sign} {sig.agents.name_of(agent)} {sig.actions.name_of(action)} "
            f"{sig.props.name_of(prop)}: {render_formula(formula, sig)}"
        )
    return "\n".join(lines) + "\n"
