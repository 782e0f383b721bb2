"""
책임 분석 엔진 - 메인 실행 파일
도메인/계획/수식 읽기 -> 질의 실행(검사, 귀속, 예견, 계획 탐색, 조정, PDDL 내보내기, 정리 검증) -> 결과 출력
"""

import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError as BoundsError

from core_model import generate_history
from domain_file import load_domain
from errors import ResponsibilityError, UnsupportedFragmentError, ValidationError
from ltlf import eval_ltlf, parse_formula
from planning import PPD, format_plan
from pddl_bridge import (
    BridgeQuery, decide, describe_query, export_attribution_problems, export_anticipation_problems,
    export_domain, write_bundle,
)
from responsibility import (
    ResponsibilityKind, anticipate, attribute, coordinate, find_plan_avoiding_anticipated, render_verdict,
)
from theorem_suite import DomainBounds, render_report, run_suite
from utils import env_int, load_plan, resolve_path, setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_UNSUPPORTED = 2


class _ArgumentParser(argparse.ArgumentParser):
    """사용법 오류를 종료 코드 1로 처리하기 위해 예외로 전달"""

    def error(self, message):
        raise ValidationError(f"명령줄 오류: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="resp", description="다중 에이전트 계획의 책임 귀속/예견 분석 도구")
    parser.add_argument("--log-level", default=None, help="로그 레벨 (기본: RESP_LOG_LEVEL 또는 INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="계획 실행 히스토리에서 LTLf 수식 평가")
    p.add_argument("domain", help="도메인 파일")
    p.add_argument("--plan", required=True, help="공동 계획 파일")
    p.add_argument("--formula", required=True, help="LTLf 수식")

    p = sub.add_parser("attribute", help="공동 계획에 대한 책임 귀속")
    p.add_argument("kind", help="CAR, CPR, CCR, AAR")
    p.add_argument("domain", help="도메인 파일")
    p.add_argument("--plan", required=True, help="공동 계획 파일")
    p.add_argument("--agent", required=True, help="대상 에이전트")
    p.add_argument("--outcome", required=True, help="결과 LTLf 수식")

    p = sub.add_parser("anticipate", help="개인 계획에 대한 책임 예견")
    p.add_argument("kind", help="CAR, CPR, CCR, AAR")
    p.add_argument("domain", help="도메인 파일")
    p.add_argument("--agent-plan", required=True, help="대상 에이전트의 개인 계획 파일")
    p.add_argument("--agent", required=True, help="대상 에이전트")
    p.add_argument("--outcome", required=True, help="결과 LTLf 수식")

    p = sub.add_parser("find-plan", help="책임을 예견하지 않는 첫 개인 계획 탐색")
    p.add_argument("domain", help="도메인 파일")
    p.add_argument("--avoid", required=True, help="피할 책임 종류 (CAR, CPR, CCR, AAR)")
    p.add_argument("--agent", required=True, help="대상 에이전트")
    p.add_argument("--outcome", required=True, help="결과 LTLf 수식")
    p.add_argument("--horizon", required=True, type=int, help="계획 길이 k")

    p = sub.add_parser("coordinate", help="에이전트별 CPR 회피 계획 선택과 합성")
    p.add_argument("domain", help="도메인 파일")
    p.add_argument("--outcome", required=True, help="달성할 결과 LTLf 수식")
    p.add_argument("--horizon", required=True, type=int, help="계획 길이 k")

    p = sub.add_parser("export-pddl", help="PDDL 파일 묶음 내보내기")
    p.add_argument("kind", help="domain, CAR, CPR, AAR, anticipate-CAR, anticipate-CPR, anticipate-CCR, anticipate-AAR")
    p.add_argument("domain", help="도메인 파일")
    p.add_argument("--plan", help="공동 계획 파일 (귀속)")
    p.add_argument("--agent-plan", help="개인 계획 파일 (예견)")
    p.add_argument("--agent", help="대상 에이전트")
    p.add_argument("--outcome", help="결과 LTLf 수식")
    p.add_argument("--name", default="resp", help="PDDL 도메인 이름 (기본: resp)")
    p.add_argument("--out", required=True, help="출력 디렉터리")

    p = sub.add_parser("verify", help="무작위 도메인에서 정리 검증")
    p.add_argument("--seeds", type=int, help="시드 개수 (기본: RESP_VERIFY_SEEDS 또는 200)")
    p.add_argument("--seed", type=int, help="첫 시드 (기본: RESP_VERIFY_SEED 또는 1)")
    p.add_argument("--max-agents", type=int)
    p.add_argument("--max-props", type=int)
    p.add_argument("--max-actions", type=int)
    p.add_argument("--max-horizon", type=int)
    p.add_argument("--density", type=float, help="γ± 항목 밀도")
    p.add_argument("--depth", type=int, help="결과 수식 최대 깊이")
    p.add_argument("--plans", type=int, help="도메인당 공동 계획 수")
    p.add_argument("--workers", type=int, help="프로세스 수 (기본: RESP_WORKERS 또는 1)")
    return parser


# =============================================================================
# 서브커맨드
# =============================================================================

def _domain(args) -> PPD:
    return load_domain(str(resolve_path(args.domain)))


def _agent(ppd: PPD, name: Optional[str]) -> int:
    if name is None:
        raise ValidationError("--agent 가 필요합니다.")
    return ppd.signature.agents.id_of(name)


def _outcome(ppd: PPD, text: Optional[str]):
    if text is None:
        raise ValidationError("--outcome 이 필요합니다.")
    return parse_formula(text, ppd.signature)


def _cmd_check(args) -> str:
    ppd = _domain(args)
    plan = load_plan(args.plan, ppd.signature)
    formula = parse_formula(args.formula, ppd.signature)
    history = generate_history(plan, ppd.s0, ppd.theory)
    return f"{str(eval_ltlf(history, 0, formula)).lower()}\n"


def _cmd_attribute(args) -> str:
    kind = ResponsibilityKind.parse(args.kind)
    ppd = _domain(args)
    agent = _agent(ppd, args.agent)
    plan = load_plan(args.plan, ppd.signature)
    omega = _outcome(ppd, args.outcome)
    logger.info(f"[1단계] {kind.value} 귀속 판정: {args.agent}")
    verdict = attribute(kind, agent, plan, ppd.s0, ppd, omega)
    return render_verdict(kind, agent, verdict, ppd.signature, plan.horizon)


def _cmd_anticipate(args) -> str:
    kind = ResponsibilityKind.parse(args.kind)
    ppd = _domain(args)
    agent = _agent(ppd, args.agent)
    plan = load_plan(args.agent_plan, ppd.signature)
    omega = _outcome(ppd, args.outcome)
    logger.info(f"[1단계] {kind.value} 예견 판정: {args.agent}")
    verdict = anticipate(kind, agent, plan, ppd, omega)
    return render_verdict(kind, agent, verdict, ppd.signature, plan.horizon)


def _cmd_find_plan(args) -> str:
    kind = ResponsibilityKind.parse(args.avoid)
    ppd = _domain(args)
    agent = _agent(ppd, args.agent)
    omega = _outcome(ppd, args.outcome)
    plan = find_plan_avoiding_anticipated(kind, agent, ppd, omega, args.horizon)
    return "none\n" if plan is None else format_plan(plan, ppd.signature)


def _cmd_coordinate(args) -> str:
    ppd = _domain(args)
    omega = _outcome(ppd, args.outcome)
    sig = ppd.signature
    logger.info(f"[1단계] 에이전트별 계획 선택 (호라이즌 {args.horizon})")
    result = coordinate(ppd, omega, args.horizon)

    lines = []
    for agent, plan in enumerate(result.plans):
        if plan is None:
            lines.append(f"{sig.agents.name_of(agent)}: none")
        else:
            lines.append(format_plan(plan, sig).rstrip("\n"))
    if result.composed is None:
        lines += ["composed: none", "omega holds=none"]
    else:
        logger.info("[2단계] 합성된 공동 계획 평가")
        lines.append("composed:")
        lines += [f"  {line}" for line in format_plan(result.composed, sig).splitlines()]
        lines.append(f"omega holds={str(result.omega_holds).lower()}")
    return "\n".join(lines) + "\n"


def _cmd_export_pddl(args) -> str:
    ppd = _domain(args)
    kind = args.kind.lower()
    domain_text = export_domain(ppd, args.name)

    export = None
    if kind != "domain":
        agent = _agent(ppd, args.agent)
        omega = _outcome(ppd, args.outcome)
        if kind.startswith("anticipate-"):
            responsibility = ResponsibilityKind.parse(kind[len("anticipate-"):])
            if args.agent_plan is None:
                raise ValidationError(f"anticipate-{responsibility.value} 에는 --agent-plan 이 필요합니다.")
            plan = load_plan(args.agent_plan, ppd.signature)
            query = BridgeQuery(ppd, plan, agent, omega, args.name)
            export = export_anticipation_problems(responsibility, query)
        else:
            responsibility = ResponsibilityKind.parse(args.kind)
            if args.plan is None:
                raise ValidationError(f"{responsibility.value} 에는 --plan 이 필요합니다.")
            plan = load_plan(args.plan, ppd.signature)
            query = BridgeQuery(ppd, plan, agent, omega, args.name)
            export = export_attribution_problems(responsibility, query)
        logger.info(f"[1단계] PDDL 문제 {len(export.files)}개 생성: {describe_query(query)}")

    written = write_bundle(domain_text, export, args.out)
    lines = [path.name for path in written]
    if export is not None:
        logger.info("[2단계] 내부 탐색으로 판정 규칙 평가")
        lines.append(f"{export.label} engine holds={str(decide(export, ppd)).lower()}")
    return "\n".join(lines) + "\n"


def _cmd_verify(args) -> str:
    bounds = DomainBounds.from_env(
        max_agents=args.max_agents,
        max_props=args.max_props,
        max_actions=args.max_actions,
        max_horizon=args.max_horizon,
        effect_density=args.density,
        formula_depth=args.depth,
        plans_per_domain=args.plans,
        rng_seed=args.seed,
    )
    seeds = env_int("RESP_VERIFY_SEEDS", 200, args.seeds)
    workers = env_int("RESP_WORKERS", 1, args.workers)
    if seeds < 1 or workers < 1:
        raise ValidationError("--seeds 와 --workers 는 1 이상이어야 합니다.")
    results = run_suite(bounds, range(bounds.rng_seed, bounds.rng_seed + seeds), workers)
    if any(not r.passed for r in results):
        logger.warning("반례가 발견되었습니다. 보고서의 재현 블록을 확인하세요.")
    return render_report(results)


COMMANDS: Dict[str, Callable[[argparse.Namespace], str]] = {
    "check": _cmd_check,
    "attribute": _cmd_attribute,
    "anticipate": _cmd_anticipate,
    "find-plan": _cmd_find_plan,
    "coordinate": _cmd_coordinate,
    "export-pddl": _cmd_export_pddl,
    "verify": _cmd_verify,
}


def run(argv: Optional[List[str]] = None) -> int:
    """
    명령줄 실행

    Returns:
        int: 0 질의 응답 완료 (판정의 참/거짓과 무관), 1 검증/파싱 오류, 2 지원하지 않는 조각
    """
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except ValidationError as e:
        print(str(e), file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as e:
        # --help
        return e.code or EXIT_OK

    setup_logging(args.log_level)
    try:
        output = COMMANDS[args.command](args)
    except UnsupportedFragmentError as e:
        logger.error(f"지원하지 않는 조각: {e}")
        return EXIT_UNSUPPORTED
    except ValidationError as e:
        logger.error(f"입력 오류: {e}")
        return EXIT_INVALID
    except BoundsError as e:
        logger.error(f"검증 범위 설정 오류: {e}")
        return EXIT_INVALID
    except OSError as e:
        logger.error(f"파일 입출력 오류: {e}")
        return EXIT_INVALID
    except ResponsibilityError as e:
        logger.error(f"실행 중 오류 발생: {e}", exc_info=True)
        return EXIT_INVALID

    sys.stdout.write(output)
    sys.stdout.flush()
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
