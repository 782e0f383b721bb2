"""
책임 분석 엔진 - 유틸리티 모듈
로깅 설정, 환경 변수 읽기, 도메인/계획 파일 경로 해석 등 공통 기능 제공
"""

import logging
import os
import sys
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from core_model import Signature
from errors import DomainFileError, ValidationError
from planning import JointPlan, parse_plan

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# 패키지에 포함된 예제 도메인/계획 파일 위치
DOMAINS_DIR = Path(__file__).resolve().parent / "domains"


def setup_logging(level: Optional[str] = None):
    """
    로깅 설정 (stderr + RESP_LOG_FILE 이 있으면 파일)

    stdout 은 질의 결과 전용이므로 로그는 쓰지 않는다.

    Args:
        level (str, optional): 로그 레벨. None이면 RESP_LOG_LEVEL, 그것도 없으면 INFO
    """
    load_dotenv()
    level_name = (level or os.getenv('RESP_LOG_LEVEL', 'INFO')).upper()
    handlers = [logging.StreamHandler(sys.stderr)]
    log_file = os.getenv('RESP_LOG_FILE', '')
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))

    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def env_int(name: str, default: int, override: Optional[int] = None) -> int:
    """
    정수 설정값 읽기 (인자 > 환경 변수 > 기본값)

    Raises:
        ValidationError: 환경 변수가 정수가 아닐 때
    """
    if override is not None:
        return override
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"환경 변수 {name} 는 정수여야 합니다: '{raw}'") from None


def resolve_path(path: str) -> Path:
    """
    파일 경로 해석

    주어진 경로가 없고 domains/ 아래에 같은 이름의 파일이 있으면 그 파일을 사용한다.
    """
    candidate = Path(path)
    if candidate.exists():
        return candidate
    packaged = DOMAINS_DIR / candidate.name
    if packaged.exists():
        logger.debug(f"패키지 예제 파일 사용: {packaged}")
        return packaged
    return candidate


def read_text(path: str) -> str:
    resolved = resolve_path(path)
    try:
        return resolved.read_text(encoding="utf-8")
    except OSError as e:
        raise DomainFileError(f"파일을 읽을 수 없습니다: {e.strerror}", str(path)) from None


def load_plan(path: str, signature: Signature) -> JointPlan:
    """계획 파일을 읽어 도메인 기호로 해석"""
    plan = parse_plan(read_text(path), signature, str(path))
    logger.debug(f"계획 로드 완료: {path} (호라이즌 {plan.horizon})")
    return plan
