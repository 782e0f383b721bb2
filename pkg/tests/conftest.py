"""
책임 분석 엔진 - 테스트 공통 픽스처
패키지에 포함된 교차로/탁자 도메인과 계획 파싱 도우미
"""

import os
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from domain_file import load_domain  # noqa: E402
from planning import parse_plan  # noqa: E402

DOMAINS = ROOT / "domains"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: RESP_SLOW_TESTS=1 일 때만 실행하는 전수 검사")


def pytest_collection_modifyitems(config, items):
    if os.getenv("RESP_SLOW_TESTS") == "1":
        return
    skip_slow = pytest.mark.skip(reason="RESP_SLOW_TESTS=1 로 실행")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def junction():
    return load_domain(str(DOMAINS / "junction.dom"))


@pytest.fixture(scope="session")
def table():
    return load_domain(str(DOMAINS / "table.dom"))


@pytest.fixture
def plan_of():
    """계획 파일 텍스트를 주어진 도메인 기호로 파싱"""
    def _plan_of(ppd, text):
        return parse_plan(text, ppd.signature)
    return _plan_of
