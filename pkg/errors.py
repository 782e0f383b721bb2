"""
책임 분석 엔진 - 예외 정의
라이브러리 코드는 예외를 던지고, 종료 코드 변환은 main.run에서만 수행
"""


class ResponsibilityError(Exception):
    """엔진 공통 예외"""


class ValidationError(ResponsibilityError, ValueError):
    """선언되지 않은 기호, 잘못된 계획/상태, 전제조건 위반"""


class FormulaSyntaxError(ValidationError):
    """수식 문법 오류 (위치 정보 포함)"""

    def __init__(self, message: str, line: int = None, column: int = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (줄 {line}, 열 {column})"
        super().__init__(message)


class DomainFileError(ValidationError):
    """도메인/계획 파일 파싱 오류"""

    def __init__(self, message: str, path: str = None, line: int = None):
        self.path = path
        self.line = line
        where = ""
        if path:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class UnsupportedFragmentError(ResponsibilityError):
    """PDDL로 표현할 수 없는 결과식"""


class UnsupportedFeatureError(UnsupportedFragmentError):
    """PDDL 도메인 인코딩과 충돌하는 기호"""
