import sys

from modules.cli import main

if __name__ == "__main__":
    # 종료 코드: 0 통과, 1 검사 실패, 2 사용법 오류, 3 수치 오류
    sys.exit(main())
