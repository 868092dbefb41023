import sys
from typing import List, Optional

from app.api.commands import dispatch
from app.core.config import settings
from app.core.logger import get_logger

logger = get_logger()


def main(argv: Optional[List[str]] = None) -> int:
    logger.debug(f"Starting {settings.PROJECT_NAME}...")
    return dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
