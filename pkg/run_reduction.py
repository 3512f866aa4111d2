#!/usr/bin/env python3

import logging
import sys

from reduction_tools.cli import main as cli_main
from reduction_tools.settings import LOG_FORMAT

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format=LOG_FORMAT
)
logger = logging.getLogger(__name__)


def main():
    try:
        return cli_main(sys.argv[1:])
    except Exception as e:
        logger.error(f"Error running reduction toolkit: {str(e)}")
        raise


if __name__ == "__main__":
    sys.exit(main())
