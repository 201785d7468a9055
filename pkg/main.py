#!/usr/bin/env python3

"""Command-line entry point."""

import logging

from colorama import init as colorama_init
from dotenv import load_dotenv

load_dotenv()

from cli import cli  # noqa: E402
from config import get_settings  # noqa: E402

settings = get_settings()

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.log_level.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("main")


def main():
    """Main entry point."""
    colorama_init()
    logger.debug(f"{settings.app_name} {settings.app_version}")
    cli(prog_name="qkdlab")


if __name__ == "__main__":
    main()
