"""
Main Application
Entry point for the self-guided diffusion toolkit
"""
import logging
import sys
from pathlib import Path

# Project root on the path so both `config` and `src` resolve
sys.path.insert(0, str(Path(__file__).parent))

from config.settings import apply_thread_limits, print_settings_info, settings, setup_logging
from src.presentation.cli import main as cli_main

logger = logging.getLogger(__name__)


def main() -> int:
    """Main function"""
    setup_logging()
    apply_thread_limits()
    if settings.debug_mode:
        print_settings_info()

    try:
        return cli_main(sys.argv[1:])
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 1


if __name__ == "__main__":
    sys.exit(main())
