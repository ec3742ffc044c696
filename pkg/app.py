"""
biasdoc entry point
Usage: python app.py <command> [options]
"""

from src.handlers.cli import main


if __name__ == '__main__':
    main()
