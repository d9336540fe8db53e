import sys

from src.fed3r.cli import main

if __name__ == "__main__":
    sys.exit(main())
