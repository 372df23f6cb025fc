import sys

from fusion_tesarina.cli import main

if __name__ == "__main__":
    sys.exit(main())
