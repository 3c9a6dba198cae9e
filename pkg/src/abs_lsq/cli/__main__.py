"""Allow running CLI as a module: python -m abs_lsq.cli"""

from . import main

if __name__ == "__main__":
    main()
