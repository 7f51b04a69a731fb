"""Allow ``python -m roofcalc``."""
from .cli import main

if __name__ == '__main__':
    main()
