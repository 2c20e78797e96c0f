import sys

from src.cli import main

# Punto de entrada: python main.py run programa.amcm
if __name__ == "__main__":
    sys.exit(main())
