"""
consensus-sim entry point.

Run with: python -m apps.ConsensusSim <command> ...
"""

import os
import sys

# Add project root to path for imports
project_root = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from apps.ConsensusSim.cli import main


if __name__ == "__main__":
    sys.exit(main())
