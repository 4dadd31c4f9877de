"""
lgt-cli tests (general test setup)
"""

import os

SLOW_TESTS = os.environ.get("LGTCLI_SLOW_TESTS", "0") == "1"
