"""Run the acceptance tests and echo the one-line verdicts (about six minutes on one core)."""
import sys

import pytest

if __name__ == "__main__":
    sys.exit(pytest.main(["-q", "-s", "tests/test_acceptance.py", *sys.argv[1:]]))
