#!/usr/bin/env python3
"""Run the acceptance tests and show only their PASS/FAIL lines."""

import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parent.parent
proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-s", str(root / "tests" / "test_acceptance.py")],
                      capture_output=True, text=True, cwd=root)
for line in proc.stdout.splitlines():
    if line.startswith(("PASS ", "FAIL ")):
        print(line)
sys.exit(proc.returncode)
