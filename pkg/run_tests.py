"""
Test Runner Script
Runs the biasdoc suites in order, then drives the CLI over the seed vocabulary
"""

import subprocess
import sys
import time

PYTEST = [sys.executable, "-m", "pytest", "--tb=short"]
APP = [sys.executable, "app.py"]

STEPS = [
    ("unit tests with coverage", PYTEST + ["tests/unit", "--cov=src", "--cov-report=term-missing",
                                           "--cov-fail-under=80"]),
    ("integration tests", PYTEST + ["tests/integration"]),
    ("performance and acceptance tests", PYTEST + ["tests/performance", "--durations=5"]),
    ("smoke: load", APP + ["load"]),
    ("smoke: validate", APP + ["validate"]),
    ("smoke: docgen", APP + ["docgen", "bias:PopularityBias"]),
]


def main() -> int:
    failed = []
    for name, command in STEPS:
        print(f"\n🧪 {name}")
        start = time.time()
        code = subprocess.run(command).returncode
        print(f"{'✅' if code == 0 else '❌'} {name} ({time.time() - start:.1f}s, exit {code})")
        if code != 0:
            failed.append(name)

    if failed:
        print(f"\n⚠️ Failed: {', '.join(failed)}")
        return 1
    print("\n🎉 All steps passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
