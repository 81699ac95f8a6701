"""Run the acceptance criteria and print one PASS/FAIL line each.

    python3 scripts/run_acceptance.py            # all criteria
    python3 scripts/run_acceptance.py 2 5 11     # a subset
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from test_acceptance import evaluate  # noqa: E402


def main(argv):
    which = [int(a) for a in argv] or list(range(1, 12))
    ok = True
    for n in which:
        passed, line = evaluate(n)
        print(line, flush=True)
        ok &= passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
