"""Regenerate the committed golden corpus (development tool).

Only run this when the generator's sampling scheme deliberately changes;
the corpus pins generator determinism for the test suite.
"""

import json
from pathlib import Path

from budgeted_efx.instances import gen_instances, serialize_instance

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    docs = [serialize_instance(i) for i in gen_instances(1, 3, 2, (5, 5))]
    target = GOLDEN / "gen_n2_seed1.json"
    target.write_text(json.dumps(docs, indent=2, sort_keys=True) + "\n")
    print(f"wrote {target}")


if __name__ == "__main__":
    main()
