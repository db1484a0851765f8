"""Drive every CLI command against the bundled toy workspace.

Copies the workspace into a temp directory, then runs: optimize, report,
evaluate on both splits, explore, and fit-projector. Everything is mocked;
no network is touched.
"""

import json
import tempfile
from pathlib import Path

from lpo import fixtures
from lpo.cli import main


def run(title, args):
    print(f"\n$ lpo {' '.join(str(a) for a in args)}")
    print("-" * 60)
    code = main([str(a) for a in args])
    print(f"[exit {code}]")
    assert code == 0, title


def main_demo():
    with tempfile.TemporaryDirectory() as tmp:
        ws = Path(tmp) / "workspace"
        config = fixtures.copy_toy_workspace(ws)
        seeds = ws / "seeds.jsonl"

        run("optimize", ["optimize", "--config", config, "--seeds", seeds])
        run("report", ["report", ws / "out" / "run_record.jsonl"])
        run("evaluate validation",
            ["evaluate", "--config", config, "--prompts", seeds, "--split", "validation"])
        run("evaluate test",
            ["evaluate", "--config", config, "--prompts", seeds, "--split", "test"])
        run("explore", ["explore", "--config", config, "--seeds", seeds,
                        "--count", 5, "--out", ws / "cands.jsonl"])

        pairs = ws / "pairs.jsonl"
        rows = [{"x": [1.0, 0.0], "y": [2.0, 0.0]}, {"x": [0.0, 1.0], "y": [0.0, 3.0]}]
        pairs.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        run("fit-projector", ["fit-projector", "--pairs", pairs,
                              "--out", ws / "projector.json"])


if __name__ == "__main__":
    main_demo()
