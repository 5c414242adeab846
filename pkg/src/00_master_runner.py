"""
Master runner for the growth laboratory.

Runs every stage in dependency order:
1. Soliton
2. Spectrum
3. Trajectory
4. Evolve (backward runs)
5. Growth report

Usage:
    $ python src/00_master_runner.py --config experiment.yaml --calibrate
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.pipeline import main as run_stage  # noqa: E402

STAGES = ('soliton', 'spectrum', 'trajectory', 'evolve', 'growth')


def main(argv=None) -> int:
    """Execute the full pipeline; stop at the first failing stage."""
    argv = list(sys.argv[1:] if argv is None else argv)

    print("🧪 Growth Laboratory - Full Pipeline")
    print("=" * 80)

    for stage in STAGES:
        print(f"\n📊 Stage: {stage}")
        code = run_stage([stage] + argv)
        if code != 0:
            print(f"\n❌ Stage '{stage}' failed with exit code {code}")
            return code
        print(f"✓ {stage} complete")

    print("\n✅ Pipeline complete!")
    print("📁 Outputs: soliton/spectrum/trajectory/evolve/growth CSV + JSON in the output directory")
    return 0


if __name__ == "__main__":
    sys.exit(main())
