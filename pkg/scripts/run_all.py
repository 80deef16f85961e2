"""Run every experiment config in configs/ and print a one-line verdict per criterion."""
import argparse
import sys
from pathlib import Path

from zwitterlab.experiments import ExperimentConfig, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--only", nargs="*", help="experiment names to run")
    args = ap.parse_args()
    failed = 0
    for path in sorted((ROOT / "configs").glob("*.yaml")):
        cfg = ExperimentConfig.load(path)
        if args.only and cfg.experiment not in args.only:
            continue
        res = run_experiment(cfg, out_dir=args.out)
        bad = [c.name for c in res.checks if c.acceptance and not c.passed]
        failed += bool(bad)
        verdict = "PASS" if res.passed else "FAIL (" + "; ".join(bad) + ")"
        print(f"{path.stem:<32} {verdict}  [{res.report['runtime_s']:.1f} s]", flush=True)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
