"""Trip the synchronous machine and report how long each converter's DC
source stays saturated.

    python scripts/loss_of_sm.py
"""
import argparse

from gridforge.scenarios import STRATEGIES, preset, run_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description="loss of the synchronous machine")
    ap.add_argument("--strategies", nargs="+", default=list(STRATEGIES))
    args = ap.parse_args()
    for s in args.strategies:
        rep = run_scenario(preset("loss-of-sm", s)).report
        longest = max(rep.saturation_time(n) for n in rep.saturation)
        print(f"{s:9s} {rep.stability:17s} longest saturation {longest * 1e3:6.1f} ms "
              f"nadir={rep.nadir:.4f} rad/s")


if __name__ == "__main__":
    main()
