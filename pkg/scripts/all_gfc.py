"""Large load step on the system with a converter at every generator site.

    python scripts/all_gfc.py --dp 0.9
"""
import argparse

from gridforge.scenarios import STRATEGIES, preset, run_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description="all-converter system")
    ap.add_argument("--dp", type=float, default=0.9)
    ap.add_argument("--strategies", nargs="+", default=list(STRATEGIES))
    args = ap.parse_args()
    for s in args.strategies:
        rep = run_scenario(preset("all-gfc", s).with_dp(args.dp)).report
        print(f"{s:9s} {rep.stability:17s} total saturation {rep.saturation_time() * 1e3:6.1f} ms "
              f"nadir={rep.nadir:.4f} rad/s rocof={rep.rocof:.4f} rad/s^2")


if __name__ == "__main__":
    main()
