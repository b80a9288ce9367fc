"""Print the excision ladder for the dilogarithm region.

The region {0 <= r1 <= 1, 0 <= r2 <= 1/2, r1 + r2 >= 1} integrated against
dr1/r1 ^ dr2/r2 converges to Li2(1/2); each rung excises |r_i| < eps and
the ladder extrapolates the limit.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from logvol import LogForm, QuadConfig, integrate_log_form, parse_region


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps0", type=float, default=2.0**-4)
    ap.add_argument("--rungs", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    region_path = Path(__file__).resolve().parent.parent / "regions" / "s_half.region"
    region = parse_region(region_path.read_text())
    form = LogForm.dlog(2, 2, 0).wedge(LogForm.dlog(2, 2, 1))
    cfg = QuadConfig(eps0=args.eps0, ladder_len=args.rungs, seed=args.seed)
    result = integrate_log_form(region, form, cfg)

    series = sum(0.5**k / k**2 for k in range(1, 61))
    print(result.ladder.to_csv())
    print(f"value    {result.value:.10f}")
    print(f"series   {series:.10f}  (60 terms)")
    print(f"difference {abs(result.value - series):.2e}")


if __name__ == "__main__":
    main()
