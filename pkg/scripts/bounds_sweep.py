"""Two-sided bounds for a config over its eps list, printed as a table.

    python3 scripts/bounds_sweep.py configs/cosine.json
"""

import argparse

from weakdisorder.bands import analyze_bands
from weakdisorder.config import parse_config
from weakdisorder.expansion import expand_edge
from weakdisorder.lower import build_hat_problem
from weakdisorder.report import bounds_report


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config")
    ap.add_argument("--max-period", type=int, default=None)
    args = ap.parse_args()
    cfg = parse_config(args.config)
    disc = cfg.grid()
    band = analyze_bands(cfg.operator, disc, cfg.sweeps.theta_points, cfg.sweeps.n_bands)
    exp = expand_edge(cfg.operator, cfg.family, cfg.disorder, disc, band)
    d = cfg.discretization
    hat = build_hat_problem(cfg.operator, cfg.family, exp, d.hat_N, d.hat_order) if cfg.operator.order == 1 else None
    rep = bounds_report(
        cfg.operator, cfg.family, cfg.disorder, exp, disc, cfg.supercell_grid(), cfg.supercell_grid(2),
        cfg.sweeps.eps_list, hat, args.max_period or cfg.sweeps.max_period, cfg.sweeps.s_grid,
        cfg.sweeps.momenta_per_cell,
    )
    print(rep.summary())
    print()
    print("eps        upper-inf    inf-lower    |inf - second order|")
    for r, e in zip(rep.rows, rep.expansion_error()):
        gap = r.inf_minus_lower
        print(f"{r.eps:<9g}  {r.upper_minus_inf:.3e}  {'-' if gap is None else format(gap, '.3e')}    {e:.3e}")


if __name__ == "__main__":
    main()
