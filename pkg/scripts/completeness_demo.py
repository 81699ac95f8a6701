"""Two-of-three completeness experiments on R^3 with W = span(e1).

Each scenario feeds a Cauchy sequence into the space not assumed complete and
reports every constructive stage with its margin.
"""

import argparse
from dataclasses import dataclass

from probnorm.complete import PointSequence, two_of_three_experiment
from probnorm.pnspace import simple_space
from probnorm.quotient import span


@dataclass(frozen=True)
class Config:
    horizon: int = 200
    lambdas: tuple[float, ...] = (0.2, 0.1, 0.05)
    seed: int = 0


SEQUENCES = {
    "V,W=>Q": ("custom-affine", {"A": [[0, 0, 0, 1], [0, 1, 0, 0], [0, 1, 0, 0]], "b": [0, 0, 0]}),
    "V,Q=>W": ("reciprocal", {"c": [2, 0, 0], "v": [1, 0, 0]}),
    "W,Q=>V": ("reciprocal", {"c": [1, 1, 0], "v": [-2, 1, 0]}),
}


def run(cfg: Config) -> bool:
    space, W = simple_space(3), span([1.0, 0.0, 0.0])
    ok = True
    for scenario, (rule, params) in SEQUENCES.items():
        seq = PointSequence(rule, params, cfg.horizon)
        rep = two_of_three_experiment(space, W, scenario, seq, horizon=cfg.horizon,
                                      lambda_grid=cfg.lambdas, seed=cfg.seed)
        ok &= rep.passed
        print(f"{scenario}: {rep.status}")
        for st in rep.details["stages"]:
            margin = st.get("margin", st.get("report", {}).get("margin"))
            m = "" if margin is None else f"  margin {margin:.4g}"
            print(f"    {st['stage']:<24} {'ok' if st['pass'] else 'FAIL'}{m}")
    return ok


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    raise SystemExit(0 if run(Config(horizon=args.horizon, seed=args.seed)) else 1)
