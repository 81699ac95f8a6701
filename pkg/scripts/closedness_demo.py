"""Watch the quotient norm of e1 modulo the zero-sum kernel in c00 collapse.

The spreading representatives e1 - (1/n)(e1 + ... + e_{n+1}) have sup-norm 1/(n+1),
so the sampled quotient norm tends to eps_0 although e1 is not in the kernel.
A finite subspace of R^3 is probed next to it for contrast.
"""

import argparse
from dataclasses import dataclass

import numpy as np

from probnorm.distfn import sibley_to_eps0
from probnorm.pnspace import c00_space, simple_space
from probnorm.quotient import QuotientSpace, c00_sum_kernel, closedness_probe, span


@dataclass(frozen=True)
class Config:
    horizons: tuple[int, ...] = (10, 50, 100, 200, 400)
    finite_probes: int = 5
    seed: int = 0


def run(cfg: Config):
    print("c00, W = {sum = 0}, point e1")
    print(f"{'horizon':>8} {'d_S(nu-bar, eps0)':>18} {'1/(h+1)':>10}  verdict")
    for h in cfg.horizons:
        Q = QuotientSpace(c00_space(), c00_sum_kernel(), horizon=h)
        rep = closedness_probe(Q, [[1.0]])
        est = sibley_to_eps0(Q.nu([1.0]))
        print(f"{h:>8} {est:>18.6f} {1 / (h + 1):>10.6f}  {rep.details['verdict']}")

    rng = np.random.default_rng(cfg.seed)
    Q = QuotientSpace(simple_space(3), span([1.0, 0.0, 0.0]))
    probes = rng.normal(size=(cfg.finite_probes, 3))
    rep = closedness_probe(Q, probes)
    print("\nR^3, W = span(e1), random probes")
    for f in rep.details["findings"]:
        print(f"  d_S estimate {f['dS_estimate']:.4f}")
    print(f"  verdict: {rep.details['verdict']}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    run(Config(seed=args.seed))
