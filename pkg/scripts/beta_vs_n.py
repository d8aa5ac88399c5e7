"""Type-II error against photon number: Gaussian theory, exact binomial and
direct imaging, plus the per-photon exponent each curve implies."""
import argparse
import math

import numpy as np
from scipy import stats

from spade_ht.crosstalk import symmetric
from spade_ht.information import (di_relative_entropy, mixed_probabilities,
                                  spade_relative_entropy_exact)
from spade_ht.records import write_csv
from spade_ht.scene import Hypothesis, SourceScene
from spade_ht.testing import (analytic_threshold, di_log_beta_theory, spade_log_beta_theory)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--epsilon", type=float, default=0.042)
    ap.add_argument("--d-a", type=float, default=0.33)
    ap.add_argument("--c", type=float, default=0.01)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--out", default="results/beta_vs_n.csv")
    args = ap.parse_args()

    scene, ct = SourceScene(args.epsilon, args.d_a), symmetric(args.c)
    q1 = mixed_probabilities(scene, ct, Hypothesis.H1).p1
    d_sd, d_di = spade_relative_entropy_exact(scene, ct), di_relative_entropy(scene)
    rows = []
    for n in np.unique(np.logspace(2, 8, 49).astype(int)):
        n = int(n)
        log_g = spade_log_beta_theory(n, scene, ct, args.alpha)
        log_x = float(stats.binom.logcdf(analytic_threshold(n, ct, args.alpha), n, q1))
        log_d = di_log_beta_theory(n, scene, args.alpha)
        rows.append((n, math.exp(log_g), math.exp(log_x), math.exp(log_d),
                     -log_g / n / d_sd, -log_d / n / d_di))
    write_csv(args.out, ("n", "beta_gaussian", "beta_exact", "beta_di",
                         "spade_exponent_ratio", "di_exponent_ratio"), rows)
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
