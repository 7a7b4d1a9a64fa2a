"""
Rater agreement and significance stars
======================================

Synthetic ratings from three raters for two systems, Fleiss's kappa per
criterion, then t-tests against the weaker baseline.
"""

import numpy as np

from aqg.agreement import Criterion, RatingRecord, fleiss_kappa, build_matrix, kappa_text, kappa_table, mean_ratings
from aqg.stats import SampleVector, significance_stars, t_cdf, t_test_two_sample

rng = np.random.default_rng(0)
ratings = []
for model, level in (("T5", 3), ("ICL", 4)):
    for item in range(12):
        truth = level + rng.integers(-1, 2)
        for rater in range(3):
            score = int(np.clip(truth + rng.integers(-1, 2) * (rng.random() < 0.3), 1, 5))
            ratings.append(RatingRecord(f"r{rater}", f"{model}/q{item:02d}", Criterion.RELEVANCE, score))

print(kappa_text(kappa_table(ratings)))
print(build_matrix(ratings, Criterion.RELEVANCE).counts[:4])
print({k: round(v, 2) for k, v in mean_ratings(ratings).items()})

# two raters in perfect disagreement
print(fleiss_kappa(np.array([[1, 1, 0, 0, 0], [1, 1, 0, 0, 0]])))

# the t distribution with one degree of freedom is Cauchy
print(t_cdf(1.0, 1), 0.5 + np.arctan(1.0) / np.pi)

res = t_test_two_sample([2, 4, 6], [1, 3, 5])
print(f"t={res.t:.3f} df={res.df:g} p={res.p_two_sided:.3f}")

baselines = {"T5": SampleVector([3, 3.2, 2.9, 3.1]), "BART": SampleVector([2.5, 2.7, 2.4, 2.6])}
print(significance_stars({"ICL": SampleVector([4.1, 4.3, 3.9, 4.2])}, baselines))
