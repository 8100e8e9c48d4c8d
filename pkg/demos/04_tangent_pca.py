"""
Principal components of covariance operators
============================================

Lifts a set of covariance operators to the tangent space at their
barycenter and runs PCA there, recovering the directions in which the
operators vary.
"""

import numpy as np

from funcov import (GpSpec, default_grid, sample_covariance, sample_gp,
                    scores_table, tangent_pca)

grid = default_grid(16)

# covariance operators estimated from curve samples: two quiet cells,
# two noisy cells, two with a longer correlation length
cells = {
    "quiet_a":  GpSpec(kernel="MATERN_3_2", length_scale=0.25, variance=1.0, noise_sd=0.2),
    "quiet_b":  GpSpec(kernel="MATERN_3_2", length_scale=0.25, variance=1.0, noise_sd=0.2),
    "loud_a":   GpSpec(kernel="MATERN_3_2", length_scale=0.25, variance=4.0, noise_sd=0.2),
    "loud_b":   GpSpec(kernel="MATERN_3_2", length_scale=0.25, variance=4.0, noise_sd=0.2),
    "smooth_a": GpSpec(kernel="MATERN_3_2", length_scale=0.60, variance=1.0, noise_sd=0.2),
    "smooth_b": GpSpec(kernel="MATERN_3_2", length_scale=0.60, variance=1.0, noise_sd=0.2),
}
labels = list(cells)
ops = [sample_covariance(sample_gp(cells[k], grid, n=40, seed=i))
       for i, k in enumerate(labels)]

res = tangent_pca(ops, n_components=3)
table = scores_table(res, labels)

share = res.eigenvalues / res.eigenvalues.sum()
print("eigenvalue shares:", np.round(share[:4], 3))

print("\nscores (rows: cells, columns: components):")
print("  " + "  ".join(f"{h:>9}" for h in table.header))
for row in table.rows:
    print("  " + f"{row[0]:>9}" + "  "
          + "  ".join(f"{x:9.4f}" for x in row[1:]))

# the loud cells stand apart on the first component; the smooth cells
# on the second
print("\nscreeplot rows (component, eigenvalue, share):")
for comp, val, frac in table.screeplot[:4]:
    print(f"  {comp}  {val:10.4f}  {frac:.3f}")
