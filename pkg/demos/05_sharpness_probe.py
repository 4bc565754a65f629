"""
Why p = 2 is sharp
==================

The cone u(r, t) = (r/2 cos 2t, r/2 sin 2t, sqrt(3) r/2) is an isometry with
|hess u| = sqrt(3)/r. Its W^{2,p} energy near the apex is finite exactly
when p < 2. The probe sums the finite-difference Hessian over shrinking
shells and compares the increments with the closed form.
"""

import numpy as np

from developable import sharpness_probe

for p in (1.5, 2.0, 2.5):
    res = sharpness_probe(p)
    print(f"p = {p}: {res.verdict}")
    print("  increments:", np.array2string(res.increments, precision=4))
    print("  oracle:    ", np.array2string(res.oracle, precision=4))
    print("  ratios:    ", np.array2string(res.ratios, precision=3))
