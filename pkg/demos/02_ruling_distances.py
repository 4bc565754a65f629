"""
How far can rulings reach?
==========================

Along a circular leading curve of radius R the rulings on the concave side
meet at the centre, so the focal distance L equals R and L * kappa = 1. The
distance S to the domain boundary must stay below L for the chart to be
injective.
"""

import numpy as np

from developable import ConvexDomain, CurvatureProfile, DevelopableImmersion, FramedCurve, margin_check

for R in (1.0, 2.0, 5.0):
    curve = FramedCurve.build(CurvatureProfile.constant(0.8, [1.0 / R]), np.eye(2), 1e-3)
    mid, _ = curve.domain.state(np.array(0.4))
    imm = DevelopableImmersion(curve, ConvexDomain.ball(mid, 0.45))
    inward = imm.ruling_distances(0.4, [1.0])
    outward = imm.ruling_distances(0.4, [-1.0])
    print(f"R={R}: L={inward.L:.9f}  L*kappa={inward.L / R:.2e}  S={inward.S:.3f}  "
          f"outward L={outward.L}  margin={margin_check(imm):.3f}")

# a domain reaching past the centre of curvature fails validation, with a witness
curve = FramedCurve.build(CurvatureProfile.constant(0.8, [1.0]), np.eye(2), 1e-3)
mid, _ = curve.domain.state(np.array(0.4))
report = DevelopableImmersion(curve, ConvexDomain.ball(mid, 1.5)).validate()
print("oversized domain:", report.passed, " min margin", report.min_margin, "at", report.margin_witness)
