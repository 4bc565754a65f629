"""
Building a developable immersion from a curvature profile
=========================================================

A straight leading curve with constant normal curvature rolls the unit
square onto a cylinder of radius one. We build the immersion, validate it,
compute its Sobolev norms and export a mesh.
"""

from pathlib import Path

import numpy as np

from developable import ConvexDomain, CurvatureProfile, DevelopableImmersion, FramedCurve
from developable.io import write_fields_csv, write_obj

out = Path("demo_out/01")

# the square, opened by a hair so the end fronts lie inside
box = ConvexDomain.box([-1e-9, -0.5], [1.0 + 1e-9, 0.5])
profile = CurvatureProfile.constant(1.0, [0.0], normal=1.0)
curve = FramedCurve.build(profile, np.eye(2), step=1e-3)
imm = DevelopableImmersion(curve, box)

report = imm.validate()
print("valid:", report.passed, " min J:", report.min_jacobian)

# |grad u|^2 integrates to n |Omega| for every isometry
norms = imm.sobolev_norms()
print(f"|u|^2 = {norms.l2:.6f}  |grad u|^2 = {norms.grad:.6f}  |hess u|^2 = {norms.hess:.6f}")
print("grad / volume =", norms.grad / norms.volume)

# a few points of the image: x1 wraps around the circle x^2 + (z - 1)^2 = 1
x = np.array([[0.0, 0.0], [0.5, 0.2], [1.0, -0.4]])
print(imm.value_at(x))

write_obj(out / "cylinder.obj", imm)
write_fields_csv(out / "fields.csv", imm)
print("wrote", out / "cylinder.obj")
