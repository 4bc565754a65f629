"""
Gluing arms and bodies
======================

Two bent arms and a flat body between them, on an elongated ellipse. Each
smoothed arm changes its interface data a little, and the rigid motion that
glues it back onto the body shrinks as the schedule refines.
"""

import numpy as np

from developable import (AffinePiece, Constant, ConvexDomain, CurvatureProfile, DevelopableImmersion,
                         FramedCurve, PiecewiseConstant, RigidMotion, SmoothingConfig, glue_arms,
                         matching_motion, run_pipeline)

dom = ConvexDomain.ellipsoid([0.0, 0.0], [1.5, 0.6])
profile = CurvatureProfile(0.9, (Constant(0.0),), normal=PiecewiseConstant((0.3,), (0.0, 1.0)))
x0, x1 = np.array([-0.5, 0.0]), np.array([0.5, 0.0])
e1 = np.array([1.0, 0.0])

arm_a = DevelopableImmersion(FramedCurve.build(profile, np.eye(2), 1e-3, origin=[-1.4, 0.0]), dom,
                             extend_affine=True)
v, g, _ = arm_a.fields_at(x0[None], order=1)
body = AffinePiece(x0, v[0], g[0])

# the right arm runs leftwards from x1 = 1.4; place its target so it meets the body
trial = FramedCurve.build(profile, -np.eye(2), 1e-3, origin=[1.4, 0.0])
place = matching_motion(body, RigidMotion.identity(3), DevelopableImmersion(trial, dom, extend_affine=True), x1)
arm_c = DevelopableImmersion(FramedCurve.build(profile, -np.eye(2), 1e-3, origin=[1.4, 0.0],
                                               target_frame0=trial.target.frames[0] @ place.R.T,
                                               target_origin=place.b), dom, extend_affine=True)

glued = glue_arms([arm_a, body, arm_c], dom, [(x0, e1), (x1, e1)], check_affine=False)
print("unsmoothed chain, jumps:", glued.interface_jumps())

config = SmoothingConfig(rho=1.0)
for ra, rc in zip(run_pipeline(arm_a, config), run_pipeline(arm_c, config)):
    gm = glue_arms([ra.immersion, body, rc.immersion], dom, [(x0, e1), (x1, e1)])
    angles = [m.angle for m in gm.motions]
    print(f"m={ra.m:3d}  angles={np.round(angles, 5)}  jumps={max(max(j) for j in gm.interface_jumps()):.1e}")
