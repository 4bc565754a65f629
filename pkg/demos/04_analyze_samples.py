"""
Recovering rulings from samples
===============================

Given only the values of an isometric immersion on a lattice, the analyzer
estimates derivatives, checks the isometry and rank-one conditions and
partitions the domain into flat bodies and ruled regions with their ruling
hyperplanes.
"""

import numpy as np

from developable import (ConvexDomain, SampledMap, cone_map, detect_rulings, estimate_fields,
                         isometry_residual, normal_field, second_form_field)


def show(name, smap):
    fields = estimate_fields(smap)
    normals, _ = normal_field(fields)
    second = second_form_field(fields, normals)
    part = detect_rulings(fields, second, normals)
    print(f"--- {name}: isometry {isometry_residual(fields)[1]:.1e}, max minor {second.max_minor:.1e}")
    print(part.summary())
    return part, smap


def cylinder(x):
    return np.stack([np.sin(x[..., 0]), x[..., 1], 1 - np.cos(x[..., 0])], axis=-1)


h = 5e-3
show("cylinder", SampledMap.from_function(cylinder, ConvexDomain.ball([0.0, 0.0], 0.5), h))

# a truncated cone: rulings are radial, so every hyperplane normal is orthogonal to x
part, smap = show("cone", SampledMap.from_function(cone_map, ConvexDomain.ball([0.6, 0.0], 0.35), h))
ruled = part.kind == 2
print("max |x . nu| over ruled nodes:", np.max(np.abs(np.einsum("ij,ij->i", smap.nodes()[ruled],
                                                                part.normals[ruled]))))

show("plane", SampledMap.from_function(lambda x: np.concatenate([x, 0 * x[..., :1]], axis=-1),
                                       ConvexDomain.ball([0.0, 0.0], 0.5), h))
