from .circle import (CircleBackend, angular_distance, circle_inverse,
                     circle_retract, wrap)
from .product import ProductBackend, product_lift
from .rotations import (RotationBackend, cayley, cayley_inverse,
                        coeffs_from_skew, plane_rotation_angle, rotation_audit,
                        skew_from_coeffs, skew_pairs, so_retract)
from .spd import (BASIS_PAIRS, SpdAtom, SpdBackend, basis_element,
                  coeffs_from_sym, is_spd, random_spd, spd_distance, spd_exp,
                  spd_log, spd_metric, spd_powers, spd_retract,
                  spd_retract_inverse, sym_from_coeffs)
from .sphere import (POLE_GUARD, SphereBackend, embed_jacobian,
                     spherical_angles, spherical_embed, sphere_update_factors)

__all__ = [
    "BASIS_PAIRS", "CircleBackend", "POLE_GUARD", "ProductBackend",
    "RotationBackend", "SpdAtom", "SpdBackend", "SphereBackend",
    "angular_distance", "basis_element", "cayley", "cayley_inverse",
    "circle_inverse", "circle_retract", "coeffs_from_skew", "coeffs_from_sym",
    "embed_jacobian", "is_spd", "plane_rotation_angle", "product_lift",
    "random_spd", "rotation_audit", "skew_from_coeffs", "skew_pairs",
    "so_retract", "spd_distance", "spd_exp", "spd_log", "spd_metric",
    "spd_powers", "spd_retract", "spd_retract_inverse", "spherical_angles",
    "spherical_embed", "sphere_update_factors", "sym_from_coeffs", "wrap",
]
