"""Numerical lab for non-expanding maps of Gromov hyperbolic spaces."""

from .spaces import ModelSpace, build_space  # noqa: F401
from .maps import MapHandle, build_map  # noqa: F401
from .metric import estimate_delta, gromov_product  # noqa: F401
from .forward import classify, forward_orbit  # noqa: F401
from .dilation import detect_brfp, dilation_iterates  # noqa: F401
from .backward import equivalence_battery, synthesize_backward_orbit  # noqa: F401
from .models import LabSettings  # noqa: F401

__all__ = [
    "ModelSpace",
    "build_space",
    "MapHandle",
    "build_map",
    "estimate_delta",
    "gromov_product",
    "classify",
    "forward_orbit",
    "detect_brfp",
    "dilation_iterates",
    "equivalence_battery",
    "synthesize_backward_orbit",
    "LabSettings",
]
