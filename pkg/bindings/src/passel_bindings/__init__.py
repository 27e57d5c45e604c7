"""Batched, array-in/array-out bindings over the passel core.

Training pipelines hand over flat float32 buffers; this layer
validates shapes, widens to float64 for the core computation, and
returns freshly allocated float32 outputs.  No per-object wrapper
types cross the boundary, and input buffers are never mutated.
"""

import passel as _core

from .flat import (
    LABEL_IGNORED,
    LABEL_NEGATIVE,
    LABEL_POSITIVE,
    AssignmentArrays,
    assign_scene_flat,
    iou_box_matrix,
    remove_ground_flat,
)

# The binding distribution tracks the core library version.
__version__ = _core.__version__

__all__ = [
    "AssignmentArrays",
    "LABEL_IGNORED",
    "LABEL_NEGATIVE",
    "LABEL_POSITIVE",
    "assign_scene_flat",
    "iou_box_matrix",
    "remove_ground_flat",
    "__version__",
]
