"""Canonical 13-joint skeleton order.

Every module addresses joints by index in this order; names exist only for
display. File columns, heatmap channels, and pose arrays all follow it.
"""

JOINT_NAMES = (
    "head",
    "shoulderR",
    "shoulderL",
    "elbowR",
    "elbowL",
    "hipR",
    "hipL",
    "handR",
    "handL",
    "kneeR",
    "kneeL",
    "footR",
    "footL",
)

NUM_JOINTS = len(JOINT_NAMES)

# depth-anchor joint used when normalizing training data
HEAD = 0
