"""S3LE: self-supervised shared latent embedding for humanoid motion retargeting.

Pipeline: sample paired training tuples from the robot's kinematics alone,
train a projection-invariant shared latent space between skeleton features
and joint configurations, then retarget skeleton sequences by nearest-neighbor
lookup over a database of feasible poses (feasible by construction).
"""

from importlib import resources

__version__ = "0.1.0"


def bundled_model_path():
    """Filesystem path of the packaged humanoid_upper.json robot model."""
    return resources.files("s3le").joinpath("data/humanoid_upper.json")
