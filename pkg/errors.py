from typing import Any, Optional


class SearchlightError(ValueError):
    """Base class for every rejection raised by the toolkit"""

    def __init__(self, message: str, subject: Optional[Any] = None):
        super().__init__(message)
        self.subject = subject


# Instance validation
class FormatError(SearchlightError):
    """Text file could not be parsed"""


class NotManifold(SearchlightError):
    """Boundary is not a closed 2-manifold"""


class NotConnected(SearchlightError):
    """Solid or boundary has more than one component"""


class NotOrthogonal(SearchlightError):
    """A face or ring edge is not axis-parallel"""


class DegenerateFace(SearchlightError):
    """Zero-area, self-crossing or overlapping face"""


class DegenerateSegment(SearchlightError):
    """Segment with coincident endpoints"""


# Fences
class ConvexInput(SearchlightError):
    """Operation needs at least one notch"""


class NotABox(SearchlightError):
    """A fence component is not box-shaped"""


class LemmaViolation(SearchlightError):
    """A fence facet is not lit by its guard"""


class WitnessNotFound(SearchlightError):
    """No guard point sees a whole cuboid"""


# Planning and verification
class InvalidGuard(SearchlightError):
    """Guard is not an open axis-parallel segment on the boundary"""


class NotViable(SearchlightError):
    """Some cell is not visible to any guard"""


class PrerequisiteFailed(SearchlightError):
    """Fence plan fails a lemma check the planner relies on"""


class BlindEndpoint(SearchlightError):
    """Sweep or move endpoint is a blind direction of its guard"""


class BlindDirection(SearchlightError):
    """Searchplane direction points outside the solid"""


class LeakyBoundary(SearchlightError):
    """Sweep region boundary has an unlit internal facet"""


class NotVisible(SearchlightError):
    """Sweeping guard has no witness for a cuboid of its region"""


class RegionOutside(SearchlightError):
    """Region or target leaves the interior of the solid"""


class TooLarge(SearchlightError):
    """Instance exceeds a configured size limit"""


class UnsupportedSchedule(SearchlightError):
    """Schedule names an unknown guard or step kind"""


class NonUniformState(SearchlightError):
    """Contamination split an unlit component after a step"""


# Polygons
class PointOutside(SearchlightError):
    """Sample point is not inside the polygon"""


class PartitionError(SearchlightError):
    """Reflex chord partition produced an invalid piece"""


# Constraint logic
class MalformedGraph(SearchlightError):
    """Constraint graph has a bad vertex, edge or target"""


class MalformedSchedule(SearchlightError):
    """Async schedule phases are inconsistent"""


class IllegalAsync(SearchlightError):
    """Async schedule reaches an illegal configuration"""


class RestrictionViolated(SearchlightError):
    """Both distinguished edges reach their targets in one configuration"""
