"""Split hand demonstrations at speed minima and match the pieces to verbal instructions."""
from .errors import (
    DegenerateGeometry,
    DemosplitError,
    EmptyAfterFiltering,
    Infeasible,
    InsufficientData,
    InvalidInput,
    InvalidParameter,
    MalformedInput,
    UnknownWord,
)
from .evalkit import mock_caption, score_change_points, score_matching, synthesize
from .geomfit import classify_articulation, fit_circle, fit_line
from .lexdist import DistanceConfig, EmbeddingTable, Sentence, instruction_distance, load_embeddings, wmd
from .matcher import (
    DescribedSegments,
    InstructionScript,
    MatchAssignment,
    MatchCosts,
    build_distance_matrix,
    explain,
    match,
)
from .splitter import ChangePointSet, SegmentList, find_velocity_minima, split, uniform_split
from .trajectory import PoseTrack, VelocityProfile, load_pose_track, save_pose_track, smooth, speed_profile

__version__ = "0.1.0"
