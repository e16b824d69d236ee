"""Python interface to the UniM evaluation core.

The compiled extension ``_unim_eval`` carries the implementation; this package
re-exports its public surface under a stable name.
"""

from _unim_eval import (
    UnimError,
    __version__,
    audio_quality,
    classify_difficulty,
    extract_grade,
    ics,
    image_quality,
    instance_gq,
    normalize_grade,
    parse_tags,
    pearson,
    relativize,
    round_trip,
    sqcs,
    structure_scores,
    supporting_rate,
    threed_quality,
)

__all__ = [
    "UnimError",
    "__version__",
    "audio_quality",
    "classify_difficulty",
    "extract_grade",
    "ics",
    "image_quality",
    "instance_gq",
    "normalize_grade",
    "parse_tags",
    "pearson",
    "relativize",
    "round_trip",
    "sqcs",
    "structure_scores",
    "supporting_rate",
    "threed_quality",
]
