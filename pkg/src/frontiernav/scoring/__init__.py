"""Goal relevance of frontiers: set-of-marks prompting, and offline scorers."""

from .client import ADAPTERS, DEFAULT_TOKEN_ENV, ChatCompletionsAdapter, SimpleAdapter, VLMClient
from .marks import (
    MARK_RADIUS,
    Mark,
    MarkedFrontierSet,
    assign_labels,
    decode_ppm,
    encode_png,
    encode_ppm,
    render_raster,
    write_ppm,
)
from .prompts import (
    build_frontier_prompt,
    build_presence_prompt,
    extract_json_object,
    load_template,
    parse_frontier_response,
    parse_presence_response,
)
from .scorers import (
    ConstantScorer,
    OracleScorer,
    SemanticScorer,
    VLMScorer,
    constant_score,
    ground_truth_presence,
    oracle_score,
)

__all__ = [
    "ADAPTERS", "DEFAULT_TOKEN_ENV", "ChatCompletionsAdapter", "SimpleAdapter", "VLMClient",
    "MARK_RADIUS", "Mark", "MarkedFrontierSet", "assign_labels", "decode_ppm", "encode_png",
    "encode_ppm", "render_raster", "write_ppm",
    "build_frontier_prompt", "build_presence_prompt", "extract_json_object", "load_template",
    "parse_frontier_response", "parse_presence_response",
    "ConstantScorer", "OracleScorer", "SemanticScorer", "VLMScorer", "constant_score",
    "ground_truth_presence", "oracle_score",
]
