"""Gradient-flow volumetric instance segmentation.

Label volumes are encoded into per-axis gradient fields whose flow points at
cell centers; reconstruction traces voxels along the predicted flow, labels
the resulting sink clusters, and filters implausible instances. Everything
moves through one file format (GF3D) so the stages compose on disk as well
as in memory.
"""

from .config import PipelineConfig
from .encode import EncodeParams, EncodingKind, encode, encode_foreground
from .evaluate import (
    InstanceReport,
    ScoreSummary,
    match_and_dice,
    reports_to_csv,
    summarize,
    summary_to_text,
)
from .reconstruct import (
    FilterParams,
    InstanceDisposition,
    ReconstructionParams,
    SinkAssignment,
    equivalent_radius,
    filter_instances,
    format_disposition_report,
    label_sinks,
    reconstruct_pipeline,
    trace,
)
from .synth import PhantomError, PhantomSpec, generate_phantom
from .tiling import (
    TileGrid,
    extract_patch,
    merge_tiles,
    plan_tiles,
    read_manifest,
    weight_window,
    write_manifest,
)
from .volume import FormatError, Volume, import_raw, read_volume, write_volume

__version__ = "0.1.0"

__all__ = [
    "EncodeParams",
    "EncodingKind",
    "FilterParams",
    "FormatError",
    "InstanceDisposition",
    "InstanceReport",
    "PhantomError",
    "PhantomSpec",
    "PipelineConfig",
    "ReconstructionParams",
    "ScoreSummary",
    "SinkAssignment",
    "TileGrid",
    "Volume",
    "encode",
    "encode_foreground",
    "equivalent_radius",
    "extract_patch",
    "filter_instances",
    "format_disposition_report",
    "generate_phantom",
    "import_raw",
    "label_sinks",
    "match_and_dice",
    "merge_tiles",
    "plan_tiles",
    "read_manifest",
    "read_volume",
    "reconstruct_pipeline",
    "reports_to_csv",
    "summarize",
    "summary_to_text",
    "trace",
    "weight_window",
    "write_manifest",
    "write_volume",
]
