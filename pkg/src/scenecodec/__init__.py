"""scenecodec: caption-domain image codec, DCT baseline, and rate-distortion tooling."""

__version__ = "0.1.0"

from .captions import describe, parse, validate
from .core import (
    Bitstream,
    Codec,
    Image,
    RDPoint,
    compression_ratio,
    deserialize_bitstream,
    read_ppm,
    serialize_bitstream,
    write_ppm,
)
from .entropy import Codebook, decode_text, encode_text, train_codebook
from .scene import SceneGraph, SceneObject, analyze, render, scene_distance

__all__ = [
    "Bitstream",
    "Codebook",
    "Codec",
    "Image",
    "RDPoint",
    "SceneGraph",
    "SceneObject",
    "analyze",
    "compression_ratio",
    "decode_text",
    "describe",
    "deserialize_bitstream",
    "encode_text",
    "parse",
    "read_ppm",
    "render",
    "scene_distance",
    "serialize_bitstream",
    "train_codebook",
    "validate",
    "write_ppm",
    "__version__",
]
