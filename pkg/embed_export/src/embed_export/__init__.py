"""Contextual-vector exporter for compound corpora.

Runs a pretrained transformer over corpus sentences (compounds marked with
bracket characters in the input) and writes one dense vector per toolkit
token to the NCTV binary format that the parsing toolkit ingests.
"""

from .exporter import ExportManifest, export

__version__ = "0.1.0"
__all__ = ["ExportManifest", "export"]
