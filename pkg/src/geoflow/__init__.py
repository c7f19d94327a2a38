"""Common-structure discovery for aligned multimodal data via geodesics of
diffusion kernels on the positive-definite cone."""

__version__ = "0.1.0"
