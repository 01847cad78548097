from .config import RunConfig
from .images import export_images
from .main import build_parser, main

__all__ = ["RunConfig", "build_parser", "export_images", "main"]
