"""Local bootstrap percolation: lattice simulator, rectangle process and bounds."""
from .model import (EMPTY, FROBOSE, MODIFIED, STANDARD, VARIANTS, Field, Rect, SiteState,
                    Variant, frame_strips, get_variant, site_state)

__version__ = "0.1.0"

__all__ = ["EMPTY", "FROBOSE", "MODIFIED", "STANDARD", "VARIANTS", "Field", "Rect", "SiteState",
           "Variant", "frame_strips", "get_variant", "site_state", "__version__"]
