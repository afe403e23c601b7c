"""Export per-instance attribution vectors as falign interchange JSONL.

The host pipeline owns model training and attribution computation (e.g.
SHAP values on a test matrix); this bridge only serializes.  It never
reorders, drops, or rescales attribution values — ranking policy lives in
the evaluation engine, so raw signed values are exported, never pre-ranked
lists.
"""

from .export import ExportError, export_attributions

__version__ = "0.1.0"

__all__ = ["ExportError", "export_attributions"]
