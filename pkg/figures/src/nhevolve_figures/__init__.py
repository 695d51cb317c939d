"""Figure-panel renderer for the slow non-Hermitian evolution toolkit.

Consumes only the CSV/JSON artifacts written by the ``nhevolve`` CLI.
"""

from .io import InputError, load_report, load_table
from .panels import PANEL_KINDS, PanelSpec, panel_layout, render_all, render_panel

__version__ = "0.1.0"

__all__ = [
    "InputError",
    "PANEL_KINDS",
    "PanelSpec",
    "load_report",
    "load_table",
    "panel_layout",
    "render_all",
    "render_panel",
]
