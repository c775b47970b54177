"""
Command-line interface wiring every module into one `pregrasp` command.

Usage:
    # CLI interface
    uv run -m src.cli collect --kind grasp --success 100 --failure 300
    uv run -m src.cli train --module grasp
    uv run -m src.cli eval --baseline all

    # Programmatic interface
    from src.cli.__main__ import main
    exit_code = main(["plan", "--scene", "wall", "--seed", "3"])
"""

from .render import COLORMAP, VIEWS, affordance_figure, project_camera, save_figure

__all__ = [
    # affordance images
    "COLORMAP",
    "VIEWS",
    "affordance_figure",
    "project_camera",
    "save_figure",
]
