"""Fractional Sudoku completion via the adjacency algebra of the tile system."""

from .core import (
    DensityReport,
    EdgeId,
    FractionalAssignment,
    PartialSudoku,
    PuzzleError,
    SudokuShape,
    Tile,
    availability_counts,
    box_of,
    density_report,
    graph_edges,
    parse_puzzle,
    serialize_puzzle,
    tiles_available,
    verify_fractional_completion,
)

__version__ = "0.1.0"
