"""Screen-recording UI dataset tooling, contrastive training and evaluation."""

from ._uiwf import (
    DimensionMismatch,
    EmptySelectionDB,
    Error,
    InvalidArgument,
    IoError,
    NoAssetForClass,
    ParseError,
    UnknownClass,
    ValidationError,
    __version__,
    ami,
    default_registry,
    gen_context_menu,
    gen_selected_text,
    kmeans,
    motion_det,
    project,
    retrieval_scores,
    run_cli,
    supcon_loss,
    validate,
)


def train(*args: str) -> tuple[int, str, str]:
    return run_cli(["train", *args])


def evaluate(*args: str) -> tuple[int, str, str]:
    return run_cli(["eval", *args])


__all__ = [name for name in dir() if not name.startswith("_")]
