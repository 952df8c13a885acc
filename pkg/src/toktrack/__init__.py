"""Token-level provenance tracking for revisioned wiki articles."""

from .dump import EditorId, PageRecord, RevisionRecord, is_redirect, keep_page, open_dump
from .tokenizer import tokenize
from .tracker import ArticleState, TokenHistory, finalize, process_revision, reconstruct_revision

__version__ = "0.1.0"

__all__ = [
    "ArticleState",
    "EditorId",
    "PageRecord",
    "RevisionRecord",
    "TokenHistory",
    "finalize",
    "is_redirect",
    "keep_page",
    "open_dump",
    "process_revision",
    "reconstruct_revision",
    "tokenize",
]
