"""Wikitext tokenization.

Whitespace separates tokens and is dropped. Runs of word characters
(Unicode letters, digits, underscore) form one token; every other
non-whitespace character is a token of its own. Output is lowercase.
"""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")

# Paragraphs are separated by a blank line, sentences end after . ! ? or a newline.
_PARAGRAPH_SPLIT_RE = re.compile(r"\n\s*\n")
_SENTENCE_END_RE = re.compile(r"(?<=[.!?\n])")


def tokenize(text: str) -> list[str]:
    # Lowercase before splitting: some characters lowercase to more than one
    # codepoint, and splitting afterwards keeps tokenize(lower(t)) == tokenize(t).
    return _TOKEN_RE.findall(text.lower())


def split_paragraphs(text: str) -> list[str]:
    return _PARAGRAPH_SPLIT_RE.split(text)


def split_sentences(paragraph: str) -> list[str]:
    return _SENTENCE_END_RE.split(paragraph)


def segment_paragraph(raw_paragraph: str) -> list[list[str]]:
    """Tokens of one paragraph grouped by sentence; empty sentences dropped."""
    # Lowercase the paragraph as a whole: case mapping can depend on neighbouring
    # letters (final sigma), and paragraph edges are whitespace, sentence edges are not.
    sentences = []
    for raw_sentence in split_sentences(raw_paragraph.lower()):
        tokens = _TOKEN_RE.findall(raw_sentence)
        if tokens:
            sentences.append(tokens)
    return sentences


def segment(text: str) -> list[list[list[str]]]:
    """Tokenize ``text`` into paragraphs of sentences of tokens.

    Empty paragraphs and sentences are dropped. Flattening the result gives
    exactly ``tokenize(text)`` because every split point lies on whitespace or
    right after a single-character token.
    """
    return [p for p in map(segment_paragraph, split_paragraphs(text)) if p]
