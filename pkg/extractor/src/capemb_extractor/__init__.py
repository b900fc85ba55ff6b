"""Offline embedding extraction into the CAPEMB file format."""

from .extract import ExtractionJob, extract_sentence_embeddings, extract_word_embeddings

__all__ = ["ExtractionJob", "extract_sentence_embeddings", "extract_word_embeddings"]
