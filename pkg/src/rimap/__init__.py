"""Desk-scale analytics for R&I project portfolios.

Pipeline stages: CSV ingestion, organisation resolution, document
embeddings, priority-area classification, topic clustering, SDG tagging,
2D semantic map, collaboration networks, and a read-only exploration API.
"""

__version__ = "0.1.0"
