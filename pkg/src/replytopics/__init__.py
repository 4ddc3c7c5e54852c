"""Topic-based composition assistance for customer-care email replies.

The package covers the whole pipeline: corpus ingestion and preprocessing,
LDA topic views trained by collapsed Gibbs sampling, silver-standard topic
annotation, whole-reply and next-sentence topic predictors, evaluation
metrics, and an HTTP suggestion service for interactive composition.
"""

__version__ = "0.1.0"
