"""Prototype-aligned knowledge distillation for cross-lingual sequence labeling.

Two-stage pipeline: a teacher tagger trained on labeled source-language
text with a contrastive class-prototype alignment loss against unlabeled
target-language text, then a student tagger distilled on the target
language from frozen teacher probabilities, with prototypical
self-training phased in by a cumulative schedule.
"""

__version__ = "0.1.0"
