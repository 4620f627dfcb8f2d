"""Multimodal speech-based dementia screening.

Engineered disfluency, acoustic, and turn-taking features from picture
description transcripts; three small neural classifiers with transfer-learned
MMSE regressors; hard/soft/learnt ensembles; and a cross-validation harness.
"""

__version__ = "0.1.0"
