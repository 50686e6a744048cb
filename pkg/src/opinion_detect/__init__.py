"""Opinion detection for Persian micro-blog posts.

The pipeline filters a raw corpus down to influential, on-topic Persian posts,
represents each post as the mean of its pre-trained word vectors, and trains a
four-class multinomial logistic regression with a truncated-Newton solver.
"""

from opinion_detect.labels import CLASS_ORDER, OpinionLabel, SuperCategory

__version__ = "0.1.0"

__all__ = ["CLASS_ORDER", "OpinionLabel", "SuperCategory", "__version__"]
