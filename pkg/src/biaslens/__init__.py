"""biaslens: bias measurement for multilingual multimodal retrieval.

Measures two distinct retrieval biases over pluggable embedding sets:

* prevalence bias in image-to-text retrieval, via language-distribution
  KL divergence with and without a logarithmic rank discount
  (LBKL / DLBKL), and
* cultural association bias in text-to-image retrieval, via a
  forced-choice triplet protocol and the self-preference score
  SP = M_cul / M_sem.

Synthetic generators, a triplet assembly kit, and silhouette/correlation
analytics round out the pipeline so metric behaviour can be validated
end to end without any encoder model.
"""

__version__ = "0.1.0"
