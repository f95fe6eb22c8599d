"""embed-exporter: produce embedding files in the biaslens binary format.

Bridges real text/image encoders (and a deterministic dummy encoder for
format-conformance testing) to the evaluation toolkit. Strictly one-way:
this package writes the documented formats and never imports the
toolkit.
"""

__version__ = "0.1.0"
