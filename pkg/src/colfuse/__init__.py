"""colfuse: a desk-scale columnar engine comparing fused single-pass
pipeline execution against a staged per-pass baseline."""

__version__ = "0.1.0"
