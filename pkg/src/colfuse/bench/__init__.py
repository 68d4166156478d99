"""Benchmark harness: data generation, canned queries, the brute-force
oracle, and reporting."""
