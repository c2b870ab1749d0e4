"""Detect logic bugs in multi-table join optimization.

Pipeline: normalize a wide table into a provenance-tracked 3NF schema,
inject synchronized key noise, generate hinted join queries by
coverage-guided walks over a plan graph, compute exact ground truth from
the wide table via bitmap algebra, and flag engines whose results deviate.
"""

__version__ = "0.1.0"
