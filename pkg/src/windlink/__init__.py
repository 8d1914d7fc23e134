"""Sizing and cost-benefit engine for offshore wind delivery by HVDC, hybrid HVDC-hydrogen, or hydrogen pipelines."""

__version__ = "0.1.0"
