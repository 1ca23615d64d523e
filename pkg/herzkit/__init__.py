"""herzkit: numerical toolkit for homogeneous Herz and Herz-Sobolev spaces."""

__version__ = "0.1.0"
