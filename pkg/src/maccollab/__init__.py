"""Machine collaboration ensembles for supervised regression."""

__version__ = "0.1.0"
