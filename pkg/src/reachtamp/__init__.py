"""Reachability-graph guided task and motion planning for mobile manipulators."""

__version__ = "0.1.0"
