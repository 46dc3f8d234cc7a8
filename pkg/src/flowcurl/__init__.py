"""flowcurl: a Flow Matching training workbench for studying timestep
sampling distributions and two-phase curriculum schedules on 2-D data."""

__version__ = "0.1.0"
