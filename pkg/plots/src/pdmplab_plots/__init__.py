"""Plotting for pdmplab output files: heatmaps of density CSVs, log-log
blow-up figures, and rate-scaling sweep summaries.  Consumes only the
documented file formats; never recomputes any of the numbers it draws."""

__version__ = "0.1.0"

from .blowup import plot_blowup
from .heatmap import plot_heatmap
from .io import FileContractError, read_density_csv, read_json_report
from .sweep import collect_sweep, plot_sweep
