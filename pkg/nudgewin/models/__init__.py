from .sweep import Sweep
from .sweep_row import SweepRow
