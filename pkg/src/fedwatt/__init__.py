"""fedwatt: federated meta-learning engine and benchmark harness for NILM.

Disaggregates aggregate smart-meter readings into appliance-level power
signals with a seq2point recurrent model, trained under four regimes:
centralized, local, federated averaging, and federated averaging interleaved
with meta-learning rounds plus per-task fine-tuning.
"""

from .errors import FedwattError, TrainingDivergedError, ValidationError

__version__ = "0.1.0"

__all__ = ["FedwattError", "TrainingDivergedError", "ValidationError", "__version__"]
