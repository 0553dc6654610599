"""pepvm: an interpreter and interleaving runtime for PEP programs."""

from .engine import boot, enabled, explore, make_policy, run, step
from .frontend import PepError, parse_program

__version__ = "0.1.0"

__all__ = ["PepError", "boot", "enabled", "explore", "make_policy", "parse_program",
           "run", "step"]
