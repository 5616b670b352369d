"""Byzantine consensus under local broadcast: simulator, adversaries and checks."""

from .graph_core import Graph, generate
from .simulator import run, run_reference
from .trace import Scenario, Trace
from .verifier import Verdict, verify

__version__ = "0.1.0"

__all__ = ["Graph", "generate", "run", "run_reference", "Scenario", "Trace", "Verdict", "verify"]
