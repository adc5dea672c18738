"""Boundary-controlled networks of heat equations: simulation, consensus protocols and Lyapunov monitoring."""

from heatnet.analysis import certificate_constants, monitor
from heatnet.dynamics import PlantParams, SimConfig, simulate
from heatnet.errors import HeatNetError, ValidationError
from heatnet.field import AgentField, Grid
from heatnet.graph import build_topology, laplacian, spectrum, ten_agent_topology
from heatnet.protocols import LinearProtocol, SlidingGains, SlidingProtocol

__version__ = "0.1.0"
