from .protocol import (
    AckMessage,
    CommandMessage,
    PROTO_VERSION,
    StateMessage,
    build_state_message,
)
from .server import SimulationService, make_app, make_app_from_path, state_line

__all__ = [
    "AckMessage", "CommandMessage", "PROTO_VERSION", "SimulationService",
    "StateMessage", "build_state_message", "make_app", "make_app_from_path",
    "state_line",
]
