"""Deterministic discrete-event simulation of callback-based node graphs.

Quick start::

    from detsim import Kernel, default_job, final_states

    kernel = Kernel(default_job())
    result = kernel.run()
    print(final_states(kernel))

Same job, same trace, same final states, every time.
"""

from ._version import __version__
from .errors import DetsimError, ParseError, ValidationError
from .timebase import (
    BackwardTime,
    SimClock,
    SimDuration,
    SimTime,
    TimeOverflow,
    U64_MAX,
)
from .graph import (
    ClientEntity,
    DuplicateCallbackId,
    DuplicateNodeName,
    DuplicateServiceName,
    Graph,
    Node,
    NodeFactory,
    ParameterError,
    Parameters,
    Payload,
    PublisherEntity,
    ServiceEntity,
    SubscriptionEntity,
    TimerEntity,
    UnknownNodeType,
    UnknownService,
)
from .executor import (
    CallbackContext,
    DEFAULT_LIVELOCK_THRESHOLD,
    DelayedPublication,
    JobResult,
    JobSpec,
    Kernel,
    LivelockDetected,
    NodeSpec,
    ReadyEvent,
    StarvedClock,
)
from .benchmark import (
    JobNotFinished,
    build_benchmark,
    default_config_path,
    default_factory,
    default_job,
    default_node_specs,
    final_states,
    mix_state,
    sm64,
)
from .config import load_config, parse_config
from .trace import (
    Divergence,
    EventKind,
    SeqGap,
    TraceFormatError,
    TraceLog,
    TraceRecord,
)
from . import trace

__all__ = [
    "__version__",
    "BackwardTime",
    "CallbackContext",
    "ClientEntity",
    "DEFAULT_LIVELOCK_THRESHOLD",
    "DelayedPublication",
    "DetsimError",
    "Divergence",
    "DuplicateCallbackId",
    "DuplicateNodeName",
    "DuplicateServiceName",
    "EventKind",
    "Graph",
    "JobNotFinished",
    "JobResult",
    "JobSpec",
    "Kernel",
    "LivelockDetected",
    "Node",
    "NodeFactory",
    "NodeSpec",
    "ParameterError",
    "Parameters",
    "ParseError",
    "Payload",
    "PublisherEntity",
    "ReadyEvent",
    "SeqGap",
    "ServiceEntity",
    "SimClock",
    "SimDuration",
    "SimTime",
    "StarvedClock",
    "SubscriptionEntity",
    "TimeOverflow",
    "TimerEntity",
    "TraceFormatError",
    "TraceLog",
    "TraceRecord",
    "U64_MAX",
    "UnknownNodeType",
    "UnknownService",
    "ValidationError",
    "build_benchmark",
    "default_config_path",
    "default_factory",
    "default_job",
    "default_node_specs",
    "final_states",
    "load_config",
    "mix_state",
    "parse_config",
    "sm64",
    "trace",
]
