"""Synthetic determinism benchmark: hash-state nodes and a default topology.

Every node here owns a single 64-bit state word and does exactly one thing in
every callback: fold the activation into that state with a SplitMix64-style
mix.  Because the mix is sensitive to the callback id, the execution
timestamp, and the input word, the final state of each node is a fingerprint
of the entire execution history.  Two runs end with identical states only if
they executed the same callbacks, in the same order, at the same simulated
times, with the same inputs.  That makes a graph of these nodes a cheap but
thorough determinism detector.

The default topology exercises every event kind and both tie-break groups:
two timers on one node with periods chosen to collide (100 ms and 150 ms meet
every 300 ms), a relay whose depth-1 subscription gets overrun, a service in
the middle of a publish chain, and a client polling it.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import DetsimError
from .executor import CallbackContext, JobSpec, Kernel, NodeSpec
from .graph import Graph, Node, NodeFactory, ParameterError, Parameters, Payload
from .timebase import SimDuration, check_u64

_MASK64 = 2**64 - 1


class JobNotFinished(DetsimError):
    """Final states were requested from a kernel that has not finished."""


def sm64(x: int) -> int:
    """SplitMix64 output function: one full avalanche round over a u64."""
    check_u64(x, "sm64 input")
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_state(state: int, callback_id: int, t_ns: int, input_word: int = 0) -> int:
    """Fold one callback activation into a node state word.

    The nesting keeps every argument position distinct, so swapping any two
    activations, shifting a timestamp, or changing an input changes the
    result with overwhelming probability.
    """
    check_u64(state, "state")
    check_u64(callback_id, "callback_id")
    check_u64(t_ns, "t_ns")
    check_u64(input_word, "input_word")
    return sm64(state ^ sm64(callback_id ^ sm64(t_ns ^ input_word)))


def _initial_state(params: Parameters) -> int:
    state = params.get_int("initial_state", 0)
    return check_u64(state, "initial_state")


def _reject_unknown(name: str, params: Parameters, known: set) -> None:
    unknown = [key for key in params if key not in known]
    if unknown:
        raise ParameterError(f"node {name!r}: unknown parameters: {', '.join(sorted(unknown))}")


class BenchNode(Node):
    """Base for benchmark nodes: a u64 state plus the mixing helper."""

    def __init__(self, graph: Graph, node_id: int, name: str, params: Parameters) -> None:
        super().__init__(graph, node_id, name, params)
        self.state = _initial_state(params)

    @property
    def state_word(self) -> int:
        return self.state

    def _mix(self, ctx: CallbackContext, input_word: int = 0) -> None:
        self.state = mix_state(self.state, ctx.callback_id, ctx.now_ns, input_word)


class SourceNode(BenchNode):
    """One or more timers publishing the node state to a single topic.

    Parameters: ``topic``; ``timer0_period_ms``/``timer0_callback_id`` and
    further contiguous ``timer<i>_*`` pairs; optional ``initial_state``.
    Entities register timers first (in index order), then the publisher.
    """

    def __init__(self, graph: Graph, node_id: int, name: str, params: Parameters) -> None:
        super().__init__(graph, node_id, name, params)
        topic = params.get_str("topic")
        known = {"topic", "initial_state"}
        timers = []
        index = 0
        while f"timer{index}_period_ms" in params:
            period_key = f"timer{index}_period_ms"
            id_key = f"timer{index}_callback_id"
            timers.append((params.get_int(period_key), params.get_int(id_key)))
            known.update((period_key, id_key))
            index += 1
        if not timers:
            raise ParameterError(f"node {name!r}: needs at least timer0_period_ms")
        _reject_unknown(name, params, known)
        for period_ms, callback_id in timers:
            self.create_timer(SimDuration.from_ms(period_ms), self._on_timer, callback_id)
        self._pub = self.create_publisher(topic)

    def _on_timer(self, ctx: CallbackContext) -> None:
        self._mix(ctx)
        ctx.publish(self._pub, self.state)


class RelayNode(BenchNode):
    """A timer-driven publisher with an optional listening subscription.

    Parameters: ``timer_period_ms``, ``timer_callback_id``, ``pub_topic``;
    optional ``sub_topic`` with ``sub_callback_id``, ``sub_depth`` (default 1)
    and ``sub_forwards`` (default false, republish after mixing); optional
    ``initial_state``.  Entities register timer, publisher, subscription.
    """

    def __init__(self, graph: Graph, node_id: int, name: str, params: Parameters) -> None:
        super().__init__(graph, node_id, name, params)
        known = {"timer_period_ms", "timer_callback_id", "pub_topic", "initial_state"}
        period_ms = params.get_int("timer_period_ms")
        timer_id = params.get_int("timer_callback_id")
        pub_topic = params.get_str("pub_topic")
        sub_topic = None
        self._forwards = False
        if "sub_topic" in params:
            known.update(("sub_topic", "sub_callback_id", "sub_depth", "sub_forwards"))
            sub_topic = params.get_str("sub_topic")
            sub_id = params.get_int("sub_callback_id")
            sub_depth = params.get_int("sub_depth", 1)
            self._forwards = params.get_bool("sub_forwards", False)
        _reject_unknown(name, params, known)
        self.create_timer(SimDuration.from_ms(period_ms), self._on_timer, timer_id)
        self._pub = self.create_publisher(pub_topic)
        if sub_topic is not None:
            self.create_subscription(sub_topic, self._on_message, sub_id, depth=sub_depth)

    def _on_timer(self, ctx: CallbackContext) -> None:
        self._mix(ctx)
        ctx.publish(self._pub, self.state)

    def _on_message(self, ctx: CallbackContext, payload: Payload) -> None:
        self._mix(ctx, payload.value)
        if self._forwards:
            ctx.publish(self._pub, self.state)


class ServiceNode(BenchNode):
    """A passive node: subscriptions, an optional forwarder, and a service.

    Parameters, all groups optional but at least one required:
    ``sub_mix_topic`` (+ ``sub_mix_callback_id``, ``sub_mix_depth``) mixes
    incoming payloads; ``sub_forward_topic`` (+ ``sub_forward_callback_id``,
    ``sub_forward_depth``) mixes and republishes on ``pub_topic``;
    ``service_name`` (+ ``service_callback_id``) answers requests with the
    node state after mixing the request in.  Entities register in the order
    mix subscription, forward subscription, publisher, service.
    """

    def __init__(self, graph: Graph, node_id: int, name: str, params: Parameters) -> None:
        super().__init__(graph, node_id, name, params)
        known = {"initial_state"}
        groups = 0

        mix_topic = None
        if "sub_mix_topic" in params:
            known.update(("sub_mix_topic", "sub_mix_callback_id", "sub_mix_depth"))
            mix_topic = params.get_str("sub_mix_topic")
            mix_id = params.get_int("sub_mix_callback_id")
            mix_depth = params.get_int("sub_mix_depth", 1)
            groups += 1

        forward_topic = None
        if "sub_forward_topic" in params:
            known.update(("sub_forward_topic", "sub_forward_callback_id", "sub_forward_depth", "pub_topic"))
            forward_topic = params.get_str("sub_forward_topic")
            forward_id = params.get_int("sub_forward_callback_id")
            forward_depth = params.get_int("sub_forward_depth", 1)
            pub_topic = params.get_str("pub_topic")
            groups += 1
        elif "pub_topic" in params:
            raise ParameterError(f"node {name!r}: pub_topic without sub_forward_topic")

        service_name = None
        if "service_name" in params:
            known.update(("service_name", "service_callback_id"))
            service_name = params.get_str("service_name")
            service_id = params.get_int("service_callback_id")
            groups += 1

        if groups == 0:
            raise ParameterError(f"node {name!r}: no entities configured")
        _reject_unknown(name, params, known)

        if mix_topic is not None:
            self.create_subscription(mix_topic, self._on_mix, mix_id, depth=mix_depth)
        if forward_topic is not None:
            self.create_subscription(forward_topic, self._on_forward, forward_id, depth=forward_depth)
            self._pub = self.create_publisher(pub_topic)
        if service_name is not None:
            self.create_service(service_name, self._on_request, service_id)

    def _on_mix(self, ctx: CallbackContext, payload: Payload) -> None:
        self._mix(ctx, payload.value)

    def _on_forward(self, ctx: CallbackContext, payload: Payload) -> None:
        self._mix(ctx, payload.value)
        ctx.publish(self._pub, self.state)

    def _on_request(self, ctx: CallbackContext, request: int) -> int:
        self._mix(ctx, request)
        return self.state


class ClientNode(BenchNode):
    """A timer-driven service caller with an optional subscription.

    Parameters: ``service_name``, ``timer_period_ms``, ``timer_callback_id``,
    ``response_callback_id``; optional ``sub_topic`` with ``sub_callback_id``
    and ``sub_depth``; optional ``initial_state``.  Entities register timer,
    client, subscription.  Each timer fire mixes, then sends the node state
    as the request; the response is mixed back in when it arrives.
    """

    def __init__(self, graph: Graph, node_id: int, name: str, params: Parameters) -> None:
        super().__init__(graph, node_id, name, params)
        known = {"service_name", "timer_period_ms", "timer_callback_id", "response_callback_id", "initial_state"}
        service_name = params.get_str("service_name")
        period_ms = params.get_int("timer_period_ms")
        timer_id = params.get_int("timer_callback_id")
        response_id = params.get_int("response_callback_id")
        sub_topic = None
        if "sub_topic" in params:
            known.update(("sub_topic", "sub_callback_id", "sub_depth"))
            sub_topic = params.get_str("sub_topic")
            sub_id = params.get_int("sub_callback_id")
            sub_depth = params.get_int("sub_depth", 1)
        _reject_unknown(name, params, known)
        self.create_timer(SimDuration.from_ms(period_ms), self._on_timer, timer_id)
        self._client = self.create_client(service_name, self._on_response, response_id)
        if sub_topic is not None:
            self.create_subscription(sub_topic, self._on_message, sub_id, depth=sub_depth)

    def _on_timer(self, ctx: CallbackContext) -> None:
        self._mix(ctx)
        ctx.call(self._client, self.state)

    def _on_response(self, ctx: CallbackContext, response: int) -> None:
        self._mix(ctx, response)

    def _on_message(self, ctx: CallbackContext, payload: Payload) -> None:
        self._mix(ctx, payload.value)


BENCH_NODE_TYPES = {
    "bench_source": SourceNode,
    "bench_relay": RelayNode,
    "bench_service": ServiceNode,
    "bench_client": ClientNode,
}


def default_factory() -> NodeFactory:
    """A factory knowing the four benchmark node types."""
    factory = NodeFactory()
    for type_name, constructor in BENCH_NODE_TYPES.items():
        factory.register(type_name, constructor)
    return factory


DEFAULT_START_TIME_NS = 1_700_000_000_000_000_000
DEFAULT_DURATION_NS = 10_000_000_000


def default_node_specs() -> tuple[NodeSpec, ...]:
    """The shipped four-node topology (also available as a config file).

    node_a publishes /a from colliding 100 ms and 150 ms timers; node_b mixes
    /a through a depth-1 buffer and publishes /b at 200 ms; node_c mixes /a,
    forwards /b to /c, and answers the "sum" service; node_d polls "sum"
    every 500 ms and listens on /c.
    """
    return (
        NodeSpec(
            "bench_source",
            "node_a",
            Parameters(
                {
                    "topic": "/a",
                    "initial_state": 0x6FA142717D43F842,
                    "timer0_period_ms": 100,
                    "timer0_callback_id": 0xC9B72CEC68D00055,
                    "timer1_period_ms": 150,
                    "timer1_callback_id": 0x2CA0D558B2D770D7,
                }
            ),
        ),
        NodeSpec(
            "bench_relay",
            "node_b",
            Parameters(
                {
                    "pub_topic": "/b",
                    "initial_state": 0xEF2705418934083F,
                    "timer_period_ms": 200,
                    "timer_callback_id": 0x13DC4FC6600DB12E,
                    "sub_topic": "/a",
                    "sub_callback_id": 0xE9F4550907C74BA0,
                }
            ),
        ),
        NodeSpec(
            "bench_service",
            "node_c",
            Parameters(
                {
                    "initial_state": 0x25F84DA49E96B311,
                    "sub_mix_topic": "/a",
                    "sub_mix_callback_id": 0xB9738DC91D5CA9C8,
                    "sub_forward_topic": "/b",
                    "sub_forward_callback_id": 0x29A97489CACC8BBB,
                    "pub_topic": "/c",
                    "service_name": "sum",
                    "service_callback_id": 0x4CCF64788C8E78F4,
                }
            ),
        ),
        NodeSpec(
            "bench_client",
            "node_d",
            Parameters(
                {
                    "service_name": "sum",
                    "initial_state": 0xAC6952EC50E54B79,
                    "timer_period_ms": 500,
                    "timer_callback_id": 0xDBE9D2FA4670E7CD,
                    "response_callback_id": 0x0A3562D6CFD51F8E,
                    "sub_topic": "/c",
                    "sub_callback_id": 0x97384D38052DC75B,
                }
            ),
        ),
    )


def build_benchmark(graph: Graph) -> list[Node]:
    """Register the default topology onto an empty graph."""
    if graph.nodes or graph.entities:
        raise DetsimError("build_benchmark needs an empty graph")
    return [graph.register_node(spec.type_name, spec.name, spec.params) for spec in default_node_specs()]


def default_job(
    duration_ns: int = DEFAULT_DURATION_NS,
    start_time_ns: int = DEFAULT_START_TIME_NS,
    jitter_max_s: float = 0.0,
    livelock_threshold: int | None = None,
) -> JobSpec:
    """A ready-to-run JobSpec for the default topology."""
    kwargs = {}
    if livelock_threshold is not None:
        kwargs["livelock_threshold"] = livelock_threshold
    return JobSpec(
        start_time_ns=start_time_ns,
        nodes=default_node_specs(),
        duration=SimDuration(duration_ns),
        jitter_max_s=jitter_max_s,
        **kwargs,
    )


def default_config_path() -> Path:
    """Path of the shipped YAML equivalent of ``default_job()``."""
    return Path(str(resources.files("detsim").joinpath("configs/benchmark.yaml")))


def final_states(kernel: Kernel) -> dict[str, int]:
    """Map node name to final state word for every benchmark node."""
    if not kernel.finished:
        raise JobNotFinished("final states are only defined after the job finished")
    return {
        node.name: node.state for node in kernel.graph.nodes if isinstance(node, BenchNode)
    }
