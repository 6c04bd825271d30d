"""Shared test fixtures: minimal node types and kernel assembly helpers.

The node classes here are deliberately tiny and transparent so tests can
wire exact scenarios and inspect what happened from plain attributes.
"""

from __future__ import annotations

from detsim import (
    JobSpec,
    Kernel,
    Node,
    NodeFactory,
    NodeSpec,
    Parameters,
    SimDuration,
)


class TickerNode(Node):
    """Timer-driven node; optionally publishes its fire count."""

    def __init__(self, graph, node_id, name, params):
        super().__init__(graph, node_id, name, params)
        self.fires = 0
        self.timer = self.create_timer(
            SimDuration(params.get_int("period_ns")),
            self._on_timer,
            params.get_int("callback_id"),
        )
        self.pub = self.create_publisher(params.get_str("topic")) if "topic" in params else None

    def _on_timer(self, ctx):
        self.fires += 1
        if self.pub is not None:
            ctx.publish(self.pub, self.fires)


class ListenerNode(Node):
    """Records every delivery as (value, receive_time_ns, publish_time_ns)."""

    def __init__(self, graph, node_id, name, params):
        super().__init__(graph, node_id, name, params)
        self.received = []
        self.sub = self.create_subscription(
            params.get_str("topic"),
            self._on_message,
            params.get_int("callback_id"),
            depth=params.get_int("depth", 1),
        )

    def _on_message(self, ctx, payload):
        self.received.append((payload.value, ctx.sim_time.ns, payload.publish_time.ns))


class ForwardNode(Node):
    """Republishes everything it hears onto another topic."""

    def __init__(self, graph, node_id, name, params):
        super().__init__(graph, node_id, name, params)
        self.pub = self.create_publisher(params.get_str("pub_topic"))
        self.sub = self.create_subscription(
            params.get_str("sub_topic"),
            self._on_message,
            params.get_int("callback_id"),
            depth=params.get_int("depth", 1),
        )

    def _on_message(self, ctx, payload):
        ctx.publish(self.pub, payload.value)


class AnswerNode(Node):
    """Service that answers request XOR a fixed constant."""

    def __init__(self, graph, node_id, name, params):
        super().__init__(graph, node_id, name, params)
        self.requests = []
        self._xor = params.get_int("xor", 0xFF)
        self.service = self.create_service(
            params.get_str("service"), self._on_request, params.get_int("callback_id")
        )

    def _on_request(self, ctx, request):
        self.requests.append((request, ctx.sim_time.ns))
        return request ^ self._xor


class CallerNode(Node):
    """Timer that sends its fire count to a service; records responses."""

    def __init__(self, graph, node_id, name, params):
        super().__init__(graph, node_id, name, params)
        self.fires = 0
        self.responses = []
        self._calls_per_fire = params.get_int("calls_per_fire", 1)
        self.timer = self.create_timer(
            SimDuration(params.get_int("period_ns")),
            self._on_timer,
            params.get_int("timer_callback_id"),
        )
        self.client = self.create_client(
            params.get_str("service"), self._on_response, params.get_int("response_callback_id")
        )

    def _on_timer(self, ctx):
        self.fires += 1
        for _ in range(self._calls_per_fire):
            ctx.call(self.client, self.fires)

    def _on_response(self, ctx, response):
        self.responses.append((response, ctx.sim_time.ns))


class IdleNode(Node):
    """No entities at all; a registered node that can never do anything."""


def make_factory(**types) -> NodeFactory:
    factory = NodeFactory()
    for type_name, constructor in types.items():
        factory.register(type_name, constructor)
    return factory


def build_kernel(
    nodes,
    factory_types,
    *,
    start_time_ns=0,
    duration_ns=None,
    max_events=None,
    inverted_tiebreak=False,
    **job_kwargs,
) -> Kernel:
    """Assemble a kernel from (type, name, params) triples and a type map."""
    specs = tuple(NodeSpec(type_name, name, Parameters(params)) for type_name, name, params in nodes)
    job = JobSpec(
        start_time_ns=start_time_ns,
        nodes=specs,
        duration=None if duration_ns is None else SimDuration(duration_ns),
        max_events=max_events,
        **job_kwargs,
    )
    return Kernel(job, make_factory(**factory_types), inverted_tiebreak=inverted_tiebreak)


def kinds_of(kernel):
    """The executed trace as (relative_time_ns, node_name, kind_tag) triples."""
    start = kernel.job.start_time_ns
    return [
        (rec.sim_time_ns - start, rec.node_name, rec.event_kind.value)
        for rec in kernel.trace.records
    ]


# -- acceptance criterion verdict collection

_verdicts: list[str] = []


def verdict(criterion: str, ok: bool, detail: str = "") -> None:
    """Print one pass/fail line per acceptance criterion, then assert it."""
    line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'}"
    if detail and not ok:
        line += f" ({detail})"
    _verdicts.append(line)
    print(line)
    assert ok, f"{criterion}: {detail or 'criterion not met'}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for line in _verdicts:
            terminalreporter.write_line(line)
