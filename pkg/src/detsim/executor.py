"""Deterministic event loop: FIFO drain, adaptive time hops, delayed release.

The kernel alternates between two phases.  While the ready queue holds events
it executes them strictly first-in-first-out without touching the clock.  Once
the queue is empty it finds the earliest pending activation (a timer deadline
or a delayed publication coming due), jumps the clock straight there, releases
everything due at that instant, and drains again.  Simulated time therefore
only moves between fully drained queue states, and never to an instant where
nothing happens.

Ordering is defined exactly, including ties:

* Ready events execute in enqueue order, period.
* When several activations share one due instant, delayed publications are
  released before timer fires; publications in the order their publish calls
  happened, timers in entity registration order.

Wall-clock effects (the optional callback jitter sleeps) are kept strictly
outside simulated state, which is why jittered runs reproduce jitter-free
traces bit for bit.
"""

from __future__ import annotations

import heapq
import random
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

from ._version import __version__
from .errors import DetsimError, ValidationError
from .graph import (
    ClientEntity,
    Graph,
    Node,
    NodeFactory,
    Parameters,
    Payload,
    PublisherEntity,
    SubscriptionEntity,
    TimerEntity,
)
from .timebase import U64_MAX, SimClock, SimDuration, SimTime, check_u64
from .trace import EventKind, TraceLog, TraceRecord

DEFAULT_LIVELOCK_THRESHOLD = 1_000_000


class LivelockDetected(DetsimError):
    """A single drain exceeded the execution threshold without emptying."""


class StarvedClock(DetsimError):
    """No pending activation exists but the job has no way to finish."""


@dataclass(frozen=True)
class ReadyEvent:
    """One queued callback execution.  ``seq`` is the global enqueue counter."""

    seq: int
    kind: EventKind
    target: int  # entity reg index the event executes on
    callback_id: int
    word: int = 0  # request or response payload for service traffic
    reply_to: int | None = None  # client entity awaiting the response


@dataclass(frozen=True)
class DelayedPublication:
    """A publish call parked until its due instant."""

    due: SimTime
    schedule_seq: int
    publisher: int  # publisher entity reg index
    value: int


@dataclass(frozen=True)
class NodeSpec:
    """Recipe for one node: type name, instance name, parameters."""

    type_name: str
    name: str
    params: Parameters = Parameters()


@dataclass(frozen=True)
class JobSpec:
    """Everything that defines one run.

    A job finishes at the first drain boundary (queue empty, clock about to
    hop) where the clock has reached ``duration`` or, if ``max_events`` is
    set, at least that many events have executed.  At least one of the two
    must be present for an eternally active graph to terminate.  ``delays``
    maps ``"<node>/<topic>"`` keys to a publication delay in nanoseconds
    applied to that node's publishers on that topic.
    """

    start_time_ns: int
    nodes: tuple[NodeSpec, ...]
    duration: SimDuration | None = None
    max_events: int | None = None
    livelock_threshold: int = DEFAULT_LIVELOCK_THRESHOLD
    jitter_max_s: float = 0.0
    delays: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        try:
            check_u64(self.start_time_ns, "start_time_ns")
        except (TypeError, DetsimError) as exc:
            raise ValidationError(str(exc)) from None
        if self.duration is not None and self.start_time_ns + self.duration.ns > U64_MAX:
            raise ValidationError("start_time_ns + duration exceeds the u64 range")
        if self.duration is None and self.max_events is None:
            raise ValidationError("a job needs a duration or max_events to ever finish")
        if self.max_events is not None and self.max_events < 1:
            raise ValidationError("max_events must be positive")
        if self.livelock_threshold < 1:
            raise ValidationError("livelock_threshold must be positive")
        if not self.jitter_max_s >= 0.0:
            raise ValidationError("jitter_max_s must be non-negative")


@dataclass(frozen=True)
class JobResult:
    finished: bool
    exit_code: int
    final_sim_time: SimTime
    executed_events: int
    trace: TraceLog


class CallbackContext:
    """Kernel facade handed to a callback for the duration of one execution."""

    __slots__ = ("_kernel", "_entity")

    def __init__(self, kernel: Kernel, entity) -> None:
        self._kernel = kernel
        self._entity = entity

    @property
    def sim_time(self) -> SimTime:
        return self._kernel.clock.now

    @property
    def now_ns(self) -> int:
        """Absolute simulated time: job start time plus the clock offset."""
        return self._kernel.job.start_time_ns + self._kernel.clock.now.ns

    @property
    def callback_id(self) -> int:
        return self._entity.callback_id

    def publish(self, publisher: PublisherEntity, value: int) -> None:
        self._kernel.publish(publisher, value)

    def call(self, client: ClientEntity, request: int) -> None:
        self._kernel.call_service(client, request)


class Kernel:
    """One simulation instance: graph, clock, queues, and the trace.

    Kernels are single-use.  Build one per run, call ``run`` once, read the
    result.  ``factory`` defaults to the built-in benchmark node types.
    """

    def __init__(
        self,
        job: JobSpec,
        factory: NodeFactory | None = None,
        *,
        inverted_tiebreak: bool = False,
    ) -> None:
        if factory is None:
            from .benchmark import default_factory

            factory = default_factory()
        self.job = job
        self.graph = Graph(factory)
        for spec in job.nodes:
            self.graph.register_node(spec.type_name, spec.name, spec.params)
        self._attach_delays(job.delays)
        self.graph.validate()
        self.clock = SimClock()
        self.trace = TraceLog(tool_version=__version__, start_time_ns=job.start_time_ns)
        self._queue: deque[ReadyEvent] = deque()
        self._event_seq = 0
        self._delayed: list[tuple[int, int, DelayedPublication]] = []
        self._schedule_seq = 0
        self._inverted_tiebreak = inverted_tiebreak
        # Jitter is wall-clock noise only; a non-reproducible entropy source
        # is deliberate here, and it must never leak into simulated state.
        self._jitter_rng = random.SystemRandom() if job.jitter_max_s > 0 else None
        self.executed_events = 0
        self.finished = False
        self._ran = False

    def _attach_delays(self, delays: Mapping[str, int]) -> None:
        for key in delays:
            delay_ns = delays[key]
            node_name, sep, topic = key.partition("/")
            if not sep:
                raise ValidationError(f"delay key {key!r} is not of the form node/topic")
            if not self.graph.has_node(node_name):
                raise ValidationError(f"delay key {key!r} names unknown node {node_name!r}")
            node = self.graph.node_by_name(node_name)
            publishers = self.graph.publishers_of(node, topic)
            if not publishers:
                raise ValidationError(
                    f"delay key {key!r}: node {node_name!r} has no publisher on {topic!r}"
                )
            for publisher in publishers:
                publisher.delay = SimDuration(delay_ns)

    # -- operations available to callbacks

    def publish(self, publisher: PublisherEntity, value: int) -> None:
        """Deliver ``value`` to the topic's subscribers, honoring the delay.

        With a zero delay the fan-out happens immediately: one ready event per
        subscription, in subscription registration order.  With a non-zero
        delay the publication is parked and fans out when its instant arrives.
        """
        check_u64(value, "published value")
        if publisher.delay.ns == 0:
            self._fan_out(publisher, value, self.clock.now)
        else:
            due = self.clock.now + publisher.delay
            pub = DelayedPublication(due, self._schedule_seq, publisher.reg_index, value)
            heapq.heappush(self._delayed, (due.ns, pub.schedule_seq, pub))
            self._schedule_seq += 1

    def call_service(self, client: ClientEntity, request: int) -> None:
        """Enqueue a request for the service the client is bound to."""
        check_u64(request, "service request")
        service_index = self.graph.services[client.service]
        service = self.graph.entities[service_index]
        self._enqueue(
            EventKind.SERVICE_REQUEST,
            service_index,
            service.callback_id,
            word=request,
            reply_to=client.reg_index,
        )

    def _fan_out(self, publisher: PublisherEntity, value: int, publish_time: SimTime) -> None:
        payload = Payload(value=value, origin=publisher.owner, publish_time=publish_time)
        for sub_index in self.graph.subscriptions_on(publisher.topic):
            sub = self.graph.entities[sub_index]
            if len(sub.buffer) >= sub.depth:
                sub.buffer.popleft()
                sub.dropped += 1
            sub.buffer.append(payload)
            self._enqueue(EventKind.TOPIC_DELIVERY, sub_index, sub.callback_id)

    def _enqueue(self, kind: EventKind, target: int, callback_id: int, word: int = 0, reply_to: int | None = None) -> None:
        self._queue.append(ReadyEvent(self._event_seq, kind, target, callback_id, word, reply_to))
        self._event_seq += 1

    # -- the three loop phases

    def drain(self) -> int:
        """Execute ready events FIFO until none remain; returns the count.

        Raises LivelockDetected once a single drain has executed
        ``livelock_threshold`` events with the queue still non-empty, which
        is the signature of a self-feeding callback cycle at frozen time.
        """
        executed = 0
        while self._queue:
            if executed >= self.job.livelock_threshold:
                raise LivelockDetected(
                    f"{executed} events executed at sim time {self.clock.now.ns} ns "
                    f"without draining the queue"
                )
            event = self._queue.popleft()
            self._execute(event)
            executed += 1
            self.executed_events += 1
        return executed

    def next_activation_time(self) -> SimTime | None:
        """Earliest pending activation, or None when nothing is scheduled."""
        best: int | None = None
        for timer in self.graph.timers:
            if best is None or timer.next_deadline.ns < best:
                best = timer.next_deadline.ns
        if self._delayed and (best is None or self._delayed[0][0] < best):
            best = self._delayed[0][0]
        return None if best is None else SimTime(best)

    def release_due(self, now: SimTime) -> None:
        """Turn every activation due exactly at ``now`` into ready events.

        Default order at one instant: delayed publications first (in schedule
        order), then timers (in registration order).  The inverted tie-break
        exists so tests can show that the rule is load-bearing: it releases
        timers first and walks both groups in reverse.
        """
        due_pubs: list[DelayedPublication] = []
        while self._delayed and self._delayed[0][0] == now.ns:
            due_pubs.append(heapq.heappop(self._delayed)[2])
        due_timers = [timer for timer in self.graph.timers if timer.next_deadline == now]
        if self._inverted_tiebreak:
            for timer in reversed(due_timers):
                self._fire_timer(timer)
            for pub in reversed(due_pubs):
                self._release(pub)
        else:
            for pub in due_pubs:
                self._release(pub)
            for timer in due_timers:
                self._fire_timer(timer)

    def _fire_timer(self, timer: TimerEntity) -> None:
        self._enqueue(EventKind.TIMER_FIRE, timer.reg_index, timer.callback_id)
        timer.next_deadline = timer.next_deadline + timer.period

    def _release(self, pub: DelayedPublication) -> None:
        publisher = self.graph.entities[pub.publisher]
        self._fan_out(publisher, pub.value, publish_time=pub.due - publisher.delay)

    # -- event execution

    def _execute(self, event: ReadyEvent) -> None:
        entity = self.graph.entities[event.target]
        node = self.graph.nodes[entity.owner]
        ctx = CallbackContext(self, entity)
        input_word = 0
        no_op = False
        if event.kind is EventKind.TIMER_FIRE:
            self.inject_jitter()
            entity.callback(ctx)
        elif event.kind is EventKind.TOPIC_DELIVERY:
            if entity.buffer:
                payload = entity.buffer.popleft()
                entity.received += 1
                input_word = payload.value
                self.inject_jitter()
                entity.callback(ctx, payload)
            else:
                # The buffered payload was evicted by a later publish before
                # this delivery ran.  Record the event, run nothing.
                no_op = True
        elif event.kind is EventKind.SERVICE_REQUEST:
            input_word = event.word
            self.inject_jitter()
            response = entity.callback(ctx, event.word)
            check_u64(response, "service response")
            client = self.graph.entities[event.reply_to]
            self._enqueue(
                EventKind.CLIENT_RESPONSE, event.reply_to, client.callback_id, word=response
            )
        else:  # CLIENT_RESPONSE
            input_word = event.word
            self.inject_jitter()
            entity.callback(ctx, event.word)
        self.trace.record(
            TraceRecord(
                seq=len(self.trace.records),
                sim_time_ns=self.job.start_time_ns + self.clock.now.ns,
                node_name=node.name,
                event_kind=event.kind,
                entity_reg_index=event.target,
                callback_id=event.callback_id,
                input_word=input_word,
                state_after=node.state_word,
                no_op_delivery=no_op,
            )
        )

    def inject_jitter(self) -> None:
        """Sleep a random wall-clock amount before a callback body runs.

        The delay is drawn from a non-deterministic source on purpose: it
        perturbs real scheduling without touching the simulated clock, the
        queue, or any state the trace depends on.  Runs with jitter enabled
        must therefore produce byte-identical traces.
        """
        if self._jitter_rng is not None:
            time.sleep(self._jitter_rng.uniform(0.0, self.job.jitter_max_s))

    # -- the run loop

    def _job_complete(self) -> bool:
        if self.job.duration is not None and self.clock.now.ns >= self.job.duration.ns:
            return True
        if self.job.max_events is not None and self.executed_events >= self.job.max_events:
            return True
        return False

    def run(self) -> JobResult:
        """Run the job to completion and return the result.

        Loop: drain the queue, stop if the job is complete, hop the clock to
        the next activation, release it, drain again.  A job with no duration
        bound raises StarvedClock when the graph falls silent, because no
        finish condition could ever trigger.
        """
        if self._ran:
            raise DetsimError("kernel instances are single-use; build a new one")
        self._ran = True
        self.drain()
        while not self._job_complete():
            target = self.next_activation_time()
            if target is None:
                if self.job.duration is None:
                    raise StarvedClock(
                        "no pending activation and no duration bound: "
                        "the job can never finish"
                    )
                break
            if self.job.duration is not None and target.ns > self.job.duration.ns:
                break
            self.clock.advance(target)
            self.release_due(target)
            self.drain()
        self.finished = True
        return JobResult(
            finished=True,
            exit_code=0,
            final_sim_time=self.clock.now,
            executed_events=self.executed_events,
            trace=self.trace,
        )
