"""Node-graph model: nodes, their callback entities, and the wiring tables.

A graph is a flat registry.  Nodes get dense ids in registration order, and
every entity (timer, subscription, publisher, service, client) gets a dense
registration index in creation order, global across all nodes.  Those indices
are the only identity the kernel uses for ordering decisions, which is what
makes runs reproducible: build the same graph, get the same indices.

Entities can only be created while their node's constructor runs.  The graph
is fixed afterwards.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Union

from .errors import DetsimError, ValidationError
from .timebase import SimDuration, SimTime, check_u64


class UnknownNodeType(ValidationError):
    """A node entry names a type the factory does not know."""


class DuplicateNodeName(ValidationError):
    """Two nodes share a name."""


class DuplicateServiceName(ValidationError):
    """Two services share a name."""


class UnknownService(ValidationError):
    """A client references a service that no node offers."""


class DuplicateCallbackId(ValidationError):
    """Two callbacks share an id; traces could not tell them apart."""


class ParameterError(ValidationError):
    """A node parameter is missing, mistyped, or not understood."""


# Node names appear verbatim in trace lines and in delay keys, so keep them to
# a safe charset.  "/" is reserved as the delay-key separator.  \Z, not $:
# a trailing newline must not slip through.
_NAME_RE = re.compile(r"^[A-Za-z0-9_.\-]+\Z")

ParamValue = Union[str, int, float, bool]

_MISSING = object()


class Parameters(Mapping):
    """Read-only string-keyed map of scalar node parameters."""

    __slots__ = ("_values",)

    def __init__(self, values: Mapping[str, ParamValue] | None = None) -> None:
        items = dict(values) if values else {}
        for key, value in items.items():
            if not isinstance(key, str):
                raise ParameterError(f"parameter key {key!r} is not a string")
            if isinstance(value, bool):
                continue
            if not isinstance(value, (str, int, float)):
                raise ParameterError(
                    f"parameter {key!r} has unsupported type {type(value).__name__}"
                )
        self._values = items

    def __getitem__(self, key: str) -> ParamValue:
        return self._values[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __repr__(self) -> str:
        return f"Parameters({self._values!r})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Parameters):
            return NotImplemented
        return self._values == other._values

    __hash__ = None  # type: ignore[assignment]

    def get_int(self, key: str, default=_MISSING) -> int:
        value = self._values.get(key, default)
        if value is _MISSING:
            raise ParameterError(f"missing required parameter {key!r}")
        if not isinstance(value, int) or isinstance(value, bool):
            raise ParameterError(f"parameter {key!r} must be an int, got {value!r}")
        return value

    def get_str(self, key: str, default=_MISSING) -> str:
        value = self._values.get(key, default)
        if value is _MISSING:
            raise ParameterError(f"missing required parameter {key!r}")
        if not isinstance(value, str):
            raise ParameterError(f"parameter {key!r} must be a string, got {value!r}")
        return value

    def get_bool(self, key: str, default=_MISSING) -> bool:
        value = self._values.get(key, default)
        if value is _MISSING:
            raise ParameterError(f"missing required parameter {key!r}")
        if not isinstance(value, bool):
            raise ParameterError(f"parameter {key!r} must be a bool, got {value!r}")
        return value


@dataclass(frozen=True)
class Payload:
    """One published message: a 64-bit value plus its provenance."""

    value: int
    origin: int  # node id of the publishing node
    publish_time: SimTime  # when publish was called, not when delivered


@dataclass
class TimerEntity:
    owner: int
    reg_index: int
    callback_id: int
    period: SimDuration
    next_deadline: SimTime
    callback: Callable[["CallbackContext"], None]


@dataclass
class SubscriptionEntity:
    owner: int
    reg_index: int
    callback_id: int
    topic: str
    depth: int
    callback: Callable[["CallbackContext", Payload], None]
    buffer: deque = field(default_factory=deque)
    received: int = 0
    dropped: int = 0


@dataclass
class PublisherEntity:
    owner: int
    reg_index: int
    topic: str
    delay: SimDuration = SimDuration(0)


@dataclass
class ServiceEntity:
    owner: int
    reg_index: int
    callback_id: int
    service: str
    callback: Callable[["CallbackContext", int], int]


@dataclass
class ClientEntity:
    owner: int
    reg_index: int
    callback_id: int
    service: str
    callback: Callable[["CallbackContext", int], None]


Entity = Union[TimerEntity, SubscriptionEntity, PublisherEntity, ServiceEntity, ClientEntity]


class Node:
    """A named bundle of entities with private state.

    Subclasses create their entities in ``__init__`` (after calling super)
    and implement behavior purely through the registered callbacks.  A node
    that wants its state recorded in the trace overrides ``state_word``.
    """

    def __init__(self, graph: Graph, node_id: int, name: str, params: Parameters) -> None:
        if graph._constructing is not None:
            raise DetsimError("nodes cannot be constructed from inside another node")
        graph._constructing = self
        self._graph = graph
        self.node_id = node_id
        self.name = name
        self.params = params

    @property
    def state_word(self) -> int:
        """64-bit state snapshot written to each trace record; 0 by default."""
        return 0

    # -- entity registration, only legal during construction

    def create_timer(
        self,
        period: SimDuration,
        callback: Callable[["CallbackContext"], None],
        callback_id: int,
    ) -> TimerEntity:
        if period.ns == 0:
            raise ParameterError(f"node {self.name!r}: timer period must be positive")
        timer = TimerEntity(
            owner=self.node_id,
            reg_index=self._graph._next_reg_index(self),
            callback_id=check_u64(callback_id, "callback_id"),
            period=period,
            next_deadline=SimTime(period.ns),
            callback=callback,
        )
        self._graph._add_entity(timer)
        return timer

    def create_subscription(
        self,
        topic: str,
        callback: Callable[["CallbackContext", Payload], None],
        callback_id: int,
        depth: int = 1,
    ) -> SubscriptionEntity:
        if depth < 1:
            raise ParameterError(f"node {self.name!r}: depth must be at least 1")
        sub = SubscriptionEntity(
            owner=self.node_id,
            reg_index=self._graph._next_reg_index(self),
            callback_id=check_u64(callback_id, "callback_id"),
            topic=_checked_label(topic, "topic"),
            depth=depth,
            callback=callback,
        )
        self._graph._add_entity(sub)
        return sub

    def create_publisher(self, topic: str) -> PublisherEntity:
        pub = PublisherEntity(
            owner=self.node_id,
            reg_index=self._graph._next_reg_index(self),
            topic=_checked_label(topic, "topic"),
        )
        self._graph._add_entity(pub)
        return pub

    def create_service(
        self,
        service: str,
        handler: Callable[["CallbackContext", int], int],
        callback_id: int,
    ) -> ServiceEntity:
        srv = ServiceEntity(
            owner=self.node_id,
            reg_index=self._graph._next_reg_index(self),
            callback_id=check_u64(callback_id, "callback_id"),
            service=_checked_label(service, "service"),
            callback=handler,
        )
        self._graph._add_entity(srv)
        return srv

    def create_client(
        self,
        service: str,
        response_callback: Callable[["CallbackContext", int], None],
        callback_id: int,
    ) -> ClientEntity:
        client = ClientEntity(
            owner=self.node_id,
            reg_index=self._graph._next_reg_index(self),
            callback_id=check_u64(callback_id, "callback_id"),
            service=_checked_label(service, "service"),
            callback=response_callback,
        )
        self._graph._add_entity(client)
        return client


def _checked_label(value: str, what: str) -> str:
    if not isinstance(value, str) or not value:
        raise ParameterError(f"{what} must be a non-empty string, got {value!r}")
    return value


NodeConstructor = Callable[["Graph", int, str, Parameters], Node]


class NodeFactory:
    """Registry mapping node type names to constructors."""

    def __init__(self) -> None:
        self._types: dict[str, NodeConstructor] = {}

    def register(self, type_name: str, constructor: NodeConstructor) -> None:
        if type_name in self._types:
            raise ValidationError(f"node type {type_name!r} registered twice")
        self._types[type_name] = constructor

    def __contains__(self, type_name: str) -> bool:
        return type_name in self._types

    def type_names(self) -> list[str]:
        return list(self._types)

    def create(self, graph: Graph, type_name: str, node_id: int, name: str, params: Parameters) -> Node:
        try:
            constructor = self._types[type_name]
        except KeyError:
            known = ", ".join(sorted(self._types)) or "none"
            raise UnknownNodeType(
                f"unknown node type {type_name!r} (known: {known})"
            ) from None
        return constructor(graph, node_id, name, params)


class Graph:
    """All nodes and entities of one simulation instance."""

    def __init__(self, factory: NodeFactory) -> None:
        self.factory = factory
        self.nodes: list[Node] = []
        self.entities: list[Entity] = []
        self.timers: list[TimerEntity] = []
        self.services: dict[str, int] = {}  # service name -> entity reg index
        self._topic_subs: dict[str, list[int]] = {}  # topic -> sub reg indices
        self._node_ids: dict[str, int] = {}
        self._constructing: Node | None = None

    def register_node(self, type_name: str, name: str, params: Parameters | None = None) -> Node:
        """Construct a node, giving it the next dense node id.

        A failed registration may leave partially created entities behind;
        callers are expected to discard the graph and build a fresh one.
        """
        if not isinstance(name, str) or not _NAME_RE.match(name):
            raise ValidationError(f"bad node name {name!r}")
        if name in self._node_ids:
            raise DuplicateNodeName(f"node name {name!r} registered twice")
        node_id = len(self.nodes)
        try:
            node = self.factory.create(self, type_name, node_id, name, params or Parameters())
        finally:
            self._constructing = None
        if len(self.nodes) != node_id:
            raise DetsimError(f"node {name!r} construction corrupted the registry")
        self._node_ids[name] = node_id
        self.nodes.append(node)
        return node

    def node_by_name(self, name: str) -> Node:
        return self.nodes[self._node_ids[name]]

    def has_node(self, name: str) -> bool:
        return name in self._node_ids

    def subscriptions_on(self, topic: str) -> list[int]:
        """Subscription reg indices for a topic, ascending by construction."""
        return self._topic_subs.get(topic, [])

    def publishers_of(self, node: Node, topic: str) -> list[PublisherEntity]:
        return [
            entity
            for entity in self.entities
            if isinstance(entity, PublisherEntity)
            and entity.owner == node.node_id
            and entity.topic == topic
        ]

    def validate(self) -> None:
        """Check cross-node references and callback id uniqueness."""
        seen: dict[int, int] = {}
        for entity in self.entities:
            callback_id = getattr(entity, "callback_id", None)
            if callback_id is None:
                continue
            if callback_id in seen:
                raise DuplicateCallbackId(
                    f"callback id {callback_id:#x} used by entities "
                    f"{seen[callback_id]} and {entity.reg_index}"
                )
            seen[callback_id] = entity.reg_index
        for entity in self.entities:
            if isinstance(entity, ClientEntity) and entity.service not in self.services:
                owner = self.nodes[entity.owner].name
                raise UnknownService(
                    f"node {owner!r} is a client of unknown service {entity.service!r}"
                )

    # -- hooks used by Node.create_* during construction

    def _next_reg_index(self, node: Node) -> int:
        if self._constructing is not node:
            # register_node has not handed construction to this node yet, or
            # construction already finished: reject late entity creation.
            raise DetsimError(
                f"node {node.name!r} may only create entities during construction"
            )
        return len(self.entities)

    def _add_entity(self, entity: Entity) -> None:
        self.entities.append(entity)
        if isinstance(entity, TimerEntity):
            self.timers.append(entity)
        elif isinstance(entity, SubscriptionEntity):
            self._topic_subs.setdefault(entity.topic, []).append(entity.reg_index)
        elif isinstance(entity, ServiceEntity):
            if entity.service in self.services:
                raise DuplicateServiceName(f"service {entity.service!r} offered twice")
            self.services[entity.service] = entity.reg_index
