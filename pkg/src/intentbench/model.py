"""CFS/RFS data model: product specs, service orders, and per-NF resource configs.

A ServiceOrder is the customer-facing side (CFS); a ResourceConfig is the
resource-facing side (RFS) the orchestrator would consume, covering the three
RAN functions (RU, DU, CU) and six core functions (UPF, AMF, PCF, SMF, AUSF,
NSSF) plus the slice envelope.
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from datetime import datetime
from enum import Enum
from typing import Iterator, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic import ValidationError as PydanticValidationError

from .errors import SchemaError

Scalar = Union[bool, int, float, str]

RAN_NFS = ("RU", "DU", "CU")
CORE_NFS = ("UPF", "AMF", "PCF", "SMF", "AUSF", "NSSF")

#: Closed intent vocabulary used when a catalog header does not declare one.
DEFAULT_INTENT_VOCABULARY = (
    "slice_type",
    "latency_ms",
    "throughput_mbps",
    "max_users",
    "reliability_pct",
    "region",
)


class SliceCategory(str, Enum):
    EMBB = "eMBB"
    URLLC = "URLLC"


class UserExpertise(str, Enum):
    EXPERT = "expert"
    NON_EXPERT = "non-expert"


def _check_mapping_keys(keys: list[str], *, where: str) -> None:
    """Keys must be dot-free and case-insensitively unique so flattening stays injective."""
    seen: dict[str, str] = {}
    for key in keys:
        if "." in key or not key.strip():
            raise ValueError(f"{where}: key {key!r} must be non-empty and contain no '.'")
        low = key.lower()
        if low in seen:
            raise ValueError(f"{where}: keys {seen[low]!r} and {key!r} collide case-insensitively")
        seen[low] = key


class ProductSpec(BaseModel):
    """One intent-driven product in the catalog, with its technical parameters."""

    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    name: str = Field(min_length=1)
    category: SliceCategory
    region: str = Field(min_length=1)
    latency_ms: float = Field(gt=0)
    throughput_mbps: float = Field(gt=0)
    max_users: int = Field(gt=0)
    reliability_pct: float = Field(gt=0, le=100)
    created_at: datetime
    user_expertise: UserExpertise


class ServiceOrder(BaseModel):
    """A CFS: one placed order referencing a product, with its technical intents."""

    model_config = ConfigDict(frozen=True)

    order_id: str = Field(min_length=1)
    product_id: str = Field(min_length=1)
    intents: dict[str, Scalar]
    metadata: dict[str, Scalar] = Field(default_factory=dict)

    @field_validator("intents")
    @classmethod
    def _intents_non_empty(cls, value: dict[str, Scalar]) -> dict[str, Scalar]:
        if not value:
            raise ValueError("intents must be non-empty")
        _check_mapping_keys(list(value), where="intents")
        return value


class NFConfig(BaseModel):
    """Cloud resource sizing for one network function."""

    cpu_cores: float = Field(gt=0)
    ram_mb: int = Field(gt=0)
    storage_gb: int = Field(gt=0)
    replicas: int = Field(gt=0)
    extra: dict[str, Scalar] = Field(default_factory=dict)

    @field_validator("extra")
    @classmethod
    def _check_extra(cls, value: dict[str, Scalar]) -> dict[str, Scalar]:
        _check_mapping_keys(list(value), where="extra")
        return value


class SliceConfig(BaseModel):
    """Slice envelope: SST code, per-segment latency budget, guaranteed throughput."""

    sst: int = Field(ge=0)
    latency_budget_ms: dict[str, float]
    guaranteed_throughput_mbps: float = Field(gt=0)

    @field_validator("latency_budget_ms")
    @classmethod
    def _check_budget(cls, value: dict[str, float]) -> dict[str, float]:
        normalized = {str(k).lower(): v for k, v in value.items()}
        if len(normalized) != len(value):
            raise ValueError("latency_budget_ms: segment names collide case-insensitively")
        _check_mapping_keys(list(normalized), where="latency_budget_ms")
        if not normalized:
            raise ValueError("latency_budget_ms must declare at least one segment")
        for segment, budget in normalized.items():
            if budget <= 0:
                raise ValueError(f"latency_budget_ms.{segment} must be positive")
        return normalized


def _normalize_nf_mapping(value: dict, expected: tuple[str, ...], section: str) -> dict:
    normalized = {}
    for key, nf in value.items():
        canon = str(key).upper()
        if canon in normalized:
            raise ValueError(f"{section}: duplicate network function {canon!r}")
        normalized[canon] = nf
    missing = [nf for nf in expected if nf not in normalized]
    unknown = [nf for nf in normalized if nf not in expected]
    if missing:
        raise ValueError(f"{section}: missing network function(s) {', '.join(missing)}")
    if unknown:
        raise ValueError(f"{section}: unknown network function(s) {', '.join(unknown)}")
    return {nf: normalized[nf] for nf in expected}


class ResourceConfig(BaseModel):
    """An RFS: full per-NF configuration for one order.

    NF names are accepted in any case and normalized to their canonical
    upper-case form; a valid config carries all nine network functions.
    """

    order_ref: str = Field(min_length=1)
    ran: dict[str, NFConfig]
    core: dict[str, NFConfig]
    slice: SliceConfig

    @field_validator("ran", mode="before")
    @classmethod
    def _normalize_ran(cls, value: dict) -> dict:
        if not isinstance(value, Mapping):
            raise ValueError("ran must be a mapping of NF name to config")
        return _normalize_nf_mapping(dict(value), RAN_NFS, "ran")

    @field_validator("core", mode="before")
    @classmethod
    def _normalize_core(cls, value: dict) -> dict:
        if not isinstance(value, Mapping):
            raise ValueError("core must be a mapping of NF name to config")
        return _normalize_nf_mapping(dict(value), CORE_NFS, "core")


class ReferenceSet(BaseModel):
    """Expert-designed target RFS per order_id."""

    model_config = ConfigDict(frozen=True)

    pairs: dict[str, ResourceConfig]

    def reference_for(self, order_id: str) -> ResourceConfig:
        if order_id not in self.pairs:
            raise SchemaError(f"no reference for order {order_id!r}", doc_id=order_id)
        return self.pairs[order_id]


class Catalog(BaseModel):
    """Immutable product catalog plus the orders placed against it."""

    model_config = ConfigDict(frozen=True)

    products: list[ProductSpec]
    orders: list[ServiceOrder]
    intent_vocabulary: tuple[str, ...] = DEFAULT_INTENT_VOCABULARY

    def __len__(self) -> int:
        return len(self.orders)

    def product_by_id(self, product_id: str) -> ProductSpec:
        for product in self.products:
            if product.id == product_id:
                return product
        raise SchemaError(f"unknown product {product_id!r}", doc_id=product_id)

    def order_by_id(self, order_id: str) -> ServiceOrder:
        for order in self.orders:
            if order.order_id == order_id:
                return order
        raise SchemaError(f"unknown order {order_id!r}", doc_id=order_id)

    def product_for_order(self, order_id: str) -> ProductSpec:
        return self.product_by_id(self.order_by_id(order_id).product_id)


# --- flattening -------------------------------------------------------------

def iter_leaves(node: Mapping, prefix: tuple[str, ...] = ()) -> Iterator[tuple[tuple[str, ...], Scalar]]:
    """Yield (path, value) for every scalar leaf of a nested mapping."""
    for key, value in node.items():
        path = prefix + (str(key),)
        if isinstance(value, Mapping):
            yield from iter_leaves(value, path)
        elif isinstance(value, (bool, int, float, str)) or value is None:
            yield path, value
        else:
            raise SchemaError(f"non-scalar leaf at {'.'.join(path)}: {type(value).__name__}")


def flatten_mapping(node: Mapping) -> dict[str, Scalar]:
    """Canonical flat view of a nested mapping: lower-cased dotted paths, sorted.

    Values keep their case; only keys are canonicalized. Raises if two leaves
    would land on the same canonical path.
    """
    flat: dict[str, Scalar] = {}
    for path, value in iter_leaves(node):
        key = ".".join(segment.lower() for segment in path)
        if key in flat:
            raise SchemaError(f"path collision at {key!r}")
        flat[key] = value
    return dict(sorted(flat.items()))


def flatten_config(config: ResourceConfig | Mapping) -> dict[str, Scalar]:
    """Flatten an RFS (model or plain mapping) to its canonical path -> value map."""
    if isinstance(config, ResourceConfig):
        return flatten_mapping(config.model_dump(mode="json"))
    return flatten_mapping(config)


def unflatten(flat: Mapping[str, Scalar]) -> dict:
    """Rebuild a nested mapping from dotted paths (inverse of flatten on leaves)."""
    root: dict = {}
    for key, value in flat.items():
        node = root
        segments = key.split(".")
        for segment in segments[:-1]:
            node = node.setdefault(segment, {})
            if not isinstance(node, Mapping):
                raise SchemaError(f"path {key!r} descends through a scalar")
        node[segments[-1]] = value
    return root


def set_leaf(node: dict, path: tuple[str, ...], value: Scalar) -> None:
    """Replace the leaf at *path* inside a nested dict, in place."""
    for segment in path[:-1]:
        node = node[segment]
    node[path[-1]] = value


# --- canonical serializations ----------------------------------------------

def serialize_order(order: ServiceOrder) -> str:
    """Deterministic JSON rendering of a service order (the Q side of prompts)."""
    return json.dumps(order.model_dump(mode="json"), indent=2)


def serialize_config(config: ResourceConfig) -> str:
    """Deterministic YAML rendering of an RFS (the A side of prompts and references)."""
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=True, default_flow_style=False)


def parse_config(data: Mapping) -> ResourceConfig:
    """Validate a plain mapping as a ResourceConfig, re-raising as SchemaError."""
    try:
        return ResourceConfig.model_validate(data)
    except PydanticValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(loc) for loc in first["loc"]) or None
        raise SchemaError(f"invalid resource config: {field}: {first['msg']}", field=field) from exc


def validate_config_for_product(config: ResourceConfig, product: ProductSpec) -> None:
    """Cross-document check: the slice latency budget must fit the ordered latency."""
    total = sum(config.slice.latency_budget_ms.values())
    if total > product.latency_ms + 1e-9:
        raise SchemaError(
            f"latency budget {total} ms exceeds ordered latency {product.latency_ms} ms",
            field="slice.latency_budget_ms",
        )
