"""Catalog loading, validation, and which/where product matching.

On-disk layout of a catalog directory:

    products.json            array of products, or {"intent_vocabulary": [...], "products": [...]}
    orders/<order_id>.json   one ServiceOrder per file
    references/<order_id>.yaml  expert target RFS per order
    exemplars/*.yaml         prompt exemplars (loaded by intentbench.prompts)
"""

from __future__ import annotations

import json
import re
from importlib import resources
from pathlib import Path
from typing import Callable

import yaml
from pydantic import ValidationError as PydanticValidationError

from .errors import AmbiguousMatchError, CatalogLoadError, DuplicateIdError, NoMatchError, SchemaError
from .model import (
    DEFAULT_INTENT_VOCABULARY,
    Catalog,
    ProductSpec,
    ReferenceSet,
    ResourceConfig,
    ServiceOrder,
    SliceCategory,
    validate_config_for_product,
)


def builtin_catalog_dir() -> Path:
    """Path of the golden catalog shipped with the package (10 orders, 5 eMBB + 5 URLLC)."""
    return Path(str(resources.files("intentbench").joinpath("data/catalog")))


def builtin_backends_path() -> Path:
    """Path of the shipped all-mock backend registry (Table-style six backends)."""
    return Path(str(resources.files("intentbench").joinpath("data/backends.yaml")))


def _first_error(exc: PydanticValidationError) -> tuple[str, str]:
    err = exc.errors()[0]
    field = ".".join(str(loc) for loc in err["loc"])
    return field, err["msg"]


def _load_products(path: Path) -> tuple[list[ProductSpec], tuple[str, ...]]:
    products_file = path / "products.json"
    if not products_file.is_file():
        raise CatalogLoadError(f"missing products file: {products_file}")
    try:
        raw = json.loads(products_file.read_text())
    except json.JSONDecodeError as exc:
        raise CatalogLoadError(f"{products_file}: not valid JSON: {exc}") from exc

    vocabulary = DEFAULT_INTENT_VOCABULARY
    if isinstance(raw, dict):
        vocabulary = tuple(raw.get("intent_vocabulary", DEFAULT_INTENT_VOCABULARY))
        raw = raw.get("products", [])
    if not isinstance(raw, list):
        raise CatalogLoadError(f"{products_file}: expected an array of products")

    products: list[ProductSpec] = []
    seen: set[str] = set()
    for entry in raw:
        try:
            product = ProductSpec.model_validate(entry)
        except PydanticValidationError as exc:
            field, msg = _first_error(exc)
            pid = entry.get("id", "?") if isinstance(entry, dict) else "?"
            raise SchemaError(f"product {pid}: {field}: {msg}", doc_id=str(pid), field=field) from exc
        if product.id in seen:
            raise DuplicateIdError(f"duplicate product id {product.id!r}")
        seen.add(product.id)
        products.append(product)
    if not products:
        raise CatalogLoadError(f"{products_file}: no products found")
    return products, vocabulary


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


#: Semantic checks on well-known intent values, mirroring the product invariants.
_INTENT_CHECKS = {
    "latency_ms": (lambda v: _is_number(v) and v > 0, "must be a positive number"),
    "throughput_mbps": (lambda v: _is_number(v) and v > 0, "must be a positive number"),
    "max_users": (lambda v: isinstance(v, int) and not isinstance(v, bool) and v > 0, "must be a positive integer"),
    "reliability_pct": (lambda v: _is_number(v) and 0 < v <= 100, "must lie in (0, 100]"),
    "slice_type": (lambda v: isinstance(v, str) and v in {c.value for c in SliceCategory}, "must be eMBB or URLLC"),
    "region": (lambda v: isinstance(v, str) and bool(v.strip()), "must be a non-empty string"),
}


def _load_orders(path: Path, products: list[ProductSpec], vocabulary: tuple[str, ...]) -> list[ServiceOrder]:
    orders_dir = path / "orders"
    order_files = sorted(orders_dir.glob("*.json")) if orders_dir.is_dir() else []
    if not order_files:
        raise CatalogLoadError(f"no orders found under {orders_dir}")

    product_ids = {p.id for p in products}
    orders: list[ServiceOrder] = []
    seen: set[str] = set()
    for order_file in order_files:
        try:
            raw = json.loads(order_file.read_text())
        except json.JSONDecodeError as exc:
            raise CatalogLoadError(f"{order_file}: not valid JSON: {exc}") from exc
        try:
            order = ServiceOrder.model_validate(raw)
        except PydanticValidationError as exc:
            field, msg = _first_error(exc)
            raise SchemaError(f"order {order_file.stem}: {field}: {msg}", doc_id=order_file.stem, field=field) from exc
        if order.order_id != order_file.stem:
            raise SchemaError(
                f"order file {order_file.name} declares order_id {order.order_id!r}",
                doc_id=order.order_id,
                field="order_id",
            )
        if order.order_id in seen:
            raise DuplicateIdError(f"duplicate order id {order.order_id!r}")
        seen.add(order.order_id)
        if order.product_id not in product_ids:
            raise SchemaError(
                f"order {order.order_id}: product_id {order.product_id!r} not in catalog",
                doc_id=order.order_id,
                field="product_id",
            )
        unknown = [name for name in order.intents if name not in vocabulary]
        if unknown:
            raise SchemaError(
                f"order {order.order_id}: intent(s) {', '.join(unknown)} not in the declared vocabulary",
                doc_id=order.order_id,
                field="intents",
            )
        for name, value in order.intents.items():
            check = _INTENT_CHECKS.get(name)
            if check and not check[0](value):
                raise SchemaError(
                    f"order {order.order_id}: {name} {check[1]}, got {value!r}",
                    doc_id=order.order_id,
                    field=name,
                )
        orders.append(order)
    return orders


def _load_references(path: Path, catalog: Catalog) -> ReferenceSet:
    refs_dir = path / "references"
    pairs: dict[str, ResourceConfig] = {}
    known = {order.order_id for order in catalog.orders}

    for ref_file in sorted(refs_dir.glob("*.yaml")) if refs_dir.is_dir() else []:
        if ref_file.stem not in known:
            raise CatalogLoadError(f"reference {ref_file.name} has no matching order")

    for order in catalog.orders:
        ref_file = refs_dir / f"{order.order_id}.yaml"
        if not ref_file.is_file():
            raise CatalogLoadError(f"missing reference for order {order.order_id}: {ref_file}")
        try:
            raw = yaml.safe_load(ref_file.read_text())
        except yaml.YAMLError as exc:
            raise CatalogLoadError(f"{ref_file}: not valid YAML: {exc}") from exc
        try:
            config = ResourceConfig.model_validate(raw)
        except PydanticValidationError as exc:
            field, msg = _first_error(exc)
            raise SchemaError(
                f"reference {order.order_id}: {field}: {msg}", doc_id=order.order_id, field=field
            ) from exc
        if config.order_ref != order.order_id:
            raise SchemaError(
                f"reference {ref_file.name} declares order_ref {config.order_ref!r}",
                doc_id=order.order_id,
                field="order_ref",
            )
        validate_config_for_product(config, catalog.product_by_id(order.product_id))
        pairs[order.order_id] = config
    return ReferenceSet(pairs=pairs)


def load_catalog(path: str | Path) -> tuple[Catalog, ReferenceSet]:
    """Load and cross-validate a catalog directory.

    Every order is checked against its product and the declared intent
    vocabulary; every reference must parse and validate as an RFS for its
    order. Deterministic: files are read in sorted order.
    """
    path = Path(path)
    if not path.is_dir():
        raise CatalogLoadError(f"catalog directory not found: {path}")
    products, vocabulary = _load_products(path)
    orders = _load_orders(path, products, vocabulary)
    catalog = Catalog(products=products, orders=orders, intent_vocabulary=vocabulary)
    references = _load_references(path, catalog)
    return catalog, references


# --- which/where matching ---------------------------------------------------

def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text.casefold()).strip()


def _mentions(text: str, word: str) -> bool:
    return re.search(rf"(?<!\w){re.escape(word.casefold())}(?!\w)", text) is not None


Matcher = Callable[[str, Catalog], str]


def match_product(demand: str, catalog: Catalog, matcher: Matcher | None = None) -> ProductSpec:
    """Resolve a free-text demand to the unique product it names.

    The default matcher is deterministic keyword matching: the product's
    category ("which") must occur in the demand; if any candidate's region
    ("where") also occurs, the region narrows the choice. A pluggable matcher
    may replace the keyword logic but must return a product id from the
    catalog.
    """
    if not catalog.products:
        raise NoMatchError("catalog has no products")
    if matcher is not None:
        return catalog.product_by_id(matcher(demand, catalog))

    text = _normalize(demand)
    by_category = [p for p in catalog.products if _mentions(text, p.category.value)]
    if not by_category:
        raise NoMatchError(
            "no product matches the demand",
            categories=sorted({p.category.value for p in catalog.products}),
            regions=sorted({p.region for p in catalog.products}),
        )
    by_region = [p for p in by_category if _mentions(text, p.region)]
    candidates = by_region or by_category
    if len(candidates) > 1:
        raise AmbiguousMatchError(
            f"demand matches {len(candidates)} products",
            candidates=[p.id for p in candidates],
        )
    return candidates[0]
