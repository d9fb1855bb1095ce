from __future__ import annotations

import json

import pytest

from intentbench.catalog import load_catalog, match_product
from intentbench.errors import (
    AmbiguousMatchError,
    CatalogLoadError,
    DuplicateIdError,
    NoMatchError,
    SchemaError,
)
from intentbench.model import Catalog, ProductSpec

from conftest import rewrite_json


class TestLoadCatalog:
    def test_golden_catalog_size(self, catalog, references):
        # the benchmark ships 10 orders with one reference each
        assert len(catalog) == 10
        assert len(catalog.products) == 10
        assert len(references.pairs) == 10

    def test_category_mix(self, catalog):
        categories = [p.category.value for p in catalog.products]
        assert categories.count("eMBB") == 5
        assert categories.count("URLLC") == 5

    def test_deterministic(self, catalog_dir):
        first = load_catalog(catalog_dir)
        second = load_catalog(catalog_dir)
        assert first[0] == second[0]
        assert first[1] == second[1]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(CatalogLoadError, match="nowhere"):
            load_catalog(tmp_path / "nowhere")

    def test_missing_products_file(self, tmp_path):
        (tmp_path / "cat").mkdir()
        with pytest.raises(CatalogLoadError, match="products.json"):
            load_catalog(tmp_path / "cat")

    def test_no_orders_found(self, catalog_copy):
        for order_file in (catalog_copy / "orders").glob("*.json"):
            order_file.unlink()
        with pytest.raises(CatalogLoadError, match="no orders found"):
            load_catalog(catalog_copy)

    def test_reliability_out_of_range(self, catalog_copy):
        rewrite_json(
            catalog_copy / "orders" / "ord-001.json",
            lambda doc: doc["intents"].__setitem__("reliability_pct", 150),
        )
        with pytest.raises(SchemaError, match="reliability_pct") as excinfo:
            load_catalog(catalog_copy)
        assert excinfo.value.doc_id == "ord-001"
        assert excinfo.value.field == "reliability_pct"

    def test_duplicate_product_id(self, catalog_copy):
        def dup(doc):
            doc["products"].append(dict(doc["products"][0]))

        rewrite_json(catalog_copy / "products.json", dup)
        with pytest.raises(DuplicateIdError):
            load_catalog(catalog_copy)

    def test_order_filename_mismatch(self, catalog_copy):
        rewrite_json(
            catalog_copy / "orders" / "ord-002.json",
            lambda doc: doc.__setitem__("order_id", "ord-001"),
        )
        with pytest.raises(SchemaError, match="declares order_id"):
            load_catalog(catalog_copy)

    def test_unknown_product_reference(self, catalog_copy):
        rewrite_json(
            catalog_copy / "orders" / "ord-001.json",
            lambda doc: doc.__setitem__("product_id", "prod-ghost"),
        )
        with pytest.raises(SchemaError, match="prod-ghost"):
            load_catalog(catalog_copy)

    def test_unknown_intent_name(self, catalog_copy):
        rewrite_json(
            catalog_copy / "orders" / "ord-003.json",
            lambda doc: doc["intents"].__setitem__("jitter_ms", 1),
        )
        with pytest.raises(SchemaError, match="jitter_ms"):
            load_catalog(catalog_copy)

    def test_missing_reference(self, catalog_copy):
        (catalog_copy / "references" / "ord-004.yaml").unlink()
        with pytest.raises(CatalogLoadError, match="ord-004"):
            load_catalog(catalog_copy)

    def test_orphan_reference(self, catalog_copy):
        (catalog_copy / "references" / "ord-099.yaml").write_text("order_ref: ord-099\n")
        with pytest.raises(CatalogLoadError, match="no matching order"):
            load_catalog(catalog_copy)

    def test_reference_schema_error_names_order(self, catalog_copy):
        ref = catalog_copy / "references" / "ord-005.yaml"
        ref.write_text(ref.read_text().replace("sst: 1", "sst: -1"))
        with pytest.raises(SchemaError) as excinfo:
            load_catalog(catalog_copy)
        assert excinfo.value.doc_id == "ord-005"

    def test_latency_budget_exceeding_order_rejected(self, catalog_copy):
        ref = catalog_copy / "references" / "ord-006.yaml"
        # ord-006 orders 10 ms end to end; blow the core segment budget
        ref.write_text(ref.read_text().replace("core: 6", "core: 60"))
        with pytest.raises(SchemaError, match="latency budget"):
            load_catalog(catalog_copy)

    def test_bare_array_products_accepted(self, catalog_copy):
        doc = json.loads((catalog_copy / "products.json").read_text())
        (catalog_copy / "products.json").write_text(json.dumps(doc["products"]))
        catalog, _ = load_catalog(catalog_copy)
        assert len(catalog.products) == 10
        assert "latency_ms" in catalog.intent_vocabulary


def _mini_catalog(*specs) -> Catalog:
    products = [
        ProductSpec.model_validate(
            dict(
                id=f"prod-{category.lower()}-{region.lower()}",
                name=f"{category} {region}",
                category=category,
                region=region,
                latency_ms=10,
                throughput_mbps=50,
                max_users=1000,
                reliability_pct=99.9,
                created_at="2025-01-01T00:00:00Z",
                user_expertise="expert",
            )
        )
        for category, region in specs
    ]
    return Catalog(products=products, orders=[])


class TestMatchProduct:
    def test_which_and_where(self, catalog):
        product = match_product("I need to establish URLLC slices for the Paris region", catalog)
        assert product.id == "prod-urllc-paris"

    def test_ambiguous_without_region(self):
        catalog = _mini_catalog(("URLLC", "Paris"), ("URLLC", "Lyon"))
        with pytest.raises(AmbiguousMatchError) as excinfo:
            match_product("URLLC slices", catalog)
        assert len(excinfo.value.candidates) == 2

    def test_no_match_lists_options(self, catalog):
        with pytest.raises(NoMatchError) as excinfo:
            match_product("quantum teleportation please", catalog)
        assert "URLLC" in excinfo.value.categories
        assert "Paris" in excinfo.value.regions

    def test_case_and_whitespace_invariance(self, catalog):
        shouting = match_product("  i NEED  to   establish urllc slices for the PARIS region ", catalog)
        normal = match_product("I need to establish URLLC slices for the Paris region", catalog)
        assert shouting.id == normal.id

    def test_unique_category_without_region(self):
        catalog = _mini_catalog(("URLLC", "Paris"), ("eMBB", "Paris"))
        assert match_product("an URLLC slice please", catalog).category.value == "URLLC"

    def test_substring_does_not_match(self):
        # "urllc" inside a longer word is not a category mention
        catalog = _mini_catalog(("URLLC", "Paris"))
        with pytest.raises(NoMatchError):
            match_product("xurllcy nonsense", catalog)

    def test_pluggable_matcher(self, catalog):
        product = match_product("whatever", catalog, matcher=lambda demand, cat: "prod-embb-lyon")
        assert product.id == "prod-embb-lyon"

    def test_pluggable_matcher_must_return_catalog_id(self, catalog):
        with pytest.raises(SchemaError):
            match_product("whatever", catalog, matcher=lambda demand, cat: "prod-ghost")
