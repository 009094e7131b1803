// Copyright 2026 The Bundle Negotiation Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "negotiation/catalog.h"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "negotiation/error.h"
#include "negotiation/hashing.h"

namespace negotiation {

// Generated from data/catalog.json at configure time.
extern const char kBuiltinCatalogJson[];

Money round_half_up(double value) {
  return static_cast<Money>(std::floor(value + 0.5));
}

const Product& Bundle::main_product() const {
  for (const auto& p : items) {
    if (p.kind == ProductKind::kMain) return p;
  }
  throw NegotiationError(ErrorCode::kInvalidBundle,
                         "bundle " + id + " has no main product");
}

const Product* Bundle::find(const std::string& item_id) const {
  for (const auto& p : items) {
    if (p.id == item_id) return &p;
  }
  return nullptr;
}

std::vector<const Product*> Bundle::removable() const {
  std::vector<const Product*> out;
  for (const auto& p : items) {
    if (p.kind != ProductKind::kMain && is_active(p.id)) out.push_back(&p);
  }
  return out;
}

std::vector<const Product*> Bundle::addable() const {
  std::vector<const Product*> out;
  for (const auto& p : items) {
    if (p.kind != ProductKind::kMain && !is_active(p.id)) out.push_back(&p);
  }
  return out;
}

void Bundle::validate() const {
  int mains = 0;
  std::set<std::string> ids;
  for (const auto& p : items) {
    if (p.id.empty()) {
      throw NegotiationError(ErrorCode::kInvalidBundle, "empty product id");
    }
    if (!ids.insert(p.id).second) {
      throw NegotiationError(ErrorCode::kInvalidBundle, "duplicate id " + p.id);
    }
    if (p.unit_price < 0) {
      throw NegotiationError(ErrorCode::kInvalidBundle, "negative price for " + p.id);
    }
    if (p.kind == ProductKind::kMain) ++mains;
  }
  if (mains != 1) {
    throw NegotiationError(ErrorCode::kInvalidBundle,
                           "bundle " + id + " needs exactly one main product");
  }
  for (const auto& a : active) {
    if (!ids.count(a)) {
      throw NegotiationError(ErrorCode::kInvalidBundle, "active id " + a + " not in items");
    }
  }
  if (!is_active(main_product().id)) {
    throw NegotiationError(ErrorCode::kInvalidBundle, "main product inactive");
  }
}

Money bundle_price(const Bundle& bundle) {
  Money total = 0;
  for (const auto& p : bundle.items) {
    if (bundle.is_active(p.id)) total += p.unit_price;
  }
  return total;
}

namespace {

const Product& check_op(const Bundle& bundle, const BundleOp& op) {
  const Product* item = bundle.find(op.id);
  if (item == nullptr) {
    throw NegotiationError(ErrorCode::kUnknownItem, "no item '" + op.id + "' in bundle");
  }
  if (op.kind == BundleOp::Kind::kRemove) {
    if (item->kind == ProductKind::kMain) {
      throw NegotiationError(ErrorCode::kMainNotRemovable, op.id);
    }
    if (!bundle.is_active(op.id)) {
      throw NegotiationError(ErrorCode::kRedundantOp, op.id + " is not in the deal");
    }
  } else if (bundle.is_active(op.id)) {
    throw NegotiationError(ErrorCode::kRedundantOp, op.id + " is already in the deal");
  }
  return *item;
}

}  // namespace

Money op_price_delta(const Bundle& bundle, const BundleOp& op) {
  const Product& item = check_op(bundle, op);
  return op.kind == BundleOp::Kind::kAdd ? item.unit_price : -item.unit_price;
}

Bundle apply_bundle_op(const Bundle& bundle, const BundleOp& op) {
  check_op(bundle, op);
  Bundle out = bundle;
  if (op.kind == BundleOp::Kind::kAdd) {
    out.active.insert(op.id);
  } else {
    out.active.erase(op.id);
  }
  return out;
}

Catalog::Catalog(std::vector<Product> products) : products_(std::move(products)) {
  std::set<std::string> ids;
  for (const auto& p : products_) {
    if (p.id.empty() || !ids.insert(p.id).second) {
      throw NegotiationError(ErrorCode::kInvalidBundle,
                             "duplicate or empty product id '" + p.id + "'");
    }
    if (p.unit_price < 0) {
      throw NegotiationError(ErrorCode::kInvalidBundle, "negative price for " + p.id);
    }
  }
  for (const auto& p : products_) {
    for (const auto& a : p.accessories) {
      const Product* acc = find(a);
      if (acc == nullptr || acc->kind == ProductKind::kMain) {
        throw NegotiationError(ErrorCode::kInvalidBundle,
                               p.id + " lists unknown accessory " + a);
      }
    }
  }
}

const Product* Catalog::find(const std::string& id) const {
  for (const auto& p : products_) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

std::vector<const Product*> Catalog::mains() const {
  std::vector<const Product*> out;
  for (const auto& p : products_) {
    if (p.kind == ProductKind::kMain) out.push_back(&p);
  }
  return out;
}

Bundle Catalog::bundle_for(const std::string& main_id) const {
  const Product* main = find(main_id);
  if (main == nullptr || main->kind != ProductKind::kMain) {
    throw NegotiationError(ErrorCode::kUnknownBundle, "no bundle '" + main_id + "'");
  }
  Bundle b;
  b.id = main_id;
  b.items.push_back(*main);
  b.active.insert(main->id);
  for (const auto& a : main->accessories) {
    b.items.push_back(*find(a));
    b.active.insert(a);
  }
  return b;
}

std::vector<Bundle> Catalog::bundles() const {
  std::vector<Bundle> out;
  for (const Product* m : mains()) out.push_back(bundle_for(m->id));
  return out;
}

std::string Catalog::checksum() const { return sha256_hex(to_json(*this).dump()); }

std::string_view product_kind_name(ProductKind kind) {
  switch (kind) {
    case ProductKind::kMain: return "main";
    case ProductKind::kAccessory: return "accessory";
    case ProductKind::kDelivery: return "delivery";
  }
  return "accessory";
}

ProductKind parse_product_kind(std::string_view name) {
  if (name == "main") return ProductKind::kMain;
  if (name == "accessory") return ProductKind::kAccessory;
  if (name == "delivery") return ProductKind::kDelivery;
  throw NegotiationError(ErrorCode::kSchemaViolation,
                         "unknown product kind '" + std::string(name) + "'");
}

nlohmann::json to_json(const Product& p) {
  return {{"id", p.id},
          {"name", p.name},
          {"description", p.description},
          {"features", p.features},
          {"price", p.unit_price},
          {"kind", product_kind_name(p.kind)},
          {"accessories", p.accessories}};
}

Product product_from_json(const nlohmann::json& j) {
  try {
    Product p;
    p.id = j.at("id").get<std::string>();
    p.name = j.at("name").get<std::string>();
    p.description = j.value("description", std::string());
    p.features = j.value("features", std::vector<std::string>());
    p.unit_price = j.at("price").get<Money>();
    p.kind = parse_product_kind(j.at("kind").get<std::string>());
    p.accessories = j.value("accessories", std::vector<std::string>());
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw NegotiationError(ErrorCode::kSchemaViolation, e.what());
  }
}

nlohmann::json to_json(const Bundle& b) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& p : b.items) items.push_back(to_json(p));
  // Active ids in item order, not set order, so output reads naturally.
  nlohmann::json active = nlohmann::json::array();
  for (const auto& p : b.items) {
    if (b.is_active(p.id)) active.push_back(p.id);
  }
  return {{"id", b.id}, {"items", items}, {"active", active}};
}

Bundle bundle_from_json(const nlohmann::json& j) {
  try {
    Bundle b;
    b.id = j.value("id", std::string());
    for (const auto& item : j.at("items")) b.items.push_back(product_from_json(item));
    for (const auto& a : j.at("active")) b.active.insert(a.get<std::string>());
    if (b.id.empty() && !b.items.empty()) b.id = b.main_product().id;
    b.validate();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw NegotiationError(ErrorCode::kSchemaViolation, e.what());
  }
}

nlohmann::json to_json(const Catalog& c) {
  nlohmann::json products = nlohmann::json::array();
  for (const auto& p : c.products()) products.push_back(to_json(p));
  return {{"products", products}};
}

Catalog catalog_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("products") || !j["products"].is_array()) {
    throw NegotiationError(ErrorCode::kSchemaViolation, "catalog needs a products array");
  }
  std::vector<Product> products;
  for (const auto& item : j["products"]) products.push_back(product_from_json(item));
  return Catalog(std::move(products));
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw NegotiationError(ErrorCode::kIoFailure, "cannot open " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw NegotiationError(ErrorCode::kSchemaViolation, path.string() + ": " + e.what());
  }
  return catalog_from_json(j);
}

const Catalog& builtin_catalog() {
  static const Catalog kCatalog =
      catalog_from_json(nlohmann::json::parse(kBuiltinCatalogJson));
  return kCatalog;
}

}  // namespace negotiation
