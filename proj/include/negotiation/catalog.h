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

#ifndef NEGOTIATION_CATALOG_H_
#define NEGOTIATION_CATALOG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace negotiation {

// Whole currency units; formulas run in doubles and round half-up.
using Money = std::int64_t;

Money round_half_up(double value);

enum class ProductKind { kMain, kAccessory, kDelivery };

struct Product {
  std::string id;
  std::string name;
  std::string description;
  std::vector<std::string> features;
  Money unit_price = 0;
  ProductKind kind = ProductKind::kAccessory;
  std::vector<std::string> accessories;  // ids; only meaningful for kMain

  friend bool operator==(const Product&, const Product&) = default;
};

struct BundleOp {
  enum class Kind { kAdd, kRemove };
  Kind kind = Kind::kAdd;
  std::string id;

  static BundleOp add(std::string id) { return {Kind::kAdd, std::move(id)}; }
  static BundleOp remove(std::string id) { return {Kind::kRemove, std::move(id)}; }

  friend bool operator==(const BundleOp&, const BundleOp&) = default;
};

// A main product plus optional accessories; `active` holds the ids currently
// part of the deal.
struct Bundle {
  std::string id;
  std::vector<Product> items;
  std::set<std::string> active;

  const Product& main_product() const;
  const Product* find(const std::string& item_id) const;
  bool is_active(const std::string& item_id) const { return active.count(item_id) > 0; }

  // Accessories that could be added / removed right now.
  std::vector<const Product*> removable() const;
  std::vector<const Product*> addable() const;

  // Throws NegotiationError(kInvalidBundle) on broken invariants.
  void validate() const;

  friend bool operator==(const Bundle&, const Bundle&) = default;
};

Money bundle_price(const Bundle& bundle);

// Price change the op would cause (negative for removals).
Money op_price_delta(const Bundle& bundle, const BundleOp& op);

// Throws UnknownItem, MainNotRemovable or RedundantOp.
Bundle apply_bundle_op(const Bundle& bundle, const BundleOp& op);

class Catalog {
 public:
  Catalog() = default;
  // Throws NegotiationError(kInvalidBundle) on duplicate ids or dangling
  // accessory references.
  explicit Catalog(std::vector<Product> products);

  const std::vector<Product>& products() const { return products_; }
  const Product* find(const std::string& id) const;
  std::vector<const Product*> mains() const;

  // Bundle of a main product and all of its listed accessories, all active.
  // Throws NegotiationError(kUnknownBundle).
  Bundle bundle_for(const std::string& main_id) const;
  std::vector<Bundle> bundles() const;

  std::string checksum() const;

 private:
  std::vector<Product> products_;
};

std::string_view product_kind_name(ProductKind kind);
ProductKind parse_product_kind(std::string_view name);

nlohmann::json to_json(const Product& product);
Product product_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Bundle& bundle);
Bundle bundle_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Catalog& catalog);
Catalog catalog_from_json(const nlohmann::json& j);

// Throws kIoFailure when the file cannot be read, kSchemaViolation on
// malformed JSON and kInvalidBundle on catalog invariant failures.
Catalog load_catalog(const std::filesystem::path& path);

// Ten electronics bundles with accessories and delivery, used by the CLI
// defaults and tests.
const Catalog& builtin_catalog();

}  // namespace negotiation

#endif  // NEGOTIATION_CATALOG_H_
