#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nidslabel {

// ATT&CK technique id, `T` + 4 digits with an optional `.` + 3 digit
// sub-technique suffix. Construction validates; ordering is lexicographic.
class TechniqueId {
 public:
  explicit TechniqueId(std::string_view text);

  static bool is_valid(std::string_view text) noexcept;

  const std::string& str() const noexcept { return value_; }
  bool is_sub() const noexcept { return value_.size() == 9; }

  auto operator<=>(const TechniqueId&) const = default;

 private:
  std::string value_;
};

// ATT&CK tactic id, `TA` + 4 digits.
class TacticId {
 public:
  explicit TacticId(std::string_view text);

  static bool is_valid(std::string_view text) noexcept;

  const std::string& str() const noexcept { return value_; }

  auto operator<=>(const TacticId&) const = default;

 private:
  std::string value_;
};

using TechniqueSet = std::set<TechniqueId>;
using TacticSet = std::set<TacticId>;

struct TechniqueEntry {
  TechniqueId id;
  std::string name;
  TacticSet tactic_ids;
  bool deprecated = false;

  bool is_sub() const noexcept { return id.is_sub(); }
};

// Sub-technique -> parent technique; base technique -> nullopt.
std::optional<TechniqueId> parent_of(const TechniqueId& id);

// Immutable technique/tactic registry loaded from a pinned snapshot file.
class AttackCatalog {
 public:
  // Validates every invariant; throws ValidationError on violation.
  AttackCatalog(std::string version, std::vector<TechniqueEntry> entries);

  static AttackCatalog from_json(std::string_view text);

  const std::string& version() const noexcept { return version_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(const TechniqueId& id) const { return entries_.count(id) != 0; }

  const TechniqueEntry& at(const TechniqueId& id) const;
  const TacticSet& tactics_of(const TechniqueId& id) const;

  // All entries in id order.
  std::vector<TechniqueEntry> sorted_entries() const;
  // Non-deprecated entries in id order.
  std::vector<TechniqueEntry> active_entries() const;

  TacticSet tactic_universe() const;

 private:
  std::string version_;
  std::map<TechniqueId, TechniqueEntry> entries_;
};

AttackCatalog load_catalog(const std::filesystem::path& path);

// Chunks `entries` (in the given order) into `batch_count` contiguous batches
// whose sizes differ by at most one, larger batches first.
std::vector<std::vector<TechniqueEntry>> partition_batches(
    std::span<const TechniqueEntry> entries, std::size_t batch_count);

// partition_batches over the full id-sorted catalog.
std::vector<std::vector<TechniqueEntry>> technique_batches(const AttackCatalog& catalog,
                                                           std::size_t batch_count);

}  // namespace nidslabel
