#include "nidslabel/attack_catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nidslabel/error.hpp"

namespace nidslabel {

namespace {

bool all_digits(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

}  // namespace

bool TechniqueId::is_valid(std::string_view t) noexcept {
  if (t.size() != 5 && t.size() != 9) return false;
  if (t[0] != 'T' || !all_digits(t.substr(1, 4))) return false;
  if (t.size() == 9) return t[5] == '.' && all_digits(t.substr(6, 3));
  return true;
}

TechniqueId::TechniqueId(std::string_view text) : value_(text) {
  if (!is_valid(text)) throw ValidationError("invalid technique id '" + value_ + "'");
}

bool TacticId::is_valid(std::string_view t) noexcept {
  return t.size() == 6 && t.substr(0, 2) == "TA" && all_digits(t.substr(2));
}

TacticId::TacticId(std::string_view text) : value_(text) {
  if (!is_valid(text)) throw ValidationError("invalid tactic id '" + value_ + "'");
}

std::optional<TechniqueId> parent_of(const TechniqueId& id) {
  if (!id.is_sub()) return std::nullopt;
  return TechniqueId(std::string_view(id.str()).substr(0, 5));
}

AttackCatalog::AttackCatalog(std::string version, std::vector<TechniqueEntry> entries)
    : version_(std::move(version)) {
  if (entries.empty()) throw ValidationError("empty catalog");
  for (auto& e : entries) {
    if (e.tactic_ids.empty())
      throw ValidationError("technique " + e.id.str() + " has no tactics");
    const TechniqueId id = e.id;
    if (!entries_.emplace(id, std::move(e)).second)
      throw ValidationError("duplicate technique id " + id.str());
  }
  for (const auto& [id, e] : entries_) {
    if (auto parent = parent_of(id); parent && !entries_.count(*parent))
      throw ValidationError("sub-technique " + id.str() + " has no parent " + parent->str());
  }
}

AttackCatalog AttackCatalog::from_json(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed catalog JSON: ") + e.what(),
                     line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  auto field_error = [](const std::string& field, const std::string& msg) {
    return ParseError("catalog field '" + field + "': " + msg);
  };
  if (!doc.is_object()) throw field_error("<root>", "expected an object");
  if (!doc.contains("version") || !doc["version"].is_string())
    throw field_error("version", "missing or not a string");
  if (!doc.contains("entries") || !doc["entries"].is_array())
    throw field_error("entries", "missing or not an array");

  std::vector<TechniqueEntry> entries;
  const auto& arr = doc["entries"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "entries[" + std::to_string(i) + "]";
    const auto& obj = arr[i];
    if (!obj.is_object()) throw field_error(where, "expected an object");
    auto str_field = [&](const char* key) -> std::string {
      if (!obj.contains(key) || !obj[key].is_string())
        throw field_error(where + "." + key, "missing or not a string");
      return obj[key].get<std::string>();
    };
    const std::string tid = str_field("technique_id");
    if (!TechniqueId::is_valid(tid)) throw field_error(where + ".technique_id", "bad id '" + tid + "'");
    TechniqueEntry entry{TechniqueId(tid), str_field("name"), {}, false};
    if (!obj.contains("tactics") || !obj["tactics"].is_array())
      throw field_error(where + ".tactics", "missing or not an array");
    for (const auto& t : obj["tactics"]) {
      if (!t.is_string() || !TacticId::is_valid(t.get<std::string>()))
        throw field_error(where + ".tactics", "bad tactic id " + t.dump());
      entry.tactic_ids.emplace(t.get<std::string>());
    }
    if (obj.contains("deprecated")) {
      if (!obj["deprecated"].is_boolean()) throw field_error(where + ".deprecated", "not a boolean");
      entry.deprecated = obj["deprecated"].get<bool>();
    }
    entries.push_back(std::move(entry));
  }
  return AttackCatalog(doc["version"].get<std::string>(), std::move(entries));
}

const TechniqueEntry& AttackCatalog::at(const TechniqueId& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw LookupError("unknown technique " + id.str());
  return it->second;
}

const TacticSet& AttackCatalog::tactics_of(const TechniqueId& id) const {
  return at(id).tactic_ids;
}

std::vector<TechniqueEntry> AttackCatalog::sorted_entries() const {
  std::vector<TechniqueEntry> out;
  out.reserve(entries_.size());
  for (const auto& kv : entries_) out.push_back(kv.second);
  return out;
}

std::vector<TechniqueEntry> AttackCatalog::active_entries() const {
  std::vector<TechniqueEntry> out;
  for (const auto& kv : entries_)
    if (!kv.second.deprecated) out.push_back(kv.second);
  return out;
}

TacticSet AttackCatalog::tactic_universe() const {
  TacticSet out;
  for (const auto& kv : entries_) out.insert(kv.second.tactic_ids.begin(), kv.second.tactic_ids.end());
  return out;
}

AttackCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open catalog file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return AttackCatalog::from_json(buf.str());
}

std::vector<std::vector<TechniqueEntry>> partition_batches(std::span<const TechniqueEntry> entries,
                                                           std::size_t batch_count) {
  if (batch_count < 1 || batch_count > entries.size())
    throw ValidationError("batch_count " + std::to_string(batch_count) + " out of range [1, " +
                          std::to_string(entries.size()) + "]");
  const std::size_t base = entries.size() / batch_count;
  const std::size_t larger = entries.size() % batch_count;
  std::vector<std::vector<TechniqueEntry>> batches;
  batches.reserve(batch_count);
  auto it = entries.begin();
  for (std::size_t b = 0; b < batch_count; ++b) {
    const std::size_t n = base + (b < larger ? 1 : 0);
    batches.emplace_back(it, it + static_cast<std::ptrdiff_t>(n));
    it += static_cast<std::ptrdiff_t>(n);
  }
  return batches;
}

std::vector<std::vector<TechniqueEntry>> technique_batches(const AttackCatalog& catalog,
                                                           std::size_t batch_count) {
  const auto sorted = catalog.sorted_entries();
  return partition_batches(sorted, batch_count);
}

}  // namespace nidslabel
