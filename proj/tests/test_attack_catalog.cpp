#include <doctest.h>

#include <numeric>

#include "nidslabel/attack_catalog.hpp"
#include "nidslabel/error.hpp"
#include "test_support.hpp"

using namespace nidslabel;
using testing::fixture_catalog;

namespace {

AttackCatalog synthetic_catalog(std::size_t n) {
  std::vector<TechniqueEntry> entries;
  for (std::size_t i = 0; i < n; ++i)
    entries.push_back({TechniqueId("T" + std::to_string(2000 + i)), "t" + std::to_string(i), {TacticId("TA0001")}});
  return AttackCatalog("synthetic", std::move(entries));
}

std::string catalog_json(const std::string& entries) {
  return R"({"version": "v", "entries": [)" + entries + "]}";
}

}  // namespace

TEST_CASE("technique ids validate their pattern") {
  CHECK(TechniqueId::is_valid("T1059"));
  CHECK(TechniqueId::is_valid("T1059.004"));
  for (const char* bad : {"T99", "T10590", "t1059", "T1059.04", "T1059.0041", "TA0002", "", "T105a", "T1059."})
    CHECK_FALSE(TechniqueId::is_valid(bad));
  CHECK_THROWS_AS(TechniqueId("T99"), ValidationError);
  CHECK(TechniqueId("T1059.004").is_sub());
  CHECK_FALSE(TechniqueId("T1059").is_sub());
}

TEST_CASE("tactic ids validate their pattern") {
  CHECK(TacticId::is_valid("TA0002"));
  CHECK_FALSE(TacticId::is_valid("TA002"));
  CHECK_FALSE(TacticId::is_valid("T0002"));
  CHECK_THROWS_AS(TacticId("TAX002"), ValidationError);
}

TEST_CASE("technique ids order lexicographically") {
  CHECK(TechniqueId("T1059") < TechniqueId("T1059.001"));
  CHECK(TechniqueId("T1059.001") < TechniqueId("T1059.004"));
  CHECK(TechniqueId("T1059.004") < TechniqueId("T1060"));
}

TEST_CASE("bundled catalog loads with its version and deprecated entry") {
  const auto& cat = fixture_catalog();
  CHECK(cat.size() == 30);
  CHECK(cat.version() == "enterprise-attack-15.1-subset-30");
  CHECK(cat.at(TechniqueId("T1064")).deprecated);
  CHECK(cat.active_entries().size() == 29);
  for (const auto& e : cat.sorted_entries()) CHECK(e.is_sub() == (e.id.str().find('.') != std::string::npos));
}

TEST_CASE("catalog construction rejects invariant violations") {
  SUBCASE("empty") {
    try {
      AttackCatalog::from_json(catalog_json(""));
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("empty catalog") != std::string::npos);
    }
  }
  SUBCASE("orphan sub-technique") {
    CHECK_THROWS_AS(AttackCatalog::from_json(catalog_json(
                        R"({"technique_id": "T9999.001", "name": "x", "tactics": ["TA0001"], "deprecated": false})")),
                    ValidationError);
  }
  SUBCASE("duplicate id") {
    const std::string e = R"({"technique_id": "T1000", "name": "x", "tactics": ["TA0001"], "deprecated": false})";
    CHECK_THROWS_AS(AttackCatalog::from_json(catalog_json(e + "," + e)), ValidationError);
  }
  SUBCASE("no tactics") {
    CHECK_THROWS_AS(AttackCatalog::from_json(
                        catalog_json(R"({"technique_id": "T1000", "name": "x", "tactics": [], "deprecated": false})")),
                    ValidationError);
  }
}

TEST_CASE("malformed catalog files report a line or a field") {
  try {
    AttackCatalog::from_json("{\n  \"version\": \"v\",\n  \"entries\": [\n    {oops}\n  ]\n}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  try {
    AttackCatalog::from_json(catalog_json(R"({"technique_id": "T1000", "name": "x", "deprecated": false})"));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("entries[0].tactics") != std::string::npos);
  }
  try {
    AttackCatalog::from_json(catalog_json(R"({"technique_id": "T10", "name": "x", "tactics": ["TA0001"]})"));
    FAIL("expected a parse error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("entries[0]") != std::string::npos);
  }
}

TEST_CASE("tactics_of returns the full tactic set") {
  const auto& cat = fixture_catalog();
  CHECK(cat.tactics_of(TechniqueId("T1059")) == TacticSet{TacticId("TA0002")});
  CHECK(cat.tactics_of(TechniqueId("T1055")) == TacticSet{TacticId("TA0004"), TacticId("TA0005")});
  CHECK_THROWS_AS(cat.tactics_of(TechniqueId("T0000")), LookupError);
}

TEST_CASE("tactics_of is non-empty and inside the tactic universe") {
  const auto& cat = fixture_catalog();
  const auto universe = cat.tactic_universe();
  for (const auto& e : cat.sorted_entries()) {
    const auto& t = cat.tactics_of(e.id);
    CHECK_FALSE(t.empty());
    CHECK(std::includes(universe.begin(), universe.end(), t.begin(), t.end()));
  }
}

TEST_CASE("parent_of") {
  CHECK(parent_of(TechniqueId("T1566.001")) == TechniqueId("T1566"));
  CHECK_FALSE(parent_of(TechniqueId("T1566")).has_value());
  CHECK(parent_of(TechniqueId("T1059.004")) == TechniqueId("T1059"));
  for (const auto& e : fixture_catalog().sorted_entries()) {
    const auto p = parent_of(e.id);
    if (p) CHECK_FALSE(parent_of(*p).has_value());
  }
}

TEST_CASE("technique batches: sizes from the worked examples") {
  auto sizes = [](const std::vector<std::vector<TechniqueEntry>>& b) {
    std::vector<std::size_t> s;
    for (const auto& x : b) s.push_back(x.size());
    return s;
  };
  CHECK(sizes(technique_batches(synthetic_catalog(22), 2)) == std::vector<std::size_t>{11, 11});
  const auto s30 = sizes(technique_batches(fixture_catalog(), 11));
  CHECK(s30.size() == 11);
  CHECK(std::count(s30.begin(), s30.end(), 3u) == 8);
  CHECK(std::count(s30.begin(), s30.end(), 2u) == 3);
  const auto one = technique_batches(fixture_catalog(), 1);
  REQUIRE(one.size() == 1);
  const auto sorted = fixture_catalog().sorted_entries();
  REQUIRE(one[0].size() == sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(one[0][i].id == sorted[i].id);
}

TEST_CASE("technique batches reject out-of-range counts") {
  CHECK_THROWS_AS(technique_batches(fixture_catalog(), 0), ValidationError);
  CHECK_THROWS_AS(technique_batches(fixture_catalog(), 31), ValidationError);
}

TEST_CASE("property: batches partition the sorted catalog for every count") {
  const auto sorted = fixture_catalog().sorted_entries();
  for (std::size_t n = 1; n <= sorted.size(); ++n) {
    const auto batches = technique_batches(fixture_catalog(), n);
    REQUIRE(batches.size() == n);
    std::vector<TechniqueId> flat;
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& b : batches) {
      lo = std::min(lo, b.size());
      hi = std::max(hi, b.size());
      for (const auto& e : b) flat.push_back(e.id);
    }
    CHECK(hi - lo <= 1);
    REQUIRE(flat.size() == sorted.size());
    for (std::size_t i = 0; i < flat.size(); ++i) CHECK(flat[i] == sorted[i].id);
  }
}
