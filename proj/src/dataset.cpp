#include "nidslabel/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "nidslabel/error.hpp"
#include "nidslabel/random.hpp"

namespace nidslabel {

namespace {

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(std::string("cannot open ") + what + " " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

}  // namespace

LabeledDataset::LabeledDataset(std::vector<LabeledRule> rules) : rules_(std::move(rules)) {
  std::set<std::uint64_t> sids;
  TechniqueSet universe;
  for (const auto& r : rules_) {
    if (!sids.insert(r.sid).second)
      throw ValidationError("duplicate sid " + std::to_string(r.sid) + " in dataset");
    universe.insert(r.technique_ids.begin(), r.technique_ids.end());
  }
  universe_.assign(universe.begin(), universe.end());
}

LabelCounts label_frequencies(const LabeledDataset& ds) {
  LabelCounts counts;
  for (const auto& r : ds.rules())
    for (const auto& t : r.technique_ids) ++counts[t];
  return counts;
}

IngestResult ingest_text(std::string_view rules_text, std::string_view label_map_csv,
                         const AttackCatalog& catalog, IngestOptions options) {
  IngestResult result;
  auto problem = [&](const std::string& msg) {
    if (options.strict) throw ValidationError(msg);
    result.diagnostics.push_back(msg);
  };

  auto parsed = parse_ruleset(rules_text);
  result.rule_parse_failures = parsed.diagnostics.size();
  for (const auto& d : parsed.diagnostics)
    result.diagnostics.push_back("rules line " + std::to_string(d.line) + ": " + d.message);

  std::unordered_map<std::uint64_t, std::size_t> by_sid;
  std::vector<const SnortRule*> with_sid;
  for (const auto& r : parsed.rules) {
    if (!r.sid) continue;
    if (by_sid.emplace(*r.sid, with_sid.size()).second)
      with_sid.push_back(&r);
    else
      result.diagnostics.push_back("duplicate sid " + std::to_string(*r.sid) + " in rules file, keeping first");
  }

  std::map<std::uint64_t, TechniqueSet> labels;
  const auto lines = split_lines(label_map_csv);
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first < lines.size()) {
    auto header = trim(lines[first]);
    if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
    if (header != "sid,technique_id")
      throw ParseError("label map header must be 'sid,technique_id'", first + 1);
  }
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) throw ParseError("expected 'sid,technique_id'", i + 1);
    const auto sid_text = trim(line.substr(0, comma));
    const auto tid_text = trim(line.substr(comma + 1));
    std::uint64_t sid = 0;
    auto [ptr, ec] = std::from_chars(sid_text.data(), sid_text.data() + sid_text.size(), sid);
    if (sid_text.empty() || ec != std::errc() || ptr != sid_text.data() + sid_text.size())
      throw ParseError("bad sid '" + std::string(sid_text) + "'", i + 1);
    const std::string where = "label map line " + std::to_string(i + 1) + ": ";
    if (!TechniqueId::is_valid(tid_text)) {
      problem(where + "invalid technique id '" + std::string(tid_text) + "'");
      continue;
    }
    TechniqueId tid(tid_text);
    if (!catalog.contains(tid)) {
      problem(where + "technique " + tid.str() + " not in catalog");
      continue;
    }
    if (!by_sid.count(sid)) {
      problem(where + "sid " + std::to_string(sid) + " not present in rules file");
      continue;
    }
    labels[sid].insert(tid);
  }
  if (labels.empty()) result.diagnostics.push_back("warning: label map produced no labels");

  std::vector<LabeledRule> rules;
  for (const auto* r : with_sid) {
    auto it = labels.find(*r->sid);
    if (it == labels.end()) {
      ++result.unlabeled_dropped;
      continue;
    }
    rules.push_back({*r->sid, *r, it->second});
  }
  for (const auto& r : parsed.rules)
    if (!r.sid) ++result.unlabeled_dropped;
  result.dataset = LabeledDataset(std::move(rules));
  return result;
}

IngestResult ingest(const std::filesystem::path& rules_file, const std::filesystem::path& label_map_file,
                    const AttackCatalog& catalog, IngestOptions options) {
  return ingest_text(read_file(rules_file, "rules file"), read_file(label_map_file, "label map"), catalog,
                     options);
}

RarePartition partition_rare(const LabeledDataset& ds, std::size_t min_count) {
  if (min_count < 1) throw ValidationError("min_count must be >= 1");
  std::vector<LabeledRule> core = ds.rules();
  std::vector<LabeledRule> rare;
  std::vector<std::size_t> origin(core.size());
  std::iota(origin.begin(), origin.end(), 0);
  TechniqueSet rare_techniques;

  for (;;) {
    LabelCounts counts;
    for (const auto& r : core)
      for (const auto& t : r.technique_ids) ++counts[t];
    TechniqueSet newly_rare;
    for (const auto& [t, c] : counts)
      if (c < min_count) newly_rare.insert(t);
    if (newly_rare.empty()) break;
    rare_techniques.insert(newly_rare.begin(), newly_rare.end());

    std::vector<LabeledRule> kept;
    std::vector<std::size_t> kept_origin;
    for (std::size_t i = 0; i < core.size(); ++i) {
      auto& r = core[i];
      std::erase_if(r.technique_ids, [&](const TechniqueId& t) { return newly_rare.count(t) != 0; });
      if (r.technique_ids.empty()) {
        rare.push_back(ds.rules()[origin[i]]);
      } else {
        kept.push_back(std::move(r));
        kept_origin.push_back(origin[i]);
      }
    }
    core = std::move(kept);
    origin = std::move(kept_origin);
  }

  // Rare rules keep the input order.
  std::unordered_map<std::uint64_t, std::size_t> position;
  for (std::size_t i = 0; i < ds.size(); ++i) position[ds.rules()[i].sid] = i;
  std::sort(rare.begin(), rare.end(),
            [&](const LabeledRule& a, const LabeledRule& b) { return position[a.sid] < position[b.sid]; });

  return {LabeledDataset(std::move(core)), LabeledDataset(std::move(rare)),
          {rare_techniques.begin(), rare_techniques.end()}};
}

namespace {

class SplitState {
 public:
  SplitState(const std::vector<std::vector<std::size_t>>& rule_labels, std::vector<double> targets,
             std::vector<std::size_t> counts)
      : rule_labels_(rule_labels), targets_(std::move(targets)), counts_(std::move(counts)),
        train_(counts_.size(), 0) {}

  double penalty(std::size_t label, long train) const {
    const long count = static_cast<long>(counts_[label]);
    double p = std::max(0.0, std::abs(static_cast<double>(train) - targets_[label]) - 1.0 - 1e-9);
    if (train <= 0) p += 1.0;
    if (train >= count) p += 1.0;
    return p;
  }

  double total() const {
    double v = 0;
    for (std::size_t l = 0; l < counts_.size(); ++l) v += penalty(l, train_[l]);
    return v;
  }

  // Change of total penalty if rule labels shift by `delta` train counts.
  double delta(const std::vector<std::pair<std::size_t, long>>& shifts) const {
    double d = 0;
    for (const auto& [l, s] : shifts) d += penalty(l, train_[l] + s) - penalty(l, train_[l]);
    return d;
  }

  void apply(std::size_t rule, long direction) {
    for (auto l : rule_labels_[rule]) train_[l] += direction;
  }

  bool violating(std::size_t label) const { return penalty(label, train_[label]) > 0; }
  long train_count(std::size_t label) const { return train_[label]; }

 private:
  const std::vector<std::vector<std::size_t>>& rule_labels_;
  std::vector<double> targets_;
  std::vector<std::size_t> counts_;
  std::vector<long> train_;
};

}  // namespace

TrainTestSplit stratified_split(const LabeledDataset& ds, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw ValidationError("train_frac must be in (0, 1)");
  const auto& universe = ds.label_universe();
  const std::size_t n = ds.size();
  const std::size_t L = universe.size();
  std::map<TechniqueId, std::size_t> label_index;
  for (std::size_t l = 0; l < L; ++l) label_index.emplace(universe[l], l);

  std::vector<std::vector<std::size_t>> rule_labels(n);
  std::vector<std::size_t> counts(L, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& t : ds.rules()[i].technique_ids) {
      const auto l = label_index.at(t);
      rule_labels[i].push_back(l);
      ++counts[l];
    }
  for (std::size_t l = 0; l < L; ++l)
    if (counts[l] < 2)
      throw ValidationError("label " + universe[l].str() + " occurs " + std::to_string(counts[l]) +
                            " time(s); stratified split needs at least 2");

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));

  // desired[0] = train, desired[1] = test
  std::vector<double> desired[2] = {std::vector<double>(L), std::vector<double>(L)};
  for (std::size_t l = 0; l < L; ++l) {
    desired[0][l] = train_frac * static_cast<double>(counts[l]);
    desired[1][l] = (1.0 - train_frac) * static_cast<double>(counts[l]);
  }
  double desired_total[2] = {train_frac * static_cast<double>(n), (1.0 - train_frac) * static_cast<double>(n)};
  std::vector<int> side(n, -1);
  std::vector<std::size_t> remaining = counts;

  auto assign = [&](std::size_t i, int s) {
    side[i] = s;
    desired_total[s] -= 1.0;
    for (auto l : rule_labels[i]) {
      desired[s][l] -= 1.0;
      --remaining[l];
    }
  };
  auto pick_side = [&](std::optional<std::size_t> label) {
    if (label) {
      const double a = desired[0][*label], b = desired[1][*label];
      if (a != b) return a > b ? 0 : 1;
    }
    if (desired_total[0] != desired_total[1]) return desired_total[0] > desired_total[1] ? 0 : 1;
    return static_cast<int>(rng.uniform_index(2));
  };

  for (;;) {
    std::optional<std::size_t> rarest;
    for (std::size_t l = 0; l < L; ++l)
      if (remaining[l] > 0 && (!rarest || remaining[l] < remaining[*rarest])) rarest = l;
    if (!rarest) break;
    for (auto i : order) {
      if (side[i] != -1) continue;
      if (std::find(rule_labels[i].begin(), rule_labels[i].end(), *rarest) == rule_labels[i].end()) continue;
      assign(i, pick_side(rarest));
    }
  }
  for (auto i : order)
    if (side[i] == -1) assign(i, pick_side(std::nullopt));

  // Repair: greedy single moves, then pairwise swaps, until every label is
  // within tolerance.
  std::vector<double> targets(L);
  for (std::size_t l = 0; l < L; ++l) targets[l] = train_frac * static_cast<double>(counts[l]);
  SplitState state(rule_labels, targets, counts);
  for (std::size_t i = 0; i < n; ++i)
    if (side[i] == 0) state.apply(i, +1);

  auto shifts_for = [&](std::size_t i, long dir, std::vector<std::pair<std::size_t, long>>& out) {
    for (auto l : rule_labels[i]) {
      auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == l; });
      if (it == out.end())
        out.emplace_back(l, dir);
      else
        it->second += dir;
    }
  };

  for (std::size_t guard = 0; state.total() > 0 && guard < 4 * n + 16; ++guard) {
    double best = -1e-12;
    std::optional<std::pair<std::size_t, std::optional<std::size_t>>> best_move;
    std::vector<std::pair<std::size_t, long>> shifts;
    for (std::size_t i = 0; i < n; ++i) {
      shifts.clear();
      shifts_for(i, side[i] == 0 ? -1 : +1, shifts);
      if (const double d = state.delta(shifts); d < best) {
        best = d;
        best_move = {{i, std::nullopt}};
      }
    }
    if (!best_move) {
      for (std::size_t i = 0; i < n; ++i) {
        const bool touches = std::any_of(rule_labels[i].begin(), rule_labels[i].end(),
                                         [&](std::size_t l) { return state.violating(l); });
        if (!touches || side[i] != 0) continue;
        for (std::size_t j = 0; j < n; ++j) {
          if (side[j] != 1) continue;
          shifts.clear();
          shifts_for(i, -1, shifts);
          shifts_for(j, +1, shifts);
          if (const double d = state.delta(shifts); d < best) {
            best = d;
            best_move = {{i, j}};
          }
        }
      }
      for (std::size_t j = 0; j < n && !best_move; ++j) {
        const bool touches = std::any_of(rule_labels[j].begin(), rule_labels[j].end(),
                                         [&](std::size_t l) { return state.violating(l); });
        if (!touches || side[j] != 1) continue;
        for (std::size_t i = 0; i < n; ++i) {
          if (side[i] != 0) continue;
          shifts.clear();
          shifts_for(i, -1, shifts);
          shifts_for(j, +1, shifts);
          if (const double d = state.delta(shifts); d < best) {
            best = d;
            best_move = {{i, j}};
          }
        }
      }
    }
    if (!best_move) break;
    auto flip = [&](std::size_t i) {
      state.apply(i, side[i] == 0 ? -1 : +1);
      side[i] = 1 - side[i];
    };
    flip(best_move->first);
    if (best_move->second) flip(*best_move->second);
  }
  if (state.total() > 0) {
    for (std::size_t l = 0; l < L; ++l)
      if (state.violating(l))
        throw ValidationError("stratified split could not place label " + universe[l].str() + " (train " +
                              std::to_string(state.train_count(l)) + " of " + std::to_string(counts[l]) + ")");
  }

  std::vector<LabeledRule> train, test;
  for (std::size_t i = 0; i < n; ++i) (side[i] == 0 ? train : test).push_back(ds.rules()[i]);
  return {LabeledDataset(std::move(train)), LabeledDataset(std::move(test))};
}

std::string_view to_string(SplitTag tag) noexcept {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::test: return "test";
    case SplitTag::rare: return "rare";
    case SplitTag::none: break;
  }
  return "";
}

std::string to_jsonl(const LabeledDataset& ds, SplitTag tag) {
  std::string out;
  for (const auto& r : ds.rules()) {
    nlohmann::ordered_json row;
    row["sid"] = r.sid;
    row["rule"] = r.rule.raw;
    auto techniques = nlohmann::ordered_json::array();
    for (const auto& t : r.technique_ids) techniques.push_back(t.str());
    row["techniques"] = std::move(techniques);
    if (tag != SplitTag::none) row["split"] = std::string(to_string(tag));
    out += row.dump();
    out += '\n';
  }
  return out;
}

void save_jsonl(const std::filesystem::path& path, const LabeledDataset& ds, SplitTag tag) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << to_jsonl(ds, tag);
}

std::vector<DatasetRow> parse_jsonl(std::string_view text) {
  std::vector<DatasetRow> rows;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed dataset row: ") + e.what(), i + 1);
    }
    try {
      DatasetRow row;
      row.rule.sid = obj.at("sid").get<std::uint64_t>();
      row.rule.rule = parse_rule(obj.at("rule").get<std::string>());
      for (const auto& t : obj.at("techniques")) row.rule.technique_ids.emplace(t.get<std::string>());
      if (row.rule.rule.sid && *row.rule.rule.sid != row.rule.sid)
        throw ValidationError("row sid does not match the rule's sid option");
      if (obj.contains("split")) {
        const auto s = obj["split"].get<std::string>();
        if (s == "train") row.split = SplitTag::train;
        else if (s == "test") row.split = SplitTag::test;
        else if (s == "rare") row.split = SplitTag::rare;
        else throw ValidationError("unknown split '" + s + "'");
      }
      rows.push_back(std::move(row));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), i + 1);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad dataset row: ") + e.what(), i + 1);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), i + 1);
    }
  }
  return rows;
}

LabeledDataset load_jsonl(const std::filesystem::path& path, std::optional<SplitTag> only) {
  std::vector<LabeledRule> rules;
  for (auto& row : parse_jsonl(read_file(path, "dataset")))
    if (!only || row.split == *only) rules.push_back(std::move(row.rule));
  return LabeledDataset(std::move(rules));
}

}  // namespace nidslabel
