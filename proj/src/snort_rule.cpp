#include "nidslabel/snort_rule.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "nidslabel/error.hpp"

namespace nidslabel {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Whitespace split that keeps `[a, b]` lists together.
std::vector<std::string> split_header(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '[') ++depth;
    if (c == ']') depth = std::max(0, depth - 1);
    if (is_space(c) && depth == 0) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

template <class E, std::size_t N>
E parse_enum(std::string_view token, const std::pair<std::string_view, E> (&table)[N],
             const char* what) {
  for (const auto& [name, value] : table)
    if (name == token) return value;
  throw ParseError(std::string("unknown ") + what + " '" + std::string(token) + "'");
}

constexpr std::pair<std::string_view, RuleAction> kActions[] = {
    {"alert", RuleAction::alert}, {"log", RuleAction::log},       {"pass", RuleAction::pass},
    {"drop", RuleAction::drop},   {"reject", RuleAction::reject}, {"sdrop", RuleAction::sdrop}};
constexpr std::pair<std::string_view, RuleProtocol> kProtocols[] = {{"tcp", RuleProtocol::tcp},
                                                                    {"udp", RuleProtocol::udp},
                                                                    {"icmp", RuleProtocol::icmp},
                                                                    {"ip", RuleProtocol::ip}};

RuleHeader parse_header(std::string_view text) {
  const auto tokens = split_header(text);
  if (tokens.size() != 7)
    throw ParseError("rule header has " + std::to_string(tokens.size()) + " tokens, expected 7");
  RuleHeader h;
  h.action = parse_enum(tokens[0], kActions, "action");
  h.protocol = parse_enum(tokens[1], kProtocols, "protocol");
  h.src_addr = tokens[2];
  h.src_port = tokens[3];
  if (tokens[4] == "->")
    h.direction = RuleDirection::unidirectional;
  else if (tokens[4] == "<>")
    h.direction = RuleDirection::bidirectional;
  else
    throw ParseError("unknown direction '" + tokens[4] + "'");
  h.dst_addr = tokens[5];
  h.dst_port = tokens[6];
  return h;
}

RuleOption parse_option(std::string_view segment) {
  RuleOption opt;
  const auto colon = segment.find(':');
  if (colon == std::string_view::npos) {
    opt.keyword = std::string(trim(segment));
  } else {
    opt.keyword = std::string(trim(segment.substr(0, colon)));
    opt.value = std::string(trim(segment.substr(colon + 1)));
  }
  if (opt.keyword.empty()) throw ParseError("option with empty keyword");
  if (std::any_of(opt.keyword.begin(), opt.keyword.end(), [](char c) { return is_space(c) || c == '"'; }))
    throw ParseError("malformed option keyword '" + opt.keyword + "'");
  return opt;
}

// Splits the option body on top-level `;`, honoring quotes and escapes.
std::vector<RuleOption> parse_options(std::string_view body) {
  std::vector<RuleOption> options;
  bool in_quote = false;
  bool escaped = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (escaped) {
      escaped = false;
    } else if (c == '\\') {
      escaped = true;
    } else if (c == '"') {
      in_quote = !in_quote;
    } else if (c == ';' && !in_quote) {
      auto seg = trim(body.substr(start, i - start));
      if (!seg.empty()) options.push_back(parse_option(seg));
      start = i + 1;
    }
  }
  if (in_quote || escaped) throw ParseError("unterminated quoted string in rule options");
  if (auto tail = trim(body.substr(start)); !tail.empty()) options.push_back(parse_option(tail));
  return options;
}

std::uint64_t parse_sid(std::string_view value) {
  std::uint64_t sid = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, sid);
  if (value.empty() || ec != std::errc() || ptr != end)
    throw ParseError("sid '" + std::string(value) + "' is not a non-negative integer");
  return sid;
}

}  // namespace

std::string_view to_string(RuleAction a) noexcept {
  for (const auto& [name, value] : kActions)
    if (value == a) return name;
  return "alert";
}

std::string_view to_string(RuleProtocol p) noexcept {
  for (const auto& [name, value] : kProtocols)
    if (value == p) return name;
  return "ip";
}

std::string_view to_string(RuleDirection d) noexcept {
  return d == RuleDirection::bidirectional ? "<>" : "->";
}

const RuleOption* SnortRule::find_option(std::string_view keyword) const {
  for (const auto& o : options)
    if (o.keyword == keyword) return &o;
  return nullptr;
}

std::string unquote_option_value(std::string_view value) {
  value = trim(value);
  if (value.size() >= 2 && value.front() == '"') {
    std::size_t i = 1;
    while (i < value.size() && value[i] != '"') i += value[i] == '\\' ? 2 : 1;
    if (i == value.size() - 1) value = value.substr(1, value.size() - 2);
  }
  std::string out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (value[i] == '\\' && i + 1 < value.size()) {
      const char n = value[i + 1];
      if (n == '"' || n == '\\' || n == ';' || n == ':') {
        out.push_back(n);
        ++i;
        continue;
      }
    }
    out.push_back(value[i]);
  }
  return out;
}

SnortRule parse_rule(std::string_view text) {
  SnortRule rule;
  rule.raw = std::string(text);
  const auto trimmed = trim(text);
  const auto open = trimmed.find('(');
  const auto close = trimmed.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open)
    throw ParseError("missing parenthesized option body");
  if (!trim(trimmed.substr(close + 1)).empty())
    throw ParseError("trailing text after option body");
  rule.header = parse_header(trimmed.substr(0, open));
  rule.options = parse_options(trimmed.substr(open + 1, close - open - 1));
  if (const auto* sid = rule.find_option("sid")) {
    if (!sid->value) throw ParseError("sid option without a value");
    rule.sid = parse_sid(*sid->value);
  }
  if (const auto* msg = rule.find_option("msg")) {
    if (!msg->value) throw ParseError("msg option without a value");
    rule.msg = unquote_option_value(*msg->value);
  }
  return rule;
}

RulesetParse parse_ruleset(std::string_view text) {
  RulesetParse out;
  std::string logical;
  std::size_t logical_start = 0;
  std::size_t line_no = 0;
  bool continuing = false;

  auto flush = [&] {
    if (trim(logical).empty()) return;
    try {
      out.rules.push_back(parse_rule(trim(logical)));
    } catch (const ParseError& e) {
      out.diagnostics.push_back({logical_start, e.what()});
    }
    logical.clear();
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (!continuing) {
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') {
        if (pos > text.size()) break;
        continue;
      }
      logical_start = line_no;
    }
    auto body = line;
    while (!body.empty() && is_space(body.back())) body.remove_suffix(1);
    continuing = !body.empty() && body.back() == '\\';
    if (continuing) body.remove_suffix(1);
    logical.append(body);
    if (!continuing) flush();
    if (pos > text.size()) break;
  }
  if (continuing) flush();
  return out;
}

RulesetParse parse_ruleset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open rules file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ruleset(buf.str());
}

std::string feature_text(const SnortRule& rule) {
  std::string out;
  auto append_words = [&out](std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && is_space(s[i])) ++i;
      std::size_t j = i;
      while (j < s.size() && !is_space(s[j])) ++j;
      if (j > i) {
        if (!out.empty()) out.push_back(' ');
        out.append(s.substr(i, j - i));
      }
      i = j;
    }
  };
  append_words(to_string(rule.header.action));
  append_words(to_string(rule.header.protocol));
  append_words(to_string(rule.header.direction));
  for (const auto& o : rule.options) {
    append_words(o.keyword);
    if (o.value) {
      auto v = unquote_option_value(*o.value);
      std::erase(v, '"');
      append_words(v);
    }
  }
  return out;
}

std::string serialize_rule(const SnortRule& rule) {
  if (rule.options.empty()) throw ValidationError("cannot serialize a rule with no options");
  const auto& h = rule.header;
  std::string out;
  out += to_string(h.action);
  out += ' ';
  out += to_string(h.protocol);
  for (const auto* field : {&h.src_addr, &h.src_port}) out += ' ' + *field;
  out += ' ';
  out += to_string(h.direction);
  for (const auto* field : {&h.dst_addr, &h.dst_port}) out += ' ' + *field;
  out += " (";
  for (std::size_t i = 0; i < rule.options.size(); ++i) {
    const auto& o = rule.options[i];
    if (i) out += ' ';
    out += o.keyword;
    if (o.value) out += ':' + *o.value;
    out += ';';
  }
  out += ')';
  return out;
}

}  // namespace nidslabel
