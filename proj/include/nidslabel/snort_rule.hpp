#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nidslabel {

enum class RuleAction { alert, log, pass, drop, reject, sdrop };
enum class RuleProtocol { tcp, udp, icmp, ip };
enum class RuleDirection { unidirectional, bidirectional };

std::string_view to_string(RuleAction a) noexcept;
std::string_view to_string(RuleProtocol p) noexcept;
std::string_view to_string(RuleDirection d) noexcept;  // "->" or "<>"

// Address and port expressions are kept as opaque source strings.
struct RuleHeader {
  RuleAction action = RuleAction::alert;
  RuleProtocol protocol = RuleProtocol::tcp;
  std::string src_addr;
  std::string src_port;
  RuleDirection direction = RuleDirection::unidirectional;
  std::string dst_addr;
  std::string dst_port;

  bool operator==(const RuleHeader&) const = default;
};

// `keyword:value;` or a flag-style `keyword;` (value absent). The value is
// stored as written, quotes and escapes included.
struct RuleOption {
  std::string keyword;
  std::optional<std::string> value;

  bool operator==(const RuleOption&) const = default;
};

struct SnortRule {
  RuleHeader header;
  std::vector<RuleOption> options;
  std::optional<std::uint64_t> sid;
  std::optional<std::string> msg;  // unescaped
  std::string raw;

  // Semantic equality: header, option sequence, sid and msg. `raw` is
  // whitespace-sensitive and deliberately not compared.
  bool operator==(const SnortRule& o) const {
    return header == o.header && options == o.options && sid == o.sid && msg == o.msg;
  }

  // First option with the given keyword, if any.
  const RuleOption* find_option(std::string_view keyword) const;
};

// Parses one logical Snort 2.x rule. Throws ParseError.
SnortRule parse_rule(std::string_view text);

struct ParseDiagnostic {
  std::size_t line;  // 1-based line where the logical rule starts
  std::string message;
};

struct RulesetParse {
  std::vector<SnortRule> rules;
  std::vector<ParseDiagnostic> diagnostics;
};

// Skips blank lines and `#` comments, joins backslash continuations and
// collects one diagnostic per malformed logical line.
RulesetParse parse_ruleset(std::string_view text);
RulesetParse parse_ruleset_file(const std::string& path);

// `action protocol direction` followed by each option's keyword and its
// value with quotes stripped, single-space separated.
std::string feature_text(const SnortRule& rule);

// Canonical rule text. Throws ValidationError for a rule with no options.
std::string serialize_rule(const SnortRule& rule);

// Removes backslash escapes and one layer of surrounding double quotes.
std::string unquote_option_value(std::string_view value);

}  // namespace nidslabel
