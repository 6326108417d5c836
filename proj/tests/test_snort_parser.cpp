#include <doctest.h>

#include <random>
#include <sstream>

#include "nidslabel/error.hpp"
#include "nidslabel/snort_rule.hpp"
#include "test_support.hpp"

using namespace nidslabel;

namespace {

const char* kSmb = R"(alert tcp $EXTERNAL_NET any -> $HOME_NET 445 (msg:"smb probe"; sid:1000001; rev:1;))";

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

TEST_CASE("parse the smb probe rule") {
  const auto r = parse_rule(kSmb);
  CHECK(r.header.action == RuleAction::alert);
  CHECK(r.header.protocol == RuleProtocol::tcp);
  CHECK(r.header.src_addr == "$EXTERNAL_NET");
  CHECK(r.header.src_port == "any");
  CHECK(r.header.direction == RuleDirection::unidirectional);
  CHECK(r.header.dst_addr == "$HOME_NET");
  CHECK(r.header.dst_port == "445");
  CHECK(r.msg == "smb probe");
  CHECK(r.sid == 1000001u);
  REQUIRE(r.options.size() == 3);
  CHECK(r.options[0].keyword == "msg");
  CHECK(r.options[2] == RuleOption{"rev", "1"});
  CHECK(r.raw == kSmb);
}

TEST_CASE("bidirectional operator") {
  CHECK(parse_rule(R"(alert ip any any <> any any (msg:"x"; sid:2;))").header.direction ==
        RuleDirection::bidirectional);
}

TEST_CASE("header errors") {
  CHECK_THROWS_AS(parse_rule(R"(alert tcp any any -> any (msg:"x";))"), ParseError);
  CHECK_THROWS_AS(parse_rule(R"(alert tcp any any -> any any msg:"x";)"), ParseError);
  CHECK_THROWS_AS(parse_rule(R"(alert tcp any any -> any any (msg:"x;))"), ParseError);
  CHECK_THROWS_AS(parse_rule(R"(alert tcp any any => any any (msg:"x";))"), ParseError);
  CHECK_THROWS_AS(parse_rule(R"(notify tcp any any -> any any (msg:"x";))"), ParseError);
  CHECK_THROWS_AS(parse_rule(R"(alert sctp any any -> any any (msg:"x";))"), ParseError);
  CHECK_THROWS_AS(parse_rule(R"(alert tcp any any -> any any (msg:"x"; sid:-4;))"), ParseError);
}

TEST_CASE("every action and protocol parses") {
  for (const char* a : {"alert", "log", "pass", "drop", "reject", "sdrop"})
    for (const char* p : {"tcp", "udp", "icmp", "ip"}) {
      const auto r = parse_rule(std::string(a) + " " + p + " any any -> any any (sid:1;)");
      CHECK(to_string(r.header.action) == a);
      CHECK(to_string(r.header.protocol) == p);
    }
}

TEST_CASE("address and port expressions stay opaque") {
  const auto r = parse_rule(R"(alert tcp !$HOME_NET [1024:,!8080] -> [10.0.0.0/8, 192.168.0.0/16] $HTTP_PORTS (sid:5;))");
  CHECK(r.header.src_addr == "!$HOME_NET");
  CHECK(r.header.src_port == "[1024:,!8080]");
  CHECK(r.header.dst_addr == "[10.0.0.0/8, 192.168.0.0/16]");
  CHECK(r.header.dst_port == "$HTTP_PORTS");
}

TEST_CASE("quoted semicolons and escapes do not split options") {
  const auto r = parse_rule(R"(alert tcp any any -> any any (msg:"a; b \"c\" d\\"; content:"x|3B|y;z"; nocase; sid:9;))");
  REQUIRE(r.options.size() == 4);
  CHECK(r.msg == R"(a; b "c" d\)");
  CHECK(r.options[1].value == R"("x|3B|y;z")");
  CHECK(r.options[2] == RuleOption{"nocase", std::nullopt});
}

TEST_CASE("unknown keywords are accepted verbatim") {
  const auto r = parse_rule(R"(alert tcp any any -> any any (msg:"x"; frobnicate:17,abc; sid:3;))");
  REQUIRE(r.find_option("frobnicate"));
  CHECK(r.find_option("frobnicate")->value == "17,abc");
}

TEST_CASE("parse_ruleset examples") {
  SUBCASE("two rules and a comment") {
    const auto res = parse_ruleset("# comment\nalert tcp any any -> any any (sid:1;)\n\nalert udp any any -> any 53 (sid:2;)\n");
    CHECK(res.rules.size() == 2);
    CHECK(res.diagnostics.empty());
  }
  SUBCASE("one valid, one malformed") {
    const auto res = parse_ruleset("alert tcp any any -> any any (sid:1;)\n# note\nalert tcp any -> any any (sid:2;)\n");
    CHECK(res.rules.size() == 1);
    REQUIRE(res.diagnostics.size() == 1);
    CHECK(res.diagnostics[0].line == 3);
  }
  SUBCASE("empty") {
    const auto res = parse_ruleset("");
    CHECK(res.rules.empty());
    CHECK(res.diagnostics.empty());
  }
  SUBCASE("continuations are joined and diagnosed at their first line") {
    const auto res = parse_ruleset(
        "alert tcp any any -> any any (msg:\"a\"; \\\n   sid:1;)\n"
        "alert tcp any -> \\\n any any (sid:2;)\n");
    REQUIRE(res.rules.size() == 1);
    CHECK(res.rules[0].sid == 1u);
    REQUIRE(res.diagnostics.size() == 1);
    CHECK(res.diagnostics[0].line == 3);
  }
}

TEST_CASE("feature text") {
  CHECK(feature_text(parse_rule(kSmb)) == "alert tcp -> msg smb probe sid 1000001 rev 1");
  const auto flag = feature_text(parse_rule(R"(alert tcp any any -> any any (content:"abc"; nocase; sid:4;))"));
  const auto words = split_words(flag);
  CHECK(std::count(words.begin(), words.end(), "nocase") == 1);

  const auto a = split_words(feature_text(parse_rule(R"(alert tcp any any -> any 80 (msg:"m"; content:"GET"; sid:10;))")));
  const auto b = split_words(feature_text(parse_rule(R"(alert tcp any any -> any 80 (msg:"m"; content:"GET"; sid:11;))")));
  REQUIRE(a.size() == b.size());
  std::size_t diffs = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) {
      ++diffs;
      CHECK(a[i] == "10");
      CHECK(b[i] == "11");
    }
  CHECK(diffs == 1);
}

TEST_CASE("serialize round trip") {
  const auto r = parse_rule(kSmb);
  CHECK(parse_rule(serialize_rule(r)) == r);

  const auto esc = parse_rule(R"(alert tcp any any -> any any (msg:"say \"hi\" \; ok"; sid:7;))");
  CHECK(esc.msg == R"(say "hi" ; ok)");
  const auto again = parse_rule(serialize_rule(esc));
  CHECK(again == esc);
  CHECK(again.msg == esc.msg);

  SnortRule empty = r;
  empty.options.clear();
  CHECK_THROWS_AS(serialize_rule(empty), ValidationError);
}

TEST_CASE("property: generated quoted contents containing ';' survive splitting") {
  std::mt19937_64 gen(17);
  const std::string alphabet = "ab;: |\"\\()";
  for (int iter = 0; iter < 500; ++iter) {
    std::string plain;
    const auto len = gen() % 12;
    for (std::size_t i = 0; i < len; ++i) plain += alphabet[gen() % alphabet.size()];
    std::string escaped;
    for (char c : plain) {
      if (c == '"' || c == '\\' || c == ';') escaped += '\\';
      escaped += c;
    }
    const auto text = "alert tcp any any -> any any (msg:\"" + escaped + "\"; content:\"" + escaped +
                      "\"; nocase; sid:" + std::to_string(iter) + ";)";
    const auto r = parse_rule(text);
    REQUIRE(r.options.size() == 4);
    CHECK(r.msg == plain);
    CHECK(r.options[1].value == "\"" + escaped + "\"");
    CHECK(unquote_option_value(*r.options[1].value) == plain);
    CHECK(parse_rule(serialize_rule(r)) == r);
  }
}

TEST_CASE("fixture corpus round-trips with zero diagnostics") {
  const auto res = parse_ruleset_file(testing::source_path("data/fixtures/corpus/community.rules").string());
  CHECK(res.diagnostics.empty());
  CHECK(res.rules.size() >= 50);
  for (const auto& r : res.rules) CHECK(parse_rule(serialize_rule(r)) == r);
}

TEST_CASE("malformed fixtures yield one diagnostic each") {
  const auto text = testing::slurp(testing::source_path("data/fixtures/parser/malformed.rules"));
  const auto res = parse_ruleset(text);
  CHECK(res.rules.empty());
  REQUIRE(res.diagnostics.size() == 10);
  for (std::size_t i = 0; i < res.diagnostics.size(); ++i) CHECK(res.diagnostics[i].line == i + 2);
}

TEST_CASE("property: rules plus diagnostics equals logical rule lines") {
  const auto good = testing::slurp(testing::source_path("data/fixtures/corpus/community.rules"));
  const auto bad = testing::slurp(testing::source_path("data/fixtures/parser/malformed.rules"));
  std::mt19937_64 gen(3);
  std::vector<std::string> lines;
  for (const auto* src : {&good, &bad}) {
    std::istringstream in(*src);
    std::string logical;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\\') {
        logical += line.substr(0, line.size() - 1);
        continue;
      }
      logical += line;
      const auto first = logical.find_first_not_of(" \t\r");
      if (first != std::string::npos && logical[first] != '#') lines.push_back(logical);
      logical.clear();
    }
  }
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(lines.begin(), lines.end(), gen);
    std::string text;
    for (const auto& l : lines) text += l + (gen() % 4 == 0 ? "\n\n# c\n" : "\n");
    const auto res = parse_ruleset(text);
    CHECK(res.rules.size() + res.diagnostics.size() == lines.size());
    CHECK(res.diagnostics.size() == 10);
  }
}
