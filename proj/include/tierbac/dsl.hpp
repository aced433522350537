#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tierbac/error.hpp"
#include "tierbac/model.hpp"
#include "tierbac/types.hpp"

// The .trbac policy/scenario language: one statement per line, `#` comments,
// double quotes around names containing spaces. parse() is pure; elaborate()
// drives a store and evaluates `check` assertions.
namespace tierbac::dsl {

struct ActorDecl {
  std::string name;
  std::string kind;
  bool operator==(const ActorDecl&) const = default;
};

struct RelationDecl {
  std::string owner;
  std::string name;
  bool reciprocal = false;
  bool public_flag = false;
  bool operator==(const RelationDecl&) const = default;
};

struct Grant {
  std::string owner;
  std::string relation;
  std::string action;
  std::string object_class;
  bool operator==(const Grant&) const = default;
};

struct Stronger {
  std::string owner_a;
  std::string rel_a;
  std::string owner_b;
  std::string rel_b;
  bool operator==(const Stronger&) const = default;
};

struct TieDecl {
  std::string sender;
  std::string relation;
  std::string receiver;
  bool operator==(const TieDecl&) const = default;
};

// `accept <receiver> <sender>.<relation> with <reverse>` — the pending tie
// is addressed by its sender and relation, never by numeric id, so fixture
// files do not depend on id assignment order.
struct Accept {
  std::string receiver;
  std::string sender;
  std::string sender_relation;
  std::string reverse_relation;
  bool operator==(const Accept&) const = default;
};

struct Check {
  std::string agent;
  std::string action;
  std::string object_class;
  std::string owner;
  bool expect_allow = true;
  bool operator==(const Check&) const = default;
};

using StatementBody =
    std::variant<ActorDecl, RelationDecl, Grant, Stronger, TieDecl, Accept, Check>;

struct Statement {
  int line = 0;
  StatementBody body;
};

// Statements compare by content; the source line is layout, not meaning.
inline bool same_statements(const std::vector<Statement>& a, const std::vector<Statement>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].body != b[i].body) return false;
  return true;
}

namespace detail {

enum class TokKind { word, quoted, dot, arrow, colon, gt, star, end };

struct Token {
  TokKind kind = TokKind::end;
  std::string text;
  int col = 0;  // 1-based column of the first character
};

inline bool word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

inline std::vector<Token> lex_line(std::string_view line, int line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto fail = [&](std::size_t col, const std::string& msg) {
    throw FileError(Errc::syntax_error, line_no, static_cast<int>(col + 1), msg);
  };
  while (i < line.size()) {
    char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    if (c == '#') break;  // comment to end of line
    std::size_t start = i;
    if (c == '"') {
      std::string text;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        char q = line[i];
        if (q == '\\' && i + 1 < line.size() && (line[i + 1] == '"' || line[i + 1] == '\\')) {
          text.push_back(line[i + 1]);
          i += 2;
          continue;
        }
        if (q == '"') {
          closed = true;
          ++i;
          break;
        }
        text.push_back(q);
        ++i;
      }
      if (!closed) fail(start, "unterminated quoted name");
      out.push_back({TokKind::quoted, std::move(text), static_cast<int>(start + 1)});
      continue;
    }
    if (c == '-' && i + 1 < line.size() && line[i + 1] == '>') {
      out.push_back({TokKind::arrow, "->", static_cast<int>(start + 1)});
      i += 2;
      continue;
    }
    if (c == '.') {
      out.push_back({TokKind::dot, ".", static_cast<int>(start + 1)});
      ++i;
      continue;
    }
    if (c == ':') {
      out.push_back({TokKind::colon, ":", static_cast<int>(start + 1)});
      ++i;
      continue;
    }
    if (c == '>') {
      out.push_back({TokKind::gt, ">", static_cast<int>(start + 1)});
      ++i;
      continue;
    }
    if (c == '*') {
      out.push_back({TokKind::star, "*", static_cast<int>(start + 1)});
      ++i;
      continue;
    }
    if (word_char(c)) {
      std::string text;
      while (i < line.size()) {
        char w = line[i];
        if (word_char(w)) {
          text.push_back(w);
          ++i;
          continue;
        }
        // '-' joins a word only when another word character follows, so
        // "friend-of" is one token while "Alice->Bob" still splits.
        if (w == '-' && i + 1 < line.size() && word_char(line[i + 1])) {
          text.push_back(w);
          ++i;
          continue;
        }
        break;
      }
      out.push_back({TokKind::word, std::move(text), static_cast<int>(start + 1)});
      continue;
    }
    fail(start, std::string("unexpected character '") + c + "'");
  }
  return out;
}

// Cursor over one line's tokens; all expect_* helpers throw syntax-error
// with the column just past the previous token when input runs out.
struct Cursor {
  const std::vector<Token>& toks;
  std::size_t pos = 0;
  int line_no;
  int line_len;

  bool at_end() const { return pos >= toks.size(); }

  int error_col() const {
    if (pos < toks.size()) return toks[pos].col;
    if (!toks.empty()) {
      const Token& last = toks.back();
      return last.col + static_cast<int>(last.text.size());
    }
    return line_len + 1;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FileError(Errc::syntax_error, line_no, error_col(), msg);
  }

  const Token& peek() const {
    if (at_end()) fail("unexpected end of statement");
    return toks[pos];
  }

  Token take() {
    const Token& t = peek();
    ++pos;
    return t;
  }

  std::string expect_name(const std::string& what) {
    const Token& t = peek();
    if (t.kind != TokKind::word && t.kind != TokKind::quoted) fail("expected " + what);
    return take().text;
  }

  std::string expect_word(const std::string& what) {
    if (peek().kind != TokKind::word) fail("expected " + what);
    return take().text;
  }

  void expect(TokKind kind, const std::string& what) {
    if (peek().kind != kind) fail("expected " + what);
    ++pos;
  }

  std::string expect_class() {
    const Token& t = peek();
    if (t.kind == TokKind::star) {
      ++pos;
      return std::string(kWildcardClass);
    }
    if (t.kind == TokKind::word) return take().text;
    fail("expected an object class or '*'");
  }

  // <owner> . <name>
  std::pair<std::string, std::string> expect_dotted(const std::string& what) {
    std::string owner = expect_name("an owner name before '.'");
    expect(TokKind::dot, "'.' in " + what);
    std::string name = expect_name("a relation name after '.'");
    return {std::move(owner), std::move(name)};
  }

  void expect_done() {
    if (!at_end()) fail("unexpected token '" + toks[pos].text + "' after a complete statement");
  }
};

inline StatementBody parse_statement(Cursor& cur) {
  std::string head = cur.expect_word("a statement keyword");
  if (head == "actor") {
    ActorDecl s;
    s.name = cur.expect_name("an actor name");
    s.kind = cur.expect_word("an actor kind");
    cur.expect_done();
    return s;
  }
  if (head == "relation") {
    RelationDecl s;
    auto [owner, name] = cur.expect_dotted("a relation declaration");
    s.owner = std::move(owner);
    s.name = std::move(name);
    while (!cur.at_end()) {
      std::string flag = cur.expect_word("'reciprocal' or 'public'");
      if (flag == "reciprocal" && !s.reciprocal)
        s.reciprocal = true;
      else if (flag == "public" && !s.public_flag)
        s.public_flag = true;
      else
        cur.fail("expected 'reciprocal' or 'public', each at most once");
    }
    return s;
  }
  if (head == "grant") {
    Grant s;
    auto [owner, rel] = cur.expect_dotted("a grant target");
    s.owner = std::move(owner);
    s.relation = std::move(rel);
    s.action = cur.expect_word("an action");
    s.object_class = cur.expect_class();
    cur.expect_done();
    return s;
  }
  if (head == "stronger") {
    Stronger s;
    auto [oa, ra] = cur.expect_dotted("the stronger relation");
    cur.expect(TokKind::gt, "'>' between the two relations");
    auto [ob, rb] = cur.expect_dotted("the weaker relation");
    s.owner_a = std::move(oa);
    s.rel_a = std::move(ra);
    s.owner_b = std::move(ob);
    s.rel_b = std::move(rb);
    cur.expect_done();
    return s;
  }
  if (head == "tie") {
    TieDecl s;
    s.sender = cur.expect_name("a sender name");
    cur.expect(TokKind::arrow, "'->' after the sender");
    s.receiver = cur.expect_name("a receiver name");
    cur.expect(TokKind::colon, "':' before the relation name");
    s.relation = cur.expect_name("a relation name after ':'");
    cur.expect_done();
    return s;
  }
  if (head == "accept") {
    Accept s;
    s.receiver = cur.expect_name("the accepting receiver's name");
    auto [sender, rel] = cur.expect_dotted("the pending tie reference");
    s.sender = std::move(sender);
    s.sender_relation = std::move(rel);
    std::string kw = cur.expect_word("'with'");
    if (kw != "with") cur.fail("expected 'with'");
    s.reverse_relation = cur.expect_name("the receiver's reverse relation");
    cur.expect_done();
    return s;
  }
  if (head == "check") {
    Check s;
    s.agent = cur.expect_name("an agent name");
    s.action = cur.expect_word("an action");
    s.object_class = cur.expect_class();
    std::string on = cur.expect_word("'on'");
    if (on != "on") cur.fail("expected 'on'");
    s.owner = cur.expect_name("an owner name");
    std::string expect_kw = cur.expect_word("'expect'");
    if (expect_kw != "expect") cur.fail("expected 'expect'");
    std::string verdict = cur.expect_word("'allow' or 'deny'");
    if (verdict == "allow")
      s.expect_allow = true;
    else if (verdict == "deny")
      s.expect_allow = false;
    else
      cur.fail("expected 'allow' or 'deny'");
    cur.expect_done();
    return s;
  }
  throw FileError(Errc::syntax_error, cur.line_no,
                  cur.toks.empty() ? 1 : cur.toks.front().col,
                  "unknown statement '" + head + "'");
}

inline std::string quote_if_needed(const std::string& name) {
  bool plain = !name.empty();
  for (std::size_t i = 0; plain && i < name.size(); ++i) {
    char c = name[i];
    if (word_char(c)) continue;
    if (c == '-' && i > 0 && i + 1 < name.size() && word_char(name[i + 1])) continue;
    plain = false;
  }
  if (plain && word_char(name[0])) return name;
  std::string out = "\"";
  for (char c : name) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

// Parses a whole .trbac source. Throws FileError(syntax-error) with the line
// and column of the first problem; never returns a partial list.
inline std::vector<Statement> parse(std::string_view source) {
  std::vector<Statement> out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    std::size_t nl = source.find('\n', pos);
    std::string_view line =
        source.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    std::vector<detail::Token> toks = detail::lex_line(line, line_no);
    if (!toks.empty()) {
      detail::Cursor cur{toks, 0, line_no, static_cast<int>(line.size())};
      StatementBody body = detail::parse_statement(cur);
      out.push_back({line_no, std::move(body)});
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

// Canonical text form; parse(print(v)) is structurally identical to v.
inline std::string print(const std::vector<Statement>& statements) {
  using namespace detail;
  std::string out;
  for (const Statement& st : statements) {
    struct Printer {
      std::string& out;
      void operator()(const ActorDecl& s) {
        out += "actor " + quote_if_needed(s.name) + " " + s.kind;
      }
      void operator()(const RelationDecl& s) {
        out += "relation " + quote_if_needed(s.owner) + "." + quote_if_needed(s.name);
        if (s.reciprocal) out += " reciprocal";
        if (s.public_flag) out += " public";
      }
      void operator()(const Grant& s) {
        out += "grant " + quote_if_needed(s.owner) + "." + quote_if_needed(s.relation) + " " +
               s.action + " " + s.object_class;
      }
      void operator()(const Stronger& s) {
        out += "stronger " + quote_if_needed(s.owner_a) + "." + quote_if_needed(s.rel_a) + " > " +
               quote_if_needed(s.owner_b) + "." + quote_if_needed(s.rel_b);
      }
      void operator()(const TieDecl& s) {
        out += "tie " + quote_if_needed(s.sender) + " -> " + quote_if_needed(s.receiver) + " : " +
               quote_if_needed(s.relation);
      }
      void operator()(const Accept& s) {
        out += "accept " + quote_if_needed(s.receiver) + " " + quote_if_needed(s.sender) + "." +
               quote_if_needed(s.sender_relation) + " with " +
               quote_if_needed(s.reverse_relation);
      }
      void operator()(const Check& s) {
        out += "check " + quote_if_needed(s.agent) + " " + s.action + " " + s.object_class +
               " on " + quote_if_needed(s.owner) + " expect " +
               (s.expect_allow ? "allow" : "deny");
      }
    };
    std::visit(Printer{out}, st.body);
    out += "\n";
  }
  return out;
}

struct CheckOutcome {
  int line = 0;
  Check statement;
  Decision actual;
  bool passed() const { return actual.allowed == statement.expect_allow; }
};

struct ScenarioReport {
  std::size_t statements_run = 0;
  std::vector<CheckOutcome> checks;

  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& c : checks)
      if (!c.passed()) ++n;
    return n;
  }
  bool all_passed() const { return failures() == 0; }
};

namespace detail {

inline ActorId resolve_actor(const Store& store, const std::string& name, int line) {
  std::vector<ActorId> found = store.find_actors(name);
  if (found.size() == 1) return found[0];
  if (found.empty())
    throw FileError(Errc::unresolved_name, line, 0, "no actor named '" + name + "'");
  throw FileError(Errc::unresolved_name, line, 0,
                  "actor name '" + name + "' is ambiguous (" + std::to_string(found.size()) +
                      " matches)");
}

inline RelationId resolve_relation(const Store& store, ActorId owner, const std::string& owner_name,
                                   const std::string& rel, int line) {
  std::optional<RelationId> id = store.find_relation(owner, rel);
  if (!id)
    throw FileError(Errc::unresolved_name, line, 0,
                    "actor '" + owner_name + "' owns no relation named '" + rel + "'");
  return *id;
}

}  // namespace detail

// Runs statements against the store in file order. `check` statements are
// recorded as pass/fail outcomes; everything else mutates. A model error
// aborts elaboration at that statement (earlier mutations stay applied).
inline ScenarioReport elaborate(const std::vector<Statement>& statements, Store& store) {
  ScenarioReport report;
  for (const Statement& st : statements) {
    const int line = st.line;
    try {
      struct Runner {
        Store& store;
        ScenarioReport& report;
        int line;

        void operator()(const ActorDecl& s) { store.create_actor(s.name, ActorKind{s.kind}); }

        void operator()(const RelationDecl& s) {
          ActorId owner = detail::resolve_actor(store, s.owner, line);
          store.define_relation(owner, s.name, s.reciprocal, s.public_flag);
        }

        void operator()(const Grant& s) {
          ActorId owner = detail::resolve_actor(store, s.owner, line);
          RelationId rel = detail::resolve_relation(store, owner, s.owner, s.relation, line);
          store.grant_permission(ActingPair::self(owner), rel,
                                 Permission{s.action, s.object_class});
        }

        void operator()(const Stronger& s) {
          ActorId oa = detail::resolve_actor(store, s.owner_a, line);
          ActorId ob = detail::resolve_actor(store, s.owner_b, line);
          RelationId a = detail::resolve_relation(store, oa, s.owner_a, s.rel_a, line);
          RelationId b = detail::resolve_relation(store, ob, s.owner_b, s.rel_b, line);
          store.add_strength_edge(ActingPair::self(oa), a, b);
        }

        void operator()(const TieDecl& s) {
          ActorId sender = detail::resolve_actor(store, s.sender, line);
          ActorId receiver = detail::resolve_actor(store, s.receiver, line);
          RelationId rel = detail::resolve_relation(store, sender, s.sender, s.relation, line);
          store.add_tie(ActingPair::self(sender), rel, receiver);
        }

        void operator()(const Accept& s) {
          ActorId receiver = detail::resolve_actor(store, s.receiver, line);
          ActorId sender = detail::resolve_actor(store, s.sender, line);
          RelationId rel =
              detail::resolve_relation(store, sender, s.sender, s.sender_relation, line);
          std::optional<TieId> tie = store.find_live_tie(sender, rel, receiver);
          if (!tie)
            throw FileError(Errc::unresolved_name, line, 0,
                            "no tie from '" + s.sender + "' to '" + s.receiver +
                                "' with relation '" + s.sender_relation + "'");
          RelationId reverse =
              detail::resolve_relation(store, receiver, s.receiver, s.reverse_relation, line);
          store.accept_tie(ActingPair::self(receiver), *tie, reverse);
        }

        void operator()(const Check& s) {
          ActorId agent = detail::resolve_actor(store, s.agent, line);
          ActorId owner = detail::resolve_actor(store, s.owner, line);
          Decision d = store.check(agent, s.action, s.object_class, owner);
          report.checks.push_back({line, s, d});
        }
      };
      std::visit(Runner{store, report, line}, st.body);
    } catch (const FileError&) {
      throw;
    } catch (const Error& e) {
      throw FileError(Errc::model_error, line, e.code(), e.detail());
    }
    ++report.statements_run;
  }
  return report;
}

// Convenience: parse then elaborate.
inline ScenarioReport run(std::string_view source, Store& store) {
  return elaborate(parse(source), store);
}

}  // namespace tierbac::dsl
