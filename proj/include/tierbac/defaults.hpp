#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tierbac/catalog.hpp"
#include "tierbac/dsl.hpp"
#include "tierbac/error.hpp"
#include "tierbac/model.hpp"

namespace tierbac {

// The relation sets new actors start with, keyed by kind. Deployments can
// replace these with a catalog file (see parse_catalog_file).
inline std::map<std::string, DefaultCatalog> builtin_catalogs() {
  auto perm = [](const char* action, const char* cls) {
    return Permission{action, cls};
  };
  std::map<std::string, DefaultCatalog> out;

  DefaultCatalog user{"user", {}};
  user.entries.push_back({"friend", true, false, {perm("read", "wall"), perm("post", "wall")},
                          {"acquaintance"}});
  user.entries.push_back({"acquaintance", false, false, {perm("read", "profile")}, {"public"}});
  user.entries.push_back({"public", false, true, {}, {}});
  out["user"] = std::move(user);

  DefaultCatalog space{"space", {}};
  space.entries.push_back({"administrator", false, false, {Permission::represent()}, {"member"}});
  space.entries.push_back({"member", false, false, {perm("post", "wall")}, {"follower"}});
  space.entries.push_back({"follower", false, false, {perm("read", "wall")}, {"public"}});
  space.entries.push_back({"partner", false, false, {perm("read", "wall")}, {}});
  space.entries.push_back({"public", false, true, {}, {}});
  out["space"] = std::move(space);

  DefaultCatalog event{"event", {}};
  event.entries.push_back({"organizer", false, false, {Permission::represent()}, {"participant"}});
  event.entries.push_back({"participant", false, false, {perm("post", "agenda")}, {"audience"}});
  event.entries.push_back({"audience", false, false, {perm("read", "agenda")}, {}});
  out["event"] = std::move(event);

  return out;
}

// Parses a catalog override file. Grammar: a `defaults <kind>` line opens a
// block that runs until the next `defaults` line or end of file; inside it,
// ordinary relation/grant/stronger statements describe the entries, with the
// kind's name standing in the owner position:
//
//   defaults user
//   relation user.friend reciprocal
//   grant user.friend read wall
//   relation user.public public
//   stronger user.friend > user.public
//
// Relations must be declared before grants or edges mention them. Throws
// FileError(syntax-error) with the offending line.
inline std::map<std::string, DefaultCatalog> parse_catalog_file(std::string_view source) {
  std::map<std::string, DefaultCatalog> out;
  DefaultCatalog* current = nullptr;

  auto fail = [](int line, int col, const std::string& msg) -> void {
    throw FileError(Errc::syntax_error, line, col, msg);
  };

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    std::size_t nl = source.find('\n', pos);
    std::string_view line =
        source.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    std::vector<dsl::detail::Token> toks = dsl::detail::lex_line(line, line_no);
    if (toks.empty()) {
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
      continue;
    }

    if (toks.front().kind == dsl::detail::TokKind::word && toks.front().text == "defaults") {
      dsl::detail::Cursor cur{toks, 1, line_no, static_cast<int>(line.size())};
      std::string kind = cur.expect_word("an actor kind after 'defaults'");
      cur.expect_done();
      if (out.count(kind)) fail(line_no, toks.front().col, "duplicate defaults block for '" + kind + "'");
      current = &out[kind];
      current->kind = kind;
    } else {
      dsl::detail::Cursor cur{toks, 0, line_no, static_cast<int>(line.size())};
      dsl::StatementBody body = dsl::detail::parse_statement(cur);
      if (!current)
        fail(line_no, toks.front().col, "expected a 'defaults <kind>' line to open a block");

      struct Builder {
        DefaultCatalog& cat;
        int line;
        [[noreturn]] void misuse(const std::string& msg) const {
          throw FileError(Errc::syntax_error, line, 0, msg);
        }
        CatalogEntry& entry(const std::string& owner, const std::string& name) const {
          if (owner != cat.kind)
            misuse("owner must be the kind '" + cat.kind + "' inside its defaults block");
          for (auto& e : cat.entries)
            if (e.name == name) return e;
          misuse("relation '" + name + "' is not declared in this block");
        }
        void operator()(const dsl::RelationDecl& s) const {
          if (s.owner != cat.kind)
            misuse("owner must be the kind '" + cat.kind + "' inside its defaults block");
          if (cat.find(s.name)) misuse("relation '" + s.name + "' declared twice");
          cat.entries.push_back({s.name, s.reciprocal, s.public_flag, {}, {}});
        }
        void operator()(const dsl::Grant& s) const {
          entry(s.owner, s.relation).permissions.insert(Permission{s.action, s.object_class});
        }
        void operator()(const dsl::Stronger& s) const {
          CatalogEntry& stronger = entry(s.owner_a, s.rel_a);
          entry(s.owner_b, s.rel_b);  // must exist too
          for (const auto& w : stronger.weaker_names)
            if (w == s.rel_b) return;
          stronger.weaker_names.push_back(s.rel_b);
        }
        void operator()(const dsl::ActorDecl&) const {
          misuse("only relation/grant/stronger statements are allowed in a catalog file");
        }
        void operator()(const dsl::TieDecl&) const {
          misuse("only relation/grant/stronger statements are allowed in a catalog file");
        }
        void operator()(const dsl::Accept&) const {
          misuse("only relation/grant/stronger statements are allowed in a catalog file");
        }
        void operator()(const dsl::Check&) const {
          misuse("only relation/grant/stronger statements are allowed in a catalog file");
        }
      };
      std::visit(Builder{*current, line_no}, body);
    }

    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }

  for (const auto& [kind, cat] : out) validate_catalog(cat);
  return out;
}

// Arms a store with every builtin catalog so fresh actors of the three
// built-in kinds get their defaults automatically.
inline void configure_builtin_defaults(Store& store) {
  for (auto& [kind, cat] : builtin_catalogs()) store.configure_catalog(std::move(cat));
}

}  // namespace tierbac
