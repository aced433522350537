#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tierbac/types.hpp"

namespace tierbac {

// One relation template inside a default catalog. `weaker_names` may refer
// to entries declared before or after this one.
struct CatalogEntry {
  std::string name;
  bool reciprocal = false;
  bool public_flag = false;
  std::set<Permission> permissions;
  std::vector<std::string> weaker_names;
  bool operator==(const CatalogEntry&) const = default;
};

// The relation set installed on new actors of one kind.
struct DefaultCatalog {
  std::string kind;
  std::vector<CatalogEntry> entries;
  bool operator==(const DefaultCatalog&) const = default;

  const CatalogEntry* find(std::string_view name) const {
    for (const auto& e : entries)
      if (e.name == name) return &e;
    return nullptr;
  }
};

// Rejects catalogs that could not install cleanly: duplicate or empty entry
// names, a public+reciprocal combination, bad permissions, strength edges
// that leave the catalog or form a cycle.
inline void validate_catalog(const DefaultCatalog& catalog) {
  if (!is_token(catalog.kind))
    throw Error(Errc::invalid_catalog, "catalog kind must be a lowercase token, got '" + catalog.kind + "'");
  std::set<std::string> names;
  for (const auto& e : catalog.entries) {
    if (e.name.empty()) throw Error(Errc::invalid_catalog, "catalog entry with empty name");
    if (!names.insert(e.name).second)
      throw Error(Errc::invalid_catalog, "duplicate catalog entry '" + e.name + "'");
    if (e.reciprocal && e.public_flag)
      throw Error(Errc::invalid_catalog, "entry '" + e.name + "' is both reciprocal and public");
    for (const auto& p : e.permissions) {
      try {
        validate_permission(p);
      } catch (const Error& err) {
        throw Error(Errc::invalid_catalog, "entry '" + e.name + "': " + err.detail());
      }
    }
  }
  for (const auto& e : catalog.entries) {
    for (const auto& w : e.weaker_names) {
      if (!names.count(w))
        throw Error(Errc::invalid_catalog,
                    "entry '" + e.name + "' references unknown weaker entry '" + w + "'");
      if (w == e.name)
        throw Error(Errc::invalid_catalog, "entry '" + e.name + "' lists itself as weaker");
    }
  }
  // cycle check over the induced name graph
  std::map<std::string, int> mark;  // 0 unvisited, 1 on stack, 2 done
  struct Dfs {
    const DefaultCatalog& cat;
    std::map<std::string, int>& mark;
    void walk(const std::string& name) {
      mark[name] = 1;
      const CatalogEntry* e = cat.find(name);
      for (const auto& w : e->weaker_names) {
        int m = mark.count(w) ? mark[w] : 0;
        if (m == 1)
          throw Error(Errc::invalid_catalog, "strength edges form a cycle through '" + w + "'");
        if (m == 0) walk(w);
      }
      mark[name] = 2;
    }
  } dfs{catalog, mark};
  for (const auto& e : catalog.entries)
    if (!mark.count(e.name)) dfs.walk(e.name);
}

}  // namespace tierbac
