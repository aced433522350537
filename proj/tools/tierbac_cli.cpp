// tierbac — operator CLI for the engine: bootstrap a store, replay .trbac
// scenario files, run decision queries locally or against a remote service.
//
// Exit codes: 0 success (a "denied" decision is a successful query),
// 1 operational error, 2 usage error, 3 failed `check … expect` assertions.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "tierbac/api.hpp"
#include "tierbac/defaults.hpp"
#include "tierbac/dsl.hpp"
#include "tierbac/persist.hpp"
#include "tierbac/tierbac.hpp"

namespace {

using nlohmann::json;
using namespace tierbac;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;
constexpr int kChecksFailed = 3;

struct Options {
  std::string store_path = "tierbac-store";
  std::string remote;  // base URL; empty means local mode
  std::string token;
  bool machine = false;

  bool local() const { return remote.empty(); }
};

void emit(const Options& opt, const json& doc) {
  if (opt.machine) std::cout << doc.dump(2) << "\n";
}

int fail(const Error& e) {
  std::cerr << "error: " << e.what() << "\n";
  return kFailure;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---- remote plumbing ----

json remote_get(const Options& opt, const std::string& path, const httplib::Params& params) {
  httplib::Client client(opt.remote);
  client.set_connection_timeout(5);
  client.set_read_timeout(10);
  httplib::Headers headers;
  if (!opt.token.empty()) headers.emplace("Authorization", "Bearer " + opt.token);
  httplib::Result res = client.Get(path, params, headers);
  if (!res) throw Error(Errc::io_error, "cannot reach " + opt.remote + " (" +
                                            httplib::to_string(res.error()) + ")");
  json doc = json::parse(res->body, nullptr, false);
  if (res->status != 200) {
    if (doc.is_object() && doc.contains("error"))
      throw Error(Errc::io_error, "remote " + std::to_string(res->status) + ": " +
                                      doc["error"].get<std::string>() + ": " +
                                      doc.value("detail", ""));
    throw Error(Errc::io_error, "remote returned status " + std::to_string(res->status));
  }
  if (doc.is_discarded())
    throw Error(Errc::io_error, "remote returned a malformed document");
  return doc;
}

// ---- rendering ----

void render_check(const Options& opt, const json& doc) {
  emit(opt, doc);
  if (!opt.machine) {
    if (doc.at("allowed").get<bool>())
      std::cout << "allowed (" << doc.at("reason").get<std::string>() << ")\n";
    else
      std::cout << "denied\n";
  }
}

void render_contacts(const Options& opt, const json& doc) {
  emit(opt, doc);
  if (!opt.machine) {
    const json& rows = doc.at("contacts");
    if (rows.empty()) {
      std::cout << "no contacts\n";
      return;
    }
    for (const json& row : rows)
      std::cout << row.at("actor_name").get<std::string>() << " (" << row.at("actor")
                << ") via " << row.at("relation_name").get<std::string>() << " ("
                << row.at("relation") << ")\n";
  }
}

void render_effective(const Options& opt, const json& doc) {
  emit(opt, doc);
  if (!opt.machine) {
    const json& perms = doc.at("permissions");
    if (perms.empty()) {
      std::cout << "no permissions\n";
      return;
    }
    for (const json& p : perms)
      std::cout << p.at("action").get<std::string>() << " "
                << p.at("object_class").get<std::string>() << "\n";
  }
}

// ---- subcommand bodies ----

int cmd_init(const Options& opt) {
  PersistentStore::init(opt.store_path);
  emit(opt, {{"initialized", opt.store_path}});
  if (!opt.machine) std::cout << "initialized store at " << opt.store_path << "\n";
  return kOk;
}

int cmd_apply(const Options& opt, const std::string& file) {
  PersistentStore store(opt.store_path);
  std::vector<dsl::Statement> statements = dsl::parse(read_file(file));
  dsl::ScenarioReport report = store.mutate(
      [&](Store& s, const std::uint64_t&) { return dsl::elaborate(statements, s); });

  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"line", c.line},
                      {"agent", c.statement.agent},
                      {"action", c.statement.action},
                      {"object_class", c.statement.object_class},
                      {"owner", c.statement.owner},
                      {"expected", c.statement.expect_allow ? "allow" : "deny"},
                      {"allowed", c.actual.allowed},
                      {"reason", std::string(to_string(c.actual.reason))},
                      {"passed", c.passed()}});
  }
  emit(opt, {{"file", file},
             {"statements_run", report.statements_run},
             {"checks", std::move(checks)},
             {"failures", report.failures()},
             {"version", store.version()}});
  if (!opt.machine) {
    for (const auto& c : report.checks) {
      if (c.passed()) continue;
      std::cout << "line " << c.line << ": check " << c.statement.agent << " "
                << c.statement.action << " " << c.statement.object_class << " on "
                << c.statement.owner << " expected "
                << (c.statement.expect_allow ? "allow" : "deny") << ", got "
                << (c.actual.allowed ? "allow" : "deny") << "\n";
    }
    std::cout << (report.checks.size() - report.failures()) << "/" << report.checks.size()
              << " checks passed\n";
  }
  if (report.failures() > 0) {
    std::cerr << report.failures() << " check expectation(s) failed\n";
    return kChecksFailed;
  }
  return kOk;
}

int cmd_check(const Options& opt, const std::string& agent, const std::string& action,
              const std::string& object_class, const std::string& owner) {
  json doc;
  if (opt.local()) {
    PersistentStore store(opt.store_path);
    doc = store.query([&](const Store& s, std::uint64_t version) {
      ActorId a = wire::resolve_actor_ref(s, agent);
      ActorId o = wire::resolve_actor_ref(s, owner);
      json out = wire::to_json(s.check(a, action, object_class, o));
      out["version"] = version;
      return out;
    });
  } else {
    doc = remote_get(opt, "/check",
                     {{"agent", agent},
                      {"action", action},
                      {"object_class", object_class},
                      {"owner", owner}});
  }
  render_check(opt, doc);
  return kOk;
}

int cmd_contacts(const Options& opt, const std::string& actor,
                 const std::optional<std::uint64_t>& relation) {
  json doc;
  if (opt.local()) {
    PersistentStore store(opt.store_path);
    doc = store.query([&](const Store& s, std::uint64_t version) {
      ActorId a = wire::resolve_actor_ref(s, actor);
      std::optional<RelationId> filter;
      if (relation) filter = RelationId{*relation};
      json out{{"actor", a.value}, {"contacts", wire::contacts_json(s, s.contacts(a, filter))}};
      out["version"] = version;
      return out;
    });
  } else {
    httplib::Params params;
    if (relation) params.emplace("relation", std::to_string(*relation));
    doc = remote_get(opt, "/actors/" + actor + "/contacts", params);
  }
  render_contacts(opt, doc);
  return kOk;
}

int cmd_effective(const Options& opt, const std::string& owner, const std::string& agent) {
  json doc;
  if (opt.local()) {
    PersistentStore store(opt.store_path);
    doc = store.query([&](const Store& s, std::uint64_t version) {
      ActorId o = wire::resolve_actor_ref(s, owner);
      ActorId a = wire::resolve_actor_ref(s, agent);
      json out{{"owner", o.value},
               {"agent", a.value},
               {"permissions", wire::to_json(s.effective_permissions(o, a))}};
      out["version"] = version;
      return out;
    });
  } else {
    doc = remote_get(opt, "/effective", {{"owner", owner}, {"agent", agent}});
  }
  render_effective(opt, doc);
  return kOk;
}

int cmd_defaults_install(const Options& opt, const std::string& actor,
                         const std::string& catalog_file) {
  PersistentStore store(opt.store_path);
  std::map<std::string, DefaultCatalog> catalogs =
      catalog_file.empty() ? builtin_catalogs() : parse_catalog_file(read_file(catalog_file));

  json doc = store.mutate([&](Store& s, const std::uint64_t& version) {
    ActorId id = wire::resolve_actor_ref(s, actor);
    std::string kind = s.actor(id).kind.name;
    auto it = catalogs.find(kind);
    if (it == catalogs.end())
      throw Error(Errc::invalid_catalog, "no catalog for kind '" + kind + "'");
    std::vector<RelationId> installed = s.install_defaults(id, it->second);
    json rels = json::array();
    for (RelationId r : installed) rels.push_back(wire::to_json(s.relation(r)));
    return json{{"actor", id.value}, {"installed", std::move(rels)}, {"version", version}};
  });
  emit(opt, doc);
  if (!opt.machine) {
    std::cout << "installed " << doc.at("installed").size() << " relations:";
    for (const json& r : doc.at("installed")) std::cout << " " << r.at("name").get<std::string>();
    std::cout << "\n";
  }
  return kOk;
}

int cmd_snapshot(const Options& opt) {
  PersistentStore store(opt.store_path);
  SnapshotMeta meta = store.snapshot();
  emit(opt, {{"last_seq", meta.last_seq}});
  if (!opt.machine) std::cout << "snapshot written at seq " << meta.last_seq << "\n";
  return kOk;
}

int cmd_serve(const Options& opt, const std::string& config_file, const std::string& bind,
              int port, bool no_defaults) {
  ServiceConfig cfg;
  std::string catalog_file;
  if (!config_file.empty()) {
    json doc = json::parse(read_file(config_file), nullptr, false);
    if (doc.is_discarded())
      throw Error(Errc::io_error, "config '" + config_file + "' is not a well-formed document");
    cfg = service_config_from_json(doc);
    if (doc.contains("catalog_file")) catalog_file = doc.at("catalog_file").get<std::string>();
    if (doc.value("auto_install_defaults", true) == false) no_defaults = true;
  }
  if (!bind.empty()) cfg.bind_address = bind;
  if (port >= 0) cfg.port = port;

  PersistentStore store(opt.store_path);
  if (!no_defaults) {
    std::map<std::string, DefaultCatalog> catalogs =
        catalog_file.empty() ? builtin_catalogs() : parse_catalog_file(read_file(catalog_file));
    for (auto& [kind, cat] : catalogs) store.configure_catalog(std::move(cat));
  }

  Service service(store, cfg);
  service.start();
  std::cout << "listening on " << service.base_url() << " (store: " << opt.store_path << ")\n";
  service.wait();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tierbac — relationship-based authorization engine"};
  app.require_subcommand(1);

  Options opt;
  app.add_option("--store", opt.store_path, "local store directory")
      ->capture_default_str();
  app.add_option("--remote", opt.remote, "base URL of a running service (query commands only)")
      ->envname("TIERBAC_REMOTE");
  app.add_option("--token", opt.token, "bearer token for --remote")->envname("TIERBAC_TOKEN");
  app.add_flag("--machine", opt.machine, "emit one machine-readable document on stdout");

  CLI::App* init = app.add_subcommand("init", "create a fresh store directory");

  std::string apply_file;
  CLI::App* apply = app.add_subcommand("apply", "run a .trbac policy/scenario file");
  apply->add_option("file", apply_file, "path to the .trbac file")->required();

  std::string q_agent, q_action, q_class, q_owner;
  CLI::App* check = app.add_subcommand("check", "ask whether agent may act on owner's objects");
  check->add_option("agent", q_agent)->required();
  check->add_option("action", q_action)->required();
  check->add_option("object_class", q_class)->required();
  check->add_option("owner", q_owner)->required();

  std::string c_actor;
  std::uint64_t c_relation = 0;  // relation ids start at 1; 0 means "no filter"
  CLI::App* contacts = app.add_subcommand("contacts", "list an actor's accepted outgoing ties");
  contacts->add_option("actor", c_actor)->required();
  contacts->add_option("--relation", c_relation, "filter by relation id");

  std::string e_owner, e_agent;
  CLI::App* effective = app.add_subcommand("effective", "list agent's permissions on owner");
  effective->add_option("owner", e_owner)->required();
  effective->add_option("agent", e_agent)->required();

  CLI::App* defaults = app.add_subcommand("defaults", "default relation catalogs");
  defaults->require_subcommand(1);
  std::string d_actor, d_catalog;
  CLI::App* install = defaults->add_subcommand("install", "install the catalog for an actor's kind");
  install->add_option("actor", d_actor)->required();
  install->add_option("--catalog", d_catalog, "catalog override file");

  CLI::App* snapshot = app.add_subcommand("snapshot", "write a fresh state snapshot");

  std::string s_config, s_bind;
  int s_port = -1;
  bool s_no_defaults = false;
  CLI::App* serve = app.add_subcommand("serve", "run the HTTP service on this store");
  serve->add_option("--config", s_config, "service config file (tokens, bind, anonymous actor)");
  serve->add_option("--bind", s_bind, "bind address (overrides config)");
  serve->add_option("--port", s_port, "port, 0 picks a free one (overrides config)");
  serve->add_flag("--no-defaults", s_no_defaults, "do not auto-install builtin catalogs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  // Mutating and store-management commands need the store files themselves.
  if (!opt.local()) {
    for (const CLI::App* local_only : {init, apply, defaults, snapshot, serve}) {
      if (local_only->parsed()) {
        std::cerr << "usage: '" << local_only->get_name()
                  << "' operates on a local store; drop --remote\n";
        return kUsage;
      }
    }
  }

  try {
    if (init->parsed()) return cmd_init(opt);
    if (apply->parsed()) return cmd_apply(opt, apply_file);
    if (check->parsed()) return cmd_check(opt, q_agent, q_action, q_class, q_owner);
    if (contacts->parsed())
      return cmd_contacts(opt, c_actor,
                          c_relation ? std::optional<std::uint64_t>(c_relation) : std::nullopt);
    if (effective->parsed()) return cmd_effective(opt, e_owner, e_agent);
    if (install->parsed()) return cmd_defaults_install(opt, d_actor, d_catalog);
    if (snapshot->parsed()) return cmd_snapshot(opt);
    if (serve->parsed()) return cmd_serve(opt, s_config, s_bind, s_port, s_no_defaults);
  } catch (const Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
