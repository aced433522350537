#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "tierbac/error.hpp"
#include "tierbac/model.hpp"
#include "tierbac/persist.hpp"
#include "tierbac/types.hpp"
#include "tierbac/wire.hpp"

namespace tierbac {

// Static service configuration. The token table maps opaque bearer tokens
// to actor ids; ids may be provisioned before the actors exist (a fresh
// store has none yet). When `anonymous_actor` is set, requests without an
// Authorization header act as that actor; otherwise they get 401.
struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  int port = 0;  // 0 picks a free port; see Service::port()
  std::map<std::string, std::uint64_t> tokens;
  std::optional<std::uint64_t> anonymous_actor;
};

inline ServiceConfig service_config_from_json(const nlohmann::json& doc) {
  try {
    ServiceConfig cfg;
    cfg.bind_address = doc.value("bind", cfg.bind_address);
    cfg.port = doc.value("port", cfg.port);
    if (doc.contains("tokens"))
      for (const auto& [token, id] : doc.at("tokens").items())
        cfg.tokens[token] = id.get<std::uint64_t>();
    if (doc.contains("anonymous_actor") && !doc.at("anonymous_actor").is_null())
      cfg.anonymous_actor = doc.at("anonymous_actor").get<std::uint64_t>();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::io_error, std::string("bad service config: ") + e.what());
  }
}

// HTTP decision/administration service over one PersistentStore. Reads run
// under the store's shared lock against a consistent (state, version) pair;
// mutations hold the writer lock across validate + journal append + apply,
// so a 2xx means the event is durable. Every response body carries the
// version (last event seq) it was computed against.
class Service {
 public:
  Service(PersistentStore& store, ServiceConfig config)
      : store_(store), config_(std::move(config)) {
    wire_routes();
  }

  ~Service() { stop(); }
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void start() {
    if (config_.port == 0) {
      port_ = server_.bind_to_any_port(config_.bind_address);
      if (port_ < 0)
        throw Error(Errc::io_error, "cannot bind to " + config_.bind_address);
    } else {
      if (!server_.bind_to_port(config_.bind_address, config_.port))
        throw Error(Errc::io_error, "cannot bind to " + config_.bind_address + ":" +
                                        std::to_string(config_.port));
      port_ = config_.port;
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  // Blocks until the server stops (for foreground `serve`).
  void wait() {
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  const std::string& host() const { return config_.bind_address; }
  std::string base_url() const { return "http://" + host() + ":" + std::to_string(port()); }

 private:
  struct Session {
    ActorId agent;
    ActorId principal;
    ActingPair acting() const { return {agent, principal}; }
  };

  // Token table lookup plus X-Acting-As resolution. Representation is
  // re-validated against current state on every request — a removed
  // delegate tie takes effect immediately.
  Session authenticate(const httplib::Request& req, const Store& store) const {
    ActorId agent;
    if (req.has_header("Authorization")) {
      std::string auth = req.get_header_value("Authorization");
      const std::string prefix = "Bearer ";
      if (auth.rfind(prefix, 0) != 0)
        throw Error(Errc::unknown_token, "expected 'Authorization: Bearer <token>'");
      auto it = config_.tokens.find(auth.substr(prefix.size()));
      if (it == config_.tokens.end()) throw Error(Errc::unknown_token, "unrecognized token");
      agent = ActorId{it->second};
    } else if (config_.anonymous_actor) {
      agent = ActorId{*config_.anonymous_actor};
    } else {
      throw Error(Errc::unknown_token, "missing bearer token");
    }
    Session session{agent, agent};
    if (req.has_header("X-Acting-As")) {
      session.principal = wire::resolve_actor_ref(store, req.get_header_value("X-Acting-As"));
      store.resolve_acting(session.acting());  // throws representation-denied
    }
    return session;
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    nlohmann::json doc = nlohmann::json::parse(req.body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
      throw nlohmann::json::other_error::create(501, "request body is not an object", nullptr);
    return doc;
  }

  static std::uint64_t parse_u64(const std::string& raw, const char* what) {
    if (raw.empty())
      throw nlohmann::json::other_error::create(501, std::string(what) + " must be numeric",
                                                nullptr);
    std::uint64_t v = 0;
    for (char c : raw) {
      if (c < '0' || c > '9')
        throw nlohmann::json::other_error::create(501, std::string(what) + " must be numeric",
                                                  nullptr);
      v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return v;
  }

  static std::uint64_t path_id(const httplib::Request& req) {
    return parse_u64(req.path_params.at("id"), "path id");
  }

  static void send(httplib::Response& res, int status, nlohmann::json body) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
  }

  // fn: (Store&, const uint64_t& version, const Session&) -> json body.
  // The version reference reads post-mutation once fn has run the op.
  template <class F>
  void run_mutation(const httplib::Request& req, httplib::Response& res, int success, F fn) {
    try {
      store_.mutate([&](Store& s, const std::uint64_t& version) {
        Session session = authenticate(req, s);
        nlohmann::json body = fn(s, version, session);
        body["version"] = version;
        send(res, success, std::move(body));
      });
    } catch (const Error& e) {
      send(res, wire::status_for(e.code()), wire::error_body(e));
    } catch (const nlohmann::json::exception& e) {
      send(res, 400, {{"error", "malformed-request"}, {"detail", e.what()}});
    }
  }

  template <class F>
  void run_query(const httplib::Request& req, httplib::Response& res, F fn) {
    try {
      store_.query([&](const Store& s, std::uint64_t version) {
        Session session = authenticate(req, s);
        nlohmann::json body = fn(s, version, session);
        body["version"] = version;
        send(res, 200, std::move(body));
      });
    } catch (const Error& e) {
      send(res, wire::status_for(e.code()), wire::error_body(e));
    } catch (const nlohmann::json::exception& e) {
      send(res, 400, {{"error", "malformed-request"}, {"detail", e.what()}});
    }
  }

  static std::string required_param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name))
      throw nlohmann::json::other_error::create(
          501, std::string("missing query parameter '") + name + "'", nullptr);
    return req.get_param_value(name);
  }

  void wire_routes() {
    using nlohmann::json;

    server_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      send(res, 200, {{"status", "ok"}, {"version", store_.version()}});
    });

    server_.Post("/actors", [this](const httplib::Request& req, httplib::Response& res) {
      run_mutation(req, res, 201, [&](Store& s, const std::uint64_t&, const Session&) {
        json body = parse_body(req);
        ActorId id = s.create_actor(body.at("name").get<std::string>(),
                                    ActorKind{body.at("kind").get<std::string>()});
        return json{{"actor", wire::to_json(s.actor(id))}};
      });
    });

    // Defining a relation is reserved to the owner (or a representative):
    // the session must resolve to the actor in the path.
    server_.Post("/actors/:id/relations",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   run_mutation(req, res, 201, [&](Store& s, const std::uint64_t&,
                                                   const Session& session) {
                     ActorId owner =
                         wire::resolve_actor_ref(s, req.path_params.at("id"));
                     if (session.principal != owner)
                       s.resolve_acting({session.agent, owner});  // representation-denied unless allowed
                     json body = parse_body(req);
                     RelationId id = s.define_relation(owner, body.at("name").get<std::string>(),
                                                       body.value("reciprocal", false),
                                                       body.value("public", false));
                     return json{{"relation", wire::to_json(s.relation(id))}};
                   });
                 });

    server_.Post("/relations/:id/permissions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   run_mutation(req, res, 200, [&](Store& s, const std::uint64_t&,
                                                   const Session& session) {
                     RelationId rel{path_id(req)};
                     json body = parse_body(req);
                     Permission p{body.at("action").get<std::string>(),
                                  body.at("object_class").get<std::string>()};
                     s.grant_permission(session.acting(), rel, p);
                     return json{{"relation", wire::to_json(s.relation(rel))}};
                   });
                 });

    server_.Delete("/relations/:id/permissions",
                   [this](const httplib::Request& req, httplib::Response& res) {
                     run_mutation(req, res, 200, [&](Store& s, const std::uint64_t&,
                                                     const Session& session) {
                       RelationId rel{path_id(req)};
                       json body = parse_body(req);
                       Permission p{body.at("action").get<std::string>(),
                                    body.at("object_class").get<std::string>()};
                       s.revoke_permission(session.acting(), rel, p);
                       return json{{"relation", wire::to_json(s.relation(rel))}};
                     });
                   });

    server_.Post("/relations/:id/stronger",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   run_mutation(req, res, 200, [&](Store& s, const std::uint64_t&,
                                                   const Session& session) {
                     RelationId stronger{path_id(req)};
                     json body = parse_body(req);
                     RelationId weaker{body.at("weaker").get<std::uint64_t>()};
                     s.add_strength_edge(session.acting(), stronger, weaker);
                     return json{{"relation", wire::to_json(s.relation(stronger))}};
                   });
                 });

    server_.Post("/ties", [this](const httplib::Request& req, httplib::Response& res) {
      run_mutation(req, res, 201, [&](Store& s, const std::uint64_t&, const Session& session) {
        json body = parse_body(req);
        RelationId rel{body.at("relation").get<std::uint64_t>()};
        ActorId receiver = body.at("receiver").is_number_unsigned()
                               ? ActorId{body.at("receiver").get<std::uint64_t>()}
                               : wire::resolve_actor_ref(s, body.at("receiver").get<std::string>());
        auto [id, state] = s.add_tie(session.acting(), rel, receiver);
        (void)state;
        return json{{"tie", wire::to_json(s.tie(id))}};
      });
    });

    server_.Post("/ties/:id/accept", [this](const httplib::Request& req, httplib::Response& res) {
      run_mutation(req, res, 200, [&](Store& s, const std::uint64_t&, const Session& session) {
        TieId tie{path_id(req)};
        json body = parse_body(req);
        RelationId reverse{body.at("reverse_relation").get<std::uint64_t>()};
        TieId reverse_tie = s.accept_tie(session.acting(), tie, reverse);
        return json{{"tie", wire::to_json(s.tie(tie))},
                    {"reverse_tie", wire::to_json(s.tie(reverse_tie))}};
      });
    });

    server_.Post("/ties/:id/reject", [this](const httplib::Request& req, httplib::Response& res) {
      run_mutation(req, res, 200, [&](Store& s, const std::uint64_t&, const Session& session) {
        TieId tie{path_id(req)};
        s.reject_tie(session.acting(), tie);
        return json{{"ok", true}};
      });
    });

    server_.Delete("/ties/:id", [this](const httplib::Request& req, httplib::Response& res) {
      run_mutation(req, res, 200, [&](Store& s, const std::uint64_t&, const Session& session) {
        TieId tie{path_id(req)};
        s.remove_tie(session.acting(), tie);
        return json{{"ok", true}};
      });
    });

    // A contact list is visible to its owner and the owner's representatives
    // only; the check is the same acting rule mutations use.
    server_.Get("/actors/:id/contacts",
                [this](const httplib::Request& req, httplib::Response& res) {
                  run_query(req, res, [&](const Store& s, std::uint64_t, const Session& session) {
                    ActorId actor = wire::resolve_actor_ref(s, req.path_params.at("id"));
                    s.resolve_acting({session.agent, actor});
                    std::optional<RelationId> filter;
                    if (req.has_param("relation"))
                      filter = RelationId{
                          parse_u64(req.get_param_value("relation"), "relation parameter")};
                    ContactList contacts = s.contacts(actor, filter);
                    bool truncated = contacts.size() > kContactsPageSize;
                    if (truncated) contacts.resize(kContactsPageSize);
                    json out{{"actor", actor.value},
                             {"contacts", wire::contacts_json(s, contacts)}};
                    if (truncated) out["truncated"] = true;
                    return out;
                  });
                });

    server_.Get("/check", [this](const httplib::Request& req, httplib::Response& res) {
      run_query(req, res, [&](const Store& s, std::uint64_t, const Session&) {
        ActorId agent = wire::resolve_actor_ref(s, required_param(req, "agent"));
        ActorId owner = wire::resolve_actor_ref(s, required_param(req, "owner"));
        Decision d = s.check(agent, required_param(req, "action"),
                             required_param(req, "object_class"), owner);
        return wire::to_json(d);
      });
    });

    server_.Get("/effective", [this](const httplib::Request& req, httplib::Response& res) {
      run_query(req, res, [&](const Store& s, std::uint64_t, const Session&) {
        ActorId owner = wire::resolve_actor_ref(s, required_param(req, "owner"));
        ActorId agent = wire::resolve_actor_ref(s, required_param(req, "agent"));
        return nlohmann::json{{"owner", owner.value},
                              {"agent", agent.value},
                              {"permissions", wire::to_json(s.effective_permissions(owner, agent))}};
      });
    });
  }

  static constexpr std::size_t kContactsPageSize = 1000;

  PersistentStore& store_;
  ServiceConfig config_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace tierbac
