#pragma once

#include <cctype>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tierbac/error.hpp"
#include "tierbac/model.hpp"
#include "tierbac/types.hpp"

// Wire mapping shared by the HTTP service and the CLI's machine-readable
// output: domain types to documents, error codes to HTTP statuses, and
// actor references ("7" or a unique name) to ids.
namespace tierbac::wire {

inline int status_for(Errc code) {
  switch (code) {
    case Errc::empty_name:
    case Errc::unknown_kind:
    case Errc::malformed_permission:
    case Errc::malformed_token:
      return 400;
    case Errc::unknown_token:
      return 401;
    case Errc::not_owner:
    case Errc::not_party:
    case Errc::not_receiver:
    case Errc::representation_denied:
      return 403;
    case Errc::unknown_actor:
    case Errc::unknown_relation:
    case Errc::unknown_tie:
    case Errc::unknown_receiver:
    case Errc::relation_not_owned:
      return 404;
    case Errc::duplicate_name:
    case Errc::duplicate_tie:
    case Errc::cycle_detected:
    case Errc::name_collision:
      return 409;
    case Errc::self_tie:
    case Errc::public_reciprocal_conflict:
    case Errc::tie_to_public_relation:
    case Errc::not_pending:
    case Errc::reverse_relation_not_reciprocal:
    case Errc::reverse_relation_not_owned:
    case Errc::cross_owner_edge:
    case Errc::kind_mismatch:
    case Errc::invalid_catalog:
    case Errc::invariant_violation:
      return 422;
    case Errc::syntax_error:
    case Errc::unresolved_name:
    case Errc::model_error:
    case Errc::io_error:
    case Errc::sequence_gap:
    case Errc::corrupt_snapshot:
    case Errc::corrupt_log:
      return 500;
  }
  return 500;
}

inline nlohmann::json error_body(const Error& e) {
  return {{"error", std::string(to_string(e.code()))}, {"detail", e.detail()}};
}

inline nlohmann::json to_json(const Permission& p) {
  return {{"action", p.action}, {"object_class", p.object_class}};
}

inline nlohmann::json to_json(const std::set<Permission>& perms) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : perms) out.push_back(to_json(p));
  return out;
}

inline nlohmann::json to_json(const Decision& d) {
  return {{"allowed", d.allowed}, {"reason", std::string(to_string(d.reason))}};
}

inline nlohmann::json to_json(const Actor& a) {
  return {{"id", a.id.value}, {"name", a.name}, {"kind", a.kind.name}};
}

inline nlohmann::json to_json(const Relation& r) {
  nlohmann::json weaker = nlohmann::json::array();
  for (RelationId w : r.weaker) weaker.push_back(w.value);
  return {{"id", r.id.value},          {"owner", r.owner.value},
          {"name", r.name},            {"reciprocal", r.reciprocal},
          {"public", r.public_flag},   {"permissions", to_json(r.permissions)},
          {"weaker", std::move(weaker)}};
}

inline nlohmann::json to_json(const Tie& t) {
  nlohmann::json out = {{"id", t.id.value},
                        {"sender", t.sender.value},
                        {"relation", t.relation.value},
                        {"receiver", t.receiver.value},
                        {"state", std::string(to_string(t.state))}};
  out["paired_with"] = t.paired_with ? nlohmann::json(t.paired_with->value) : nlohmann::json();
  return out;
}

// Contacts rows carry the relation's name alongside the ids so listings are
// readable without extra lookups.
inline nlohmann::json contacts_json(const Store& store, const ContactList& contacts) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [actor, relation] : contacts) {
    rows.push_back({{"actor", actor.value},
                    {"actor_name", store.actor(actor).name},
                    {"relation", relation.value},
                    {"relation_name", store.relation(relation).name}});
  }
  return rows;
}

// Resolves an actor reference: all digits means an id, anything else a
// name that must match exactly one actor.
inline ActorId resolve_actor_ref(const Store& store, std::string_view ref) {
  if (ref.empty()) throw Error(Errc::unknown_actor, "empty actor reference");
  bool digits = true;
  for (char c : ref)
    if (!std::isdigit(static_cast<unsigned char>(c))) digits = false;
  if (digits) {
    std::uint64_t v = 0;
    for (char c : ref) {
      v = v * 10 + static_cast<std::uint64_t>(c - '0');
      if (v > (std::uint64_t{1} << 62))
        throw Error(Errc::unknown_actor, "actor id out of range");
    }
    ActorId id{v};
    if (!store.has_actor(id)) throw Error(Errc::unknown_actor, "no actor " + std::string(ref));
    return id;
  }
  std::vector<ActorId> found = store.find_actors(std::string(ref));
  if (found.size() == 1) return found[0];
  if (found.empty())
    throw Error(Errc::unknown_actor, "no actor named '" + std::string(ref) + "'");
  throw Error(Errc::unknown_actor,
              "actor name '" + std::string(ref) + "' is ambiguous; use the numeric id");
}

}  // namespace tierbac::wire
