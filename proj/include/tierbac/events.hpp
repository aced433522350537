#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "tierbac/types.hpp"

namespace tierbac {

// One event per committed mutation. Payloads carry the mutation's full
// arguments, assigned ids included, so a log replays without consulting
// anything beyond the log itself.

struct ActorCreated {
  ActorId actor;
  std::string name;
  std::string kind;
};

struct RelationDefined {
  RelationId relation;
  ActorId owner;
  std::string name;
  bool reciprocal = false;
  bool public_flag = false;
};

struct PermissionGranted {
  ActorId agent;
  ActorId principal;
  RelationId relation;
  Permission permission;
};

struct PermissionRevoked {
  ActorId agent;
  ActorId principal;
  RelationId relation;
  Permission permission;
};

struct EdgeAdded {
  ActorId agent;
  ActorId principal;
  RelationId stronger;
  RelationId weaker;
};

struct TieAdded {
  ActorId agent;
  ActorId principal;
  TieId tie;
  ActorId sender;
  RelationId relation;
  ActorId receiver;
  TieState state = TieState::accepted;
};

// Acceptance is a single mutation: the pending tie flips to accepted and the
// reverse tie appears, cross-linked, in the same record.
struct TieAccepted {
  ActorId agent;
  ActorId principal;
  TieId tie;
  RelationId reverse_relation;
  TieId reverse_tie;
};

struct TieRejected {
  ActorId agent;
  ActorId principal;
  TieId tie;
};

struct TieRemoved {
  ActorId agent;
  ActorId principal;
  TieId tie;
};

using Event = std::variant<ActorCreated, RelationDefined, PermissionGranted, PermissionRevoked,
                           EdgeAdded, TieAdded, TieAccepted, TieRejected, TieRemoved>;

inline std::string_view event_kind(const Event& e) {
  struct Visitor {
    std::string_view operator()(const ActorCreated&) const { return "actor-created"; }
    std::string_view operator()(const RelationDefined&) const { return "relation-defined"; }
    std::string_view operator()(const PermissionGranted&) const { return "permission-granted"; }
    std::string_view operator()(const PermissionRevoked&) const { return "permission-revoked"; }
    std::string_view operator()(const EdgeAdded&) const { return "edge-added"; }
    std::string_view operator()(const TieAdded&) const { return "tie-added"; }
    std::string_view operator()(const TieAccepted&) const { return "tie-accepted"; }
    std::string_view operator()(const TieRejected&) const { return "tie-rejected"; }
    std::string_view operator()(const TieRemoved&) const { return "tie-removed"; }
  };
  return std::visit(Visitor{}, e);
}

}  // namespace tierbac
