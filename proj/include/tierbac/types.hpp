#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tierbac/error.hpp"

namespace tierbac {

// Opaque identifiers. Values are allocated by a Store, start at 1 and are
// never reused, so they survive persistence round-trips unchanged.
struct ActorId {
  std::uint64_t value = 0;
  constexpr auto operator<=>(const ActorId&) const = default;
};

struct RelationId {
  std::uint64_t value = 0;
  constexpr auto operator<=>(const RelationId&) const = default;
};

struct TieId {
  std::uint64_t value = 0;
  constexpr auto operator<=>(const TieId&) const = default;
};

// Actor kinds are open-ended: user/space/event are built in, deployments
// may register more.
struct ActorKind {
  std::string name;
  auto operator<=>(const ActorKind&) const = default;

  static ActorKind user() { return {"user"}; }
  static ActorKind space() { return {"space"}; }
  static ActorKind event() { return {"event"}; }
};

inline constexpr std::string_view kWildcardClass = "*";
inline constexpr std::string_view kRepresentAction = "represent";

// Lowercase tokens name actions, object classes and actor kinds.
inline bool is_token(std::string_view s) {
  if (s.empty()) return false;
  if (s.front() < 'a' || s.front() > 'z') return false;
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

// An (action, object-class) capability. The class may be the wildcard "*";
// the reserved action "represent" only exists in its wildcard form.
struct Permission {
  std::string action;
  std::string object_class;
  auto operator<=>(const Permission&) const = default;

  static Permission represent() { return {std::string(kRepresentAction), std::string(kWildcardClass)}; }
};

inline void validate_permission(const Permission& p) {
  if (!is_token(p.action))
    throw Error(Errc::malformed_permission, "action must be a lowercase token, got '" + p.action + "'");
  if (p.object_class != kWildcardClass && !is_token(p.object_class))
    throw Error(Errc::malformed_permission,
                "object class must be a lowercase token or '*', got '" + p.object_class + "'");
  if (p.action == kRepresentAction && p.object_class != kWildcardClass)
    throw Error(Errc::malformed_permission, "'represent' is reserved and only valid with object class '*'");
}

enum class TieState { pending, accepted };

constexpr std::string_view to_string(TieState s) {
  return s == TieState::pending ? "pending" : "accepted";
}

inline TieState tie_state_from(std::string_view s) {
  if (s == "pending") return TieState::pending;
  if (s == "accepted") return TieState::accepted;
  throw Error(Errc::corrupt_snapshot, "unknown tie state '" + std::string(s) + "'");
}

struct Actor {
  ActorId id;
  std::string name;  // non-empty display string; not unique
  ActorKind kind;    // immutable after creation
  bool operator==(const Actor&) const = default;
};

struct Relation {
  RelationId id;
  ActorId owner;
  std::string name;  // unique per owner, case-sensitive
  bool reciprocal = false;
  bool public_flag = false;
  std::set<Permission> permissions;
  std::set<RelationId> weaker;  // strength edges to strictly weaker relations of the same owner
  bool operator==(const Relation&) const = default;
};

struct Tie {
  TieId id;
  ActorId sender;        // owner of `relation`
  RelationId relation;
  ActorId receiver;
  TieState state = TieState::accepted;
  std::optional<TieId> paired_with;  // set on both sides of an accepted reciprocal pair
  bool operator==(const Tie&) const = default;
};

// The caller of a mutation: `agent` is the authenticated actor, `principal`
// the actor being acted as. Valid when they are equal or the agent holds a
// live (represent, *) grant from the principal.
struct ActingPair {
  ActorId agent;
  ActorId principal;

  static ActingPair self(ActorId a) { return {a, a}; }
  bool delegated() const { return agent != principal; }
};

enum class Reason { self_owner, direct_tie, via_representation, public_grant, denied };

constexpr std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::self_owner: return "self-owner";
    case Reason::direct_tie: return "direct-tie";
    case Reason::via_representation: return "via-representation";
    case Reason::public_grant: return "public-grant";
    case Reason::denied: return "denied";
  }
  return "denied";
}

struct Decision {
  bool allowed = false;
  Reason reason = Reason::denied;
  bool operator==(const Decision&) const = default;
};

// One row of a contacts listing: an accepted tie's receiver and relation.
using Contact = std::pair<ActorId, RelationId>;
using ContactList = std::vector<Contact>;

}  // namespace tierbac
