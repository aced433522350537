#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "tierbac/catalog.hpp"
#include "tierbac/error.hpp"
#include "tierbac/events.hpp"
#include "tierbac/types.hpp"

namespace tierbac {

// Complete persistent state of a store, as plain data. Snapshots serialize
// exactly this; two stores are equal iff their raw states are.
struct RawState {
  std::set<std::string> kinds{"user", "space", "event"};
  std::map<ActorId, Actor> actors;
  std::map<RelationId, Relation> relations;
  std::map<TieId, Tie> ties;
  std::uint64_t next_actor_id = 1;
  std::uint64_t next_relation_id = 1;
  std::uint64_t next_tie_id = 1;
  bool operator==(const RawState&) const = default;
};

// The authoritative in-memory graph of actors, relations, permissions and
// ties, plus the query layer that answers authorization questions over it.
//
// Concurrency contract: single writer, many readers. Every mutation takes
// the writer lock for its full validate/journal/apply span, so multi-step
// operations (acceptance, reciprocal teardown) are atomic; queries run under
// a shared lock and never observe a half-applied mutation.
//
// Mutations are event-sourced: each committed change is described by one
// Event handed to the observer (the write-ahead hook) before it is applied.
// An observer throw aborts the mutation with the state untouched.
class Store {
 public:
  Store() = default;

  explicit Store(RawState state, bool verify_state = true) : state_(std::move(state)) {
    rebuild_indexes();
    if (verify_state) verify_impl();
  }

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // ---- configuration (not part of persisted state) ----

  void set_observer(std::function<void(const Event&)> fn) {
    std::unique_lock lk(mutex_);
    observer_ = std::move(fn);
  }

  void register_kind(const std::string& name) {
    std::unique_lock lk(mutex_);
    if (!is_token(name))
      throw Error(Errc::unknown_kind, "kind must be a lowercase token, got '" + name + "'");
    state_.kinds.insert(name);
  }

  // Registers the catalog's kind and arms auto-install for it.
  void configure_catalog(DefaultCatalog catalog) {
    validate_catalog(catalog);
    std::unique_lock lk(mutex_);
    state_.kinds.insert(catalog.kind);
    catalogs_[catalog.kind] = std::move(catalog);
  }

  void set_auto_install(bool enabled) {
    std::unique_lock lk(mutex_);
    auto_install_ = enabled;
  }

  // ---- mutations ----

  ActorId create_actor(std::string_view name, const ActorKind& kind) {
    std::unique_lock lk(mutex_);
    if (name.empty()) throw Error(Errc::empty_name, "actor name must not be empty");
    if (!state_.kinds.count(kind.name))
      throw Error(Errc::unknown_kind, "actor kind '" + kind.name + "' is not registered");
    ActorId id{state_.next_actor_id};
    emit_apply(ActorCreated{id, std::string(name), kind.name});
    if (auto_install_) {
      auto it = catalogs_.find(kind.name);
      if (it != catalogs_.end()) install_catalog_events(id, it->second);
    }
    return id;
  }

  RelationId define_relation(ActorId owner, std::string_view name, bool reciprocal,
                             bool public_flag) {
    std::unique_lock lk(mutex_);
    require_actor(owner);
    if (name.empty()) throw Error(Errc::empty_name, "relation name must not be empty");
    if (reciprocal && public_flag)
      throw Error(Errc::public_reciprocal_conflict,
                  "a public relation cannot be reciprocal: '" + std::string(name) + "'");
    if (relation_names_.count({owner, std::string(name)}))
      throw Error(Errc::duplicate_name, "actor " + std::to_string(owner.value) +
                                            " already owns a relation named '" +
                                            std::string(name) + "'");
    RelationId id{state_.next_relation_id};
    emit_apply(RelationDefined{id, owner, std::string(name), reciprocal, public_flag});
    return id;
  }

  void grant_permission(const ActingPair& acting, RelationId relation, const Permission& p) {
    std::unique_lock lk(mutex_);
    const Relation& rel = require_relation(relation);
    validate_permission(p);
    ActorId caller = resolve_acting_impl(acting, Errc::not_owner);
    if (caller != rel.owner)
      throw Error(Errc::not_owner, "caller does not resolve to the owner of relation " +
                                       std::to_string(relation.value));
    if (rel.permissions.count(p)) return;  // idempotent
    emit_apply(PermissionGranted{acting.agent, acting.principal, relation, p});
  }

  void revoke_permission(const ActingPair& acting, RelationId relation, const Permission& p) {
    std::unique_lock lk(mutex_);
    const Relation& rel = require_relation(relation);
    ActorId caller = resolve_acting_impl(acting, Errc::not_owner);
    if (caller != rel.owner)
      throw Error(Errc::not_owner, "caller does not resolve to the owner of relation " +
                                       std::to_string(relation.value));
    if (!rel.permissions.count(p)) return;  // idempotent
    emit_apply(PermissionRevoked{acting.agent, acting.principal, relation, p});
  }

  void add_strength_edge(const ActingPair& acting, RelationId stronger, RelationId weaker) {
    std::unique_lock lk(mutex_);
    const Relation& s = require_relation(stronger);
    const Relation& w = require_relation(weaker);
    if (s.owner != w.owner)
      throw Error(Errc::cross_owner_edge, "strength edges must stay within one owner");
    ActorId caller = resolve_acting_impl(acting, Errc::not_owner);
    if (caller != s.owner)
      throw Error(Errc::not_owner, "caller does not resolve to the relations' owner");
    if (stronger == weaker)
      throw Error(Errc::cycle_detected, "a relation cannot be weaker than itself");
    if (weaker_closure_impl(weaker).count(stronger))
      throw Error(Errc::cycle_detected, "edge " + std::to_string(stronger.value) + " -> " +
                                            std::to_string(weaker.value) +
                                            " would close a cycle");
    if (s.weaker.count(weaker)) return;  // idempotent
    emit_apply(EdgeAdded{acting.agent, acting.principal, stronger, weaker});
  }

  std::pair<TieId, TieState> add_tie(const ActingPair& acting, RelationId relation,
                                     ActorId receiver) {
    std::unique_lock lk(mutex_);
    const Relation& rel = require_relation(relation);
    ActorId sender = resolve_acting_impl(acting, Errc::not_owner);
    if (rel.owner != sender)
      throw Error(Errc::not_owner, "ties may only use relations owned by their sender");
    if (!state_.actors.count(receiver))
      throw Error(Errc::unknown_receiver, "no actor " + std::to_string(receiver.value));
    if (sender == receiver) throw Error(Errc::self_tie, "a tie cannot connect an actor to itself");
    if (rel.public_flag)
      throw Error(Errc::tie_to_public_relation,
                  "public relations take no ties; their grants are ambient");
    if (live_ties_.count({sender, relation, receiver}))
      throw Error(Errc::duplicate_tie, "a live tie with this sender, relation and receiver exists");
    TieState state = rel.reciprocal ? TieState::pending : TieState::accepted;
    TieId id{state_.next_tie_id};
    emit_apply(TieAdded{acting.agent, acting.principal, id, sender, relation, receiver, state});
    return {id, state};
  }

  // Flips the pending tie to accepted and creates the reverse tie in the
  // same mutation; returns the reverse tie's id.
  TieId accept_tie(const ActingPair& acting, TieId tie, RelationId reverse_relation) {
    std::unique_lock lk(mutex_);
    const Tie& t = require_tie(tie);
    if (t.state != TieState::pending)
      throw Error(Errc::not_pending, "tie " + std::to_string(tie.value) + " is not pending");
    ActorId caller = resolve_acting_impl(acting, Errc::not_receiver);
    if (caller != t.receiver)
      throw Error(Errc::not_receiver, "only the tie's receiver may accept it");
    const Relation& rev = require_relation(reverse_relation);
    if (rev.owner != t.receiver)
      throw Error(Errc::reverse_relation_not_owned,
                  "the reverse relation must belong to the accepting receiver");
    if (!rev.reciprocal)
      throw Error(Errc::reverse_relation_not_reciprocal,
                  "'" + rev.name + "' is not flagged reciprocal");
    if (live_ties_.count({t.receiver, reverse_relation, t.sender}))
      throw Error(Errc::duplicate_tie, "the reverse tie already exists");
    TieId reverse_id{state_.next_tie_id};
    emit_apply(TieAccepted{acting.agent, acting.principal, tie, reverse_relation, reverse_id});
    return reverse_id;
  }

  void reject_tie(const ActingPair& acting, TieId tie) {
    std::unique_lock lk(mutex_);
    auto it = state_.ties.find(tie);
    if (it == state_.ties.end())
      throw Error(Errc::not_pending, "tie " + std::to_string(tie.value) + " is unknown or removed");
    if (it->second.state != TieState::pending)
      throw Error(Errc::not_pending, "tie " + std::to_string(tie.value) + " is not pending");
    ActorId caller = resolve_acting_impl(acting, Errc::not_receiver);
    if (caller != it->second.receiver)
      throw Error(Errc::not_receiver, "only the tie's receiver may reject it");
    emit_apply(TieRejected{acting.agent, acting.principal, tie});
  }

  // Removing one side of an accepted reciprocal pair removes both sides.
  void remove_tie(const ActingPair& acting, TieId tie) {
    std::unique_lock lk(mutex_);
    const Tie& t = require_tie(tie);
    ActorId caller = resolve_acting_impl(acting, Errc::not_party);
    if (caller != t.sender && caller != t.receiver)
      throw Error(Errc::not_party, "only the tie's sender or receiver may remove it");
    emit_apply(TieRemoved{acting.agent, acting.principal, tie});
  }

  // Installs a catalog on one actor as a single batch: either every entry,
  // permission and strength edge lands, or nothing does.
  std::vector<RelationId> install_defaults(ActorId actor, const DefaultCatalog& catalog) {
    validate_catalog(catalog);
    std::unique_lock lk(mutex_);
    const Actor& a = require_actor(actor);
    if (a.kind.name != catalog.kind)
      throw Error(Errc::kind_mismatch, "catalog for kind '" + catalog.kind +
                                           "' cannot install on a '" + a.kind.name + "' actor");
    for (const auto& entry : catalog.entries)
      if (relation_names_.count({actor, entry.name}))
        throw Error(Errc::name_collision,
                    "actor already owns a relation named '" + entry.name + "'");
    return install_catalog_events(actor, catalog);
  }

  // Replays one recorded event. Structural invariants are re-checked and a
  // violation is reported as such; caller authority is not re-evaluated.
  // The observer is not notified: replay restores history, it does not make
  // new history.
  void apply_event(const Event& event) {
    std::unique_lock lk(mutex_);
    validate_event(event);
    apply_unchecked(event);
  }

  // ---- queries ----

  ContactList contacts(ActorId actor, std::optional<RelationId> relation = {}) const {
    std::shared_lock lk(mutex_);
    require_actor(actor);
    if (relation) {
      const Relation& rel = require_relation(*relation);
      if (rel.owner != actor)
        throw Error(Errc::relation_not_owned, "relation " + std::to_string(relation->value) +
                                                  " is not owned by actor " +
                                                  std::to_string(actor.value));
    }
    ContactList out;
    for (const auto& [id, t] : state_.ties) {
      if (t.state != TieState::accepted || t.sender != actor) continue;
      if (relation && t.relation != *relation) continue;
      out.emplace_back(t.receiver, t.relation);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // The relation itself plus everything reachable over weaker edges.
  std::set<RelationId> weaker_closure(RelationId relation) const {
    std::shared_lock lk(mutex_);
    require_relation(relation);
    return weaker_closure_impl(relation);
  }

  std::set<Permission> closure_permissions(RelationId relation) const {
    std::shared_lock lk(mutex_);
    require_relation(relation);
    return closure_permissions_impl(relation);
  }

  std::set<Permission> effective_permissions(ActorId owner, ActorId agent) const {
    std::shared_lock lk(mutex_);
    require_actor(owner);
    require_actor(agent);
    return effective_permissions_impl(owner, agent);
  }

  // One hop only: holding (represent, *) from a principal does not extend
  // to the principal's own principals.
  bool can_represent(ActorId agent, ActorId principal) const {
    std::shared_lock lk(mutex_);
    require_actor(agent);
    require_actor(principal);
    return can_represent_impl(agent, principal);
  }

  Decision check(ActorId agent, std::string_view action, std::string_view object_class,
                 ActorId owner) const {
    std::shared_lock lk(mutex_);
    require_actor(agent);
    require_actor(owner);
    if (!is_token(action))
      throw Error(Errc::malformed_token, "action must be a lowercase token, got '" +
                                             std::string(action) + "'");
    if (object_class != kWildcardClass && !is_token(object_class))
      throw Error(Errc::malformed_token, "object class must be a lowercase token or '*', got '" +
                                             std::string(object_class) + "'");
    return check_impl(agent, std::string(action), std::string(object_class), owner);
  }

  // Validates an acting pair the way the network layer needs it: throws
  // representation-denied when the agent may not act as the principal.
  ActorId resolve_acting(const ActingPair& acting) const {
    std::shared_lock lk(mutex_);
    return resolve_acting_impl(acting, Errc::representation_denied);
  }

  // ---- inspection ----

  bool has_actor(ActorId id) const {
    std::shared_lock lk(mutex_);
    return state_.actors.count(id) > 0;
  }
  bool has_relation(RelationId id) const {
    std::shared_lock lk(mutex_);
    return state_.relations.count(id) > 0;
  }
  bool has_tie(TieId id) const {
    std::shared_lock lk(mutex_);
    return state_.ties.count(id) > 0;
  }

  Actor actor(ActorId id) const {
    std::shared_lock lk(mutex_);
    return require_actor(id);
  }
  Relation relation(RelationId id) const {
    std::shared_lock lk(mutex_);
    return require_relation(id);
  }
  Tie tie(TieId id) const {
    std::shared_lock lk(mutex_);
    return require_tie(id);
  }

  std::vector<ActorId> actor_ids() const {
    std::shared_lock lk(mutex_);
    std::vector<ActorId> out;
    for (const auto& [id, a] : state_.actors) out.push_back(id);
    return out;
  }

  std::vector<TieId> tie_ids() const {
    std::shared_lock lk(mutex_);
    std::vector<TieId> out;
    for (const auto& [id, t] : state_.ties) out.push_back(id);
    return out;
  }

  std::vector<RelationId> relations_of(ActorId owner) const {
    std::shared_lock lk(mutex_);
    std::vector<RelationId> out;
    for (const auto& [id, r] : state_.relations)
      if (r.owner == owner) out.push_back(id);
    return out;
  }

  std::optional<RelationId> find_relation(ActorId owner, std::string_view name) const {
    std::shared_lock lk(mutex_);
    auto it = relation_names_.find({owner, std::string(name)});
    if (it == relation_names_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<ActorId> find_actors(std::string_view name) const {
    std::shared_lock lk(mutex_);
    std::vector<ActorId> out;
    for (const auto& [id, a] : state_.actors)
      if (a.name == name) out.push_back(id);
    return out;
  }

  std::optional<TieId> find_live_tie(ActorId sender, RelationId relation, ActorId receiver) const {
    std::shared_lock lk(mutex_);
    auto it = live_ties_.find({sender, relation, receiver});
    if (it == live_ties_.end()) return std::nullopt;
    return it->second;
  }

  std::set<std::string> kinds() const {
    std::shared_lock lk(mutex_);
    return state_.kinds;
  }

  bool has_kind(std::string_view name) const {
    std::shared_lock lk(mutex_);
    return state_.kinds.count(std::string(name)) > 0;
  }

  RawState raw_state() const {
    std::shared_lock lk(mutex_);
    return state_;
  }

  // Full structural re-check; throws invariant-violation with the first
  // problem found. Load paths run this after reconstruction.
  void verify() const {
    std::shared_lock lk(mutex_);
    verify_impl();
  }

  friend bool operator==(const Store& a, const Store& b) {
    return a.raw_state() == b.raw_state();
  }

 private:
  // ---- lookup helpers (lock held) ----

  const Actor& require_actor(ActorId id) const {
    auto it = state_.actors.find(id);
    if (it == state_.actors.end())
      throw Error(Errc::unknown_actor, "no actor " + std::to_string(id.value));
    return it->second;
  }

  const Relation& require_relation(RelationId id) const {
    auto it = state_.relations.find(id);
    if (it == state_.relations.end())
      throw Error(Errc::unknown_relation, "no relation " + std::to_string(id.value));
    return it->second;
  }

  const Tie& require_tie(TieId id) const {
    auto it = state_.ties.find(id);
    if (it == state_.ties.end())
      throw Error(Errc::unknown_tie, "no tie " + std::to_string(id.value));
    return it->second;
  }

  ActorId resolve_acting_impl(const ActingPair& acting, Errc on_failure) const {
    require_actor(acting.agent);
    require_actor(acting.principal);
    if (acting.agent == acting.principal) return acting.principal;
    if (can_represent_impl(acting.agent, acting.principal)) return acting.principal;
    throw Error(on_failure, "actor " + std::to_string(acting.agent.value) +
                                " may not act as actor " + std::to_string(acting.principal.value));
  }

  // ---- query internals (lock held) ----

  std::set<RelationId> weaker_closure_impl(RelationId relation) const {
    std::set<RelationId> seen{relation};
    std::vector<RelationId> frontier{relation};
    while (!frontier.empty()) {
      RelationId cur = frontier.back();
      frontier.pop_back();
      auto it = state_.relations.find(cur);
      if (it == state_.relations.end()) continue;
      for (RelationId next : it->second.weaker)
        if (seen.insert(next).second) frontier.push_back(next);
    }
    return seen;
  }

  std::set<Permission> closure_permissions_impl(RelationId relation) const {
    std::set<Permission> out;
    for (RelationId id : weaker_closure_impl(relation)) {
      auto it = state_.relations.find(id);
      if (it == state_.relations.end()) continue;
      out.insert(it->second.permissions.begin(), it->second.permissions.end());
    }
    return out;
  }

  // Union over accepted ties owner->agent plus the owner's ambient public
  // grants. Pending ties contribute nothing.
  std::set<Permission> effective_permissions_impl(ActorId owner, ActorId agent) const {
    std::set<Permission> out = tie_permissions_impl(owner, agent);
    std::set<Permission> pub = public_permissions_impl(owner);
    out.insert(pub.begin(), pub.end());
    return out;
  }

  std::set<Permission> tie_permissions_impl(ActorId owner, ActorId agent) const {
    std::set<Permission> out;
    for (const auto& [id, t] : state_.ties) {
      if (t.state != TieState::accepted || t.sender != owner || t.receiver != agent) continue;
      std::set<Permission> perms = closure_permissions_impl(t.relation);
      out.insert(perms.begin(), perms.end());
    }
    return out;
  }

  std::set<Permission> public_permissions_impl(ActorId owner) const {
    std::set<Permission> out;
    for (const auto& [id, r] : state_.relations) {
      if (r.owner != owner || !r.public_flag) continue;
      std::set<Permission> perms = closure_permissions_impl(id);
      out.insert(perms.begin(), perms.end());
    }
    return out;
  }

  bool can_represent_impl(ActorId agent, ActorId principal) const {
    if (agent == principal) return true;
    return effective_permissions_impl(principal, agent).count(Permission::represent()) > 0;
  }

  static bool matches(const std::set<Permission>& perms, const std::string& action,
                      const std::string& object_class) {
    if (perms.count(Permission{action, object_class})) return true;
    return perms.count(Permission{action, std::string(kWildcardClass)}) > 0;
  }

  Decision check_impl(ActorId agent, const std::string& action, const std::string& object_class,
                      ActorId owner) const {
    if (agent == owner) return {true, Reason::self_owner};
    if (matches(tie_permissions_impl(owner, agent), action, object_class))
      return {true, Reason::direct_tie};
    if (matches(public_permissions_impl(owner), action, object_class))
      return {true, Reason::public_grant};
    for (const auto& [pid, p] : state_.actors) {
      if (pid == agent) continue;
      if (!can_represent_impl(agent, pid)) continue;
      if (matches(effective_permissions_impl(owner, pid), action, object_class))
        return {true, Reason::via_representation};
    }
    return {false, Reason::denied};
  }

  // ---- mutation internals (writer lock held) ----

  void emit_apply(const Event& event) {
    validate_event(event);
    if (observer_) observer_(event);  // write-ahead hook; a throw aborts the mutation
    apply_unchecked(event);
  }

  // Creates the catalog's relations, grants and edges for one actor.
  // Callers have already validated the catalog and checked collisions.
  std::vector<RelationId> install_catalog_events(ActorId actor, const DefaultCatalog& catalog) {
    std::vector<RelationId> ids;
    std::map<std::string, RelationId> by_name;
    for (const auto& entry : catalog.entries) {
      RelationId id{state_.next_relation_id};
      emit_apply(RelationDefined{id, actor, entry.name, entry.reciprocal, entry.public_flag});
      ids.push_back(id);
      by_name[entry.name] = id;
    }
    for (std::size_t i = 0; i < catalog.entries.size(); ++i)
      for (const auto& p : catalog.entries[i].permissions)
        emit_apply(PermissionGranted{actor, actor, ids[i], p});
    for (std::size_t i = 0; i < catalog.entries.size(); ++i)
      for (const auto& w : catalog.entries[i].weaker_names)
        emit_apply(EdgeAdded{actor, actor, ids[i], by_name.at(w)});
    return ids;
  }

  // Structural validation of an event against current state. Every check a
  // replay needs lives here; live operations run their own precondition
  // checks first so callers see precise error codes, then pass through this
  // gate as well.
  void validate_event(const Event& event) const {
    struct Visitor {
      const Store& s;

      void fail(const std::string& detail) const {
        throw Error(Errc::invariant_violation, detail);
      }

      void operator()(const ActorCreated& e) const {
        if (e.actor.value == 0 || s.state_.actors.count(e.actor))
          fail("actor id " + std::to_string(e.actor.value) + " is zero or already in use");
        if (e.name.empty()) fail("actor with empty name");
        if (!is_token(e.kind)) fail("actor kind '" + e.kind + "' is not a token");
      }

      void operator()(const RelationDefined& e) const {
        if (e.relation.value == 0 || s.state_.relations.count(e.relation))
          fail("relation id " + std::to_string(e.relation.value) + " is zero or already in use");
        if (!s.state_.actors.count(e.owner))
          fail("relation owner " + std::to_string(e.owner.value) + " does not exist");
        if (e.name.empty()) fail("relation with empty name");
        if (e.reciprocal && e.public_flag) fail("relation '" + e.name + "' both reciprocal and public");
        if (s.relation_names_.count({e.owner, e.name}))
          fail("owner already has a relation named '" + e.name + "'");
      }

      void operator()(const PermissionGranted& e) const {
        if (!s.state_.relations.count(e.relation))
          fail("grant on unknown relation " + std::to_string(e.relation.value));
        try {
          validate_permission(e.permission);
        } catch (const Error& err) {
          fail(err.detail());
        }
      }

      void operator()(const PermissionRevoked& e) const {
        if (!s.state_.relations.count(e.relation))
          fail("revoke on unknown relation " + std::to_string(e.relation.value));
      }

      void operator()(const EdgeAdded& e) const {
        auto si = s.state_.relations.find(e.stronger);
        auto wi = s.state_.relations.find(e.weaker);
        if (si == s.state_.relations.end() || wi == s.state_.relations.end())
          fail("strength edge references a missing relation");
        if (si->second.owner != wi->second.owner) fail("strength edge crosses owners");
        if (e.stronger == e.weaker || s.weaker_closure_impl(e.weaker).count(e.stronger))
          fail("strength edge would close a cycle");
      }

      void operator()(const TieAdded& e) const {
        if (e.tie.value == 0 || s.state_.ties.count(e.tie))
          fail("tie id " + std::to_string(e.tie.value) + " is zero or already in use");
        auto ri = s.state_.relations.find(e.relation);
        if (ri == s.state_.relations.end()) fail("tie references a missing relation");
        if (ri->second.owner != e.sender) fail("tie relation is not owned by its sender");
        if (!s.state_.actors.count(e.sender) || !s.state_.actors.count(e.receiver))
          fail("tie references a missing actor");
        if (e.sender == e.receiver) fail("tie connects an actor to itself");
        if (ri->second.public_flag) fail("tie references a public relation");
        if (s.live_ties_.count({e.sender, e.relation, e.receiver}))
          fail("duplicate live tie for sender/relation/receiver");
        TieState expected = ri->second.reciprocal ? TieState::pending : TieState::accepted;
        if (e.state != expected) fail("tie state does not match the relation's reciprocity");
      }

      void operator()(const TieAccepted& e) const {
        auto ti = s.state_.ties.find(e.tie);
        if (ti == s.state_.ties.end()) fail("acceptance of a missing tie");
        if (ti->second.state != TieState::pending) fail("acceptance of a non-pending tie");
        auto ri = s.state_.relations.find(e.reverse_relation);
        if (ri == s.state_.relations.end()) fail("reverse relation does not exist");
        if (ri->second.owner != ti->second.receiver)
          fail("reverse relation is not owned by the accepting receiver");
        if (!ri->second.reciprocal) fail("reverse relation is not reciprocal");
        if (e.reverse_tie.value == 0 || s.state_.ties.count(e.reverse_tie))
          fail("reverse tie id is zero or already in use");
        if (s.live_ties_.count({ti->second.receiver, e.reverse_relation, ti->second.sender}))
          fail("reverse tie would duplicate a live tie");
      }

      void operator()(const TieRejected& e) const {
        auto ti = s.state_.ties.find(e.tie);
        if (ti == s.state_.ties.end()) fail("rejection of a missing tie");
        if (ti->second.state != TieState::pending) fail("rejection of a non-pending tie");
      }

      void operator()(const TieRemoved& e) const {
        if (!s.state_.ties.count(e.tie)) fail("removal of a missing tie");
      }
    };
    std::visit(Visitor{*this}, event);
  }

  void apply_unchecked(const Event& event) {
    struct Visitor {
      Store& s;

      void operator()(const ActorCreated& e) {
        s.state_.kinds.insert(e.kind);  // log is trusted for kinds seen in history
        s.state_.actors.emplace(e.actor, Actor{e.actor, e.name, ActorKind{e.kind}});
        s.state_.next_actor_id = std::max(s.state_.next_actor_id, e.actor.value + 1);
      }

      void operator()(const RelationDefined& e) {
        Relation r;
        r.id = e.relation;
        r.owner = e.owner;
        r.name = e.name;
        r.reciprocal = e.reciprocal;
        r.public_flag = e.public_flag;
        s.state_.relations.emplace(e.relation, std::move(r));
        s.relation_names_[{e.owner, e.name}] = e.relation;
        s.state_.next_relation_id = std::max(s.state_.next_relation_id, e.relation.value + 1);
      }

      void operator()(const PermissionGranted& e) {
        s.state_.relations.at(e.relation).permissions.insert(e.permission);
      }

      void operator()(const PermissionRevoked& e) {
        s.state_.relations.at(e.relation).permissions.erase(e.permission);
      }

      void operator()(const EdgeAdded& e) {
        s.state_.relations.at(e.stronger).weaker.insert(e.weaker);
      }

      void operator()(const TieAdded& e) {
        s.state_.ties.emplace(
            e.tie, Tie{e.tie, e.sender, e.relation, e.receiver, e.state, std::nullopt});
        s.live_ties_[{e.sender, e.relation, e.receiver}] = e.tie;
        s.state_.next_tie_id = std::max(s.state_.next_tie_id, e.tie.value + 1);
      }

      void operator()(const TieAccepted& e) {
        Tie& t = s.state_.ties.at(e.tie);
        t.state = TieState::accepted;
        t.paired_with = e.reverse_tie;
        Tie reverse{e.reverse_tie, t.receiver,    e.reverse_relation,
                    t.sender,      TieState::accepted, e.tie};
        s.live_ties_[{reverse.sender, reverse.relation, reverse.receiver}] = e.reverse_tie;
        s.state_.ties.emplace(e.reverse_tie, std::move(reverse));
        s.state_.next_tie_id = std::max(s.state_.next_tie_id, e.reverse_tie.value + 1);
      }

      void operator()(const TieRejected& e) { s.erase_tie(e.tie); }

      void operator()(const TieRemoved& e) {
        auto it = s.state_.ties.find(e.tie);
        std::optional<TieId> paired;
        if (it->second.state == TieState::accepted) paired = it->second.paired_with;
        s.erase_tie(e.tie);
        if (paired) s.erase_tie(*paired);
      }
    };
    std::visit(Visitor{*this}, event);
  }

  void erase_tie(TieId id) {
    auto it = state_.ties.find(id);
    if (it == state_.ties.end()) return;
    live_ties_.erase({it->second.sender, it->second.relation, it->second.receiver});
    state_.ties.erase(it);
  }

  void rebuild_indexes() {
    relation_names_.clear();
    live_ties_.clear();
    for (const auto& [id, r] : state_.relations) relation_names_[{r.owner, r.name}] = id;
    for (const auto& [id, t] : state_.ties) live_ties_[{t.sender, t.relation, t.receiver}] = id;
  }

  void verify_impl() const {
    auto fail = [](const std::string& detail) {
      throw Error(Errc::invariant_violation, detail);
    };
    for (const char* k : {"user", "space", "event"})
      if (!state_.kinds.count(k)) fail(std::string("built-in kind '") + k + "' is missing");
    for (const auto& k : state_.kinds)
      if (!is_token(k)) fail("registered kind '" + k + "' is not a token");

    for (const auto& [id, a] : state_.actors) {
      if (a.id != id) fail("actor map key does not match the actor's id");
      if (a.name.empty()) fail("actor " + std::to_string(id.value) + " has an empty name");
      if (!state_.kinds.count(a.kind.name))
        fail("actor " + std::to_string(id.value) + " has unregistered kind '" + a.kind.name + "'");
      if (id.value == 0 || id.value >= state_.next_actor_id)
        fail("actor id " + std::to_string(id.value) + " outside the allocated range");
    }

    std::set<std::pair<ActorId, std::string>> names;
    for (const auto& [id, r] : state_.relations) {
      if (r.id != id) fail("relation map key does not match the relation's id");
      if (r.name.empty()) fail("relation " + std::to_string(id.value) + " has an empty name");
      if (!state_.actors.count(r.owner))
        fail("relation " + std::to_string(id.value) + " owned by a missing actor");
      if (r.reciprocal && r.public_flag)
        fail("relation " + std::to_string(id.value) + " is both reciprocal and public");
      if (!names.insert({r.owner, r.name}).second)
        fail("two relations of one owner share the name '" + r.name + "'");
      if (id.value == 0 || id.value >= state_.next_relation_id)
        fail("relation id " + std::to_string(id.value) + " outside the allocated range");
      for (const auto& p : r.permissions) {
        try {
          validate_permission(p);
        } catch (const Error& err) {
          fail("relation " + std::to_string(id.value) + ": " + err.detail());
        }
      }
      for (RelationId w : r.weaker) {
        auto wi = state_.relations.find(w);
        if (wi == state_.relations.end())
          fail("relation " + std::to_string(id.value) + " has a weaker edge to a missing relation");
        if (wi->second.owner != r.owner)
          fail("relation " + std::to_string(id.value) + " has a weaker edge crossing owners");
        if (w == id) fail("relation " + std::to_string(id.value) + " lists itself as weaker");
      }
    }

    // per-owner DAG check over weaker edges
    {
      std::map<RelationId, int> mark;  // 0 unvisited, 1 on stack, 2 done
      struct Dfs {
        const std::map<RelationId, Relation>& rels;
        std::map<RelationId, int>& mark;
        void walk(RelationId id) {
          mark[id] = 1;
          for (RelationId w : rels.at(id).weaker) {
            int m = mark.count(w) ? mark[w] : 0;
            if (m == 1)
              throw Error(Errc::invariant_violation,
                          "weaker edges form a cycle through relation " + std::to_string(w.value));
            if (m == 0) walk(w);
          }
          mark[id] = 2;
        }
      } dfs{state_.relations, mark};
      for (const auto& [id, r] : state_.relations)
        if (!mark.count(id)) dfs.walk(id);
    }

    std::set<std::tuple<ActorId, RelationId, ActorId>> live;
    for (const auto& [id, t] : state_.ties) {
      if (t.id != id) fail("tie map key does not match the tie's id");
      auto ri = state_.relations.find(t.relation);
      if (ri == state_.relations.end())
        fail("tie " + std::to_string(id.value) + " references a missing relation");
      const Relation& rel = ri->second;
      if (!state_.actors.count(t.sender) || !state_.actors.count(t.receiver))
        fail("tie " + std::to_string(id.value) + " references a missing actor");
      if (rel.owner != t.sender)
        fail("tie " + std::to_string(id.value) + " uses a relation its sender does not own");
      if (t.sender == t.receiver) fail("tie " + std::to_string(id.value) + " is a self-loop");
      if (rel.public_flag) fail("tie " + std::to_string(id.value) + " references a public relation");
      if (!live.insert({t.sender, t.relation, t.receiver}).second)
        fail("duplicate live tie for one sender/relation/receiver triple");
      if (id.value == 0 || id.value >= state_.next_tie_id)
        fail("tie id " + std::to_string(id.value) + " outside the allocated range");
      if (t.state == TieState::pending) {
        if (!rel.reciprocal)
          fail("tie " + std::to_string(id.value) + " is pending on a non-reciprocal relation");
        if (t.paired_with) fail("pending tie " + std::to_string(id.value) + " is paired");
      } else if (rel.reciprocal) {
        if (!t.paired_with)
          fail("accepted reciprocal tie " + std::to_string(id.value) + " is unpaired");
        auto pi = state_.ties.find(*t.paired_with);
        if (pi == state_.ties.end())
          fail("tie " + std::to_string(id.value) + " is paired with a missing tie");
        const Tie& pair = pi->second;
        if (pair.state != TieState::accepted || pair.sender != t.receiver ||
            pair.receiver != t.sender || pair.paired_with != t.id)
          fail("ties " + std::to_string(id.value) + " and " + std::to_string(pair.id.value) +
               " are not a mutually linked reversed pair");
        auto pri = state_.relations.find(pair.relation);
        if (pri == state_.relations.end() || !pri->second.reciprocal)
          fail("paired tie " + std::to_string(pair.id.value) + " uses a non-reciprocal relation");
      } else if (t.paired_with) {
        fail("non-reciprocal tie " + std::to_string(id.value) + " is paired");
      }
    }
  }

  RawState state_;
  std::map<std::pair<ActorId, std::string>, RelationId> relation_names_;
  std::map<std::tuple<ActorId, RelationId, ActorId>, TieId> live_ties_;

  std::map<std::string, DefaultCatalog> catalogs_;
  bool auto_install_ = true;
  std::function<void(const Event&)> observer_;

  mutable std::shared_mutex mutex_;
};

}  // namespace tierbac
