#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tierbac {

// Every failure the engine reports, as a stable machine-readable tag.
// The kebab-case names from to_string() are the wire/CLI compatibility
// surface; do not rename existing tags.
enum class Errc {
  // input validation
  empty_name,
  unknown_kind,
  malformed_permission,
  malformed_token,
  // lookups
  unknown_actor,
  unknown_relation,
  unknown_tie,
  unknown_receiver,
  // structural conflicts
  duplicate_name,
  public_reciprocal_conflict,
  cycle_detected,
  cross_owner_edge,
  self_tie,
  duplicate_tie,
  tie_to_public_relation,
  // authorization of the caller
  not_owner,
  not_party,
  not_receiver,
  representation_denied,
  unknown_token,
  // tie lifecycle
  not_pending,
  reverse_relation_not_reciprocal,
  reverse_relation_not_owned,
  // default catalogs
  name_collision,
  kind_mismatch,
  invalid_catalog,
  // read-side queries
  relation_not_owned,
  // policy files
  syntax_error,
  unresolved_name,
  model_error,
  // persistence
  io_error,
  sequence_gap,
  corrupt_snapshot,
  corrupt_log,
  invariant_violation,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::empty_name: return "empty-name";
    case Errc::unknown_kind: return "unknown-kind";
    case Errc::malformed_permission: return "malformed-permission";
    case Errc::malformed_token: return "malformed-token";
    case Errc::unknown_actor: return "unknown-actor";
    case Errc::unknown_relation: return "unknown-relation";
    case Errc::unknown_tie: return "unknown-tie";
    case Errc::unknown_receiver: return "unknown-receiver";
    case Errc::duplicate_name: return "duplicate-name";
    case Errc::public_reciprocal_conflict: return "public-reciprocal-conflict";
    case Errc::cycle_detected: return "cycle-detected";
    case Errc::cross_owner_edge: return "cross-owner-edge";
    case Errc::self_tie: return "self-tie";
    case Errc::duplicate_tie: return "duplicate-tie";
    case Errc::tie_to_public_relation: return "tie-to-public-relation";
    case Errc::not_owner: return "not-owner";
    case Errc::not_party: return "not-party";
    case Errc::not_receiver: return "not-receiver";
    case Errc::representation_denied: return "representation-denied";
    case Errc::unknown_token: return "unknown-token";
    case Errc::not_pending: return "not-pending";
    case Errc::reverse_relation_not_reciprocal: return "reverse-relation-not-reciprocal";
    case Errc::reverse_relation_not_owned: return "reverse-relation-not-owned";
    case Errc::name_collision: return "name-collision";
    case Errc::kind_mismatch: return "kind-mismatch";
    case Errc::invalid_catalog: return "invalid-catalog";
    case Errc::relation_not_owned: return "relation-not-owned";
    case Errc::syntax_error: return "syntax-error";
    case Errc::unresolved_name: return "unresolved-name";
    case Errc::model_error: return "model-error";
    case Errc::io_error: return "io-error";
    case Errc::sequence_gap: return "sequence-gap";
    case Errc::corrupt_snapshot: return "corrupt-snapshot";
    case Errc::corrupt_log: return "corrupt-log";
    case Errc::invariant_violation: return "invariant-violation";
  }
  return "unknown-error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(std::move(detail)) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

// Error raised while parsing or replaying a policy file; carries the
// source position. `underlying` keeps the model's own code when a
// statement failed during elaboration.
class FileError : public Error {
 public:
  FileError(Errc code, int line, int column, std::string detail)
      : Error(code, "line " + std::to_string(line) +
                        (column > 0 ? ":" + std::to_string(column) : "") + ": " + detail),
        line_(line),
        column_(column),
        underlying_(code) {}

  FileError(Errc code, int line, Errc underlying, std::string detail)
      : Error(code, "line " + std::to_string(line) + ": " + std::string(to_string(underlying)) +
                        ": " + detail),
        line_(line),
        column_(0),
        underlying_(underlying) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  Errc underlying() const noexcept { return underlying_; }

 private:
  int line_;
  int column_;
  Errc underlying_;
};

}  // namespace tierbac
