#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "tierbac/error.hpp"
#include "tierbac/events.hpp"
#include "tierbac/model.hpp"
#include "tierbac/types.hpp"

// Durable storage: `state.snapshot` (header line + pretty-printed document,
// sorted keys, diffable) plus `events.log` (header line + one compact record
// per line, append-only). The formats are described field by field in
// docs/formats.md and are a compatibility surface.
namespace tierbac {

inline constexpr std::string_view kSnapshotHeader = "tierbac-snapshot v1";
inline constexpr std::string_view kLogHeader = "tierbac-log v1";

inline std::string now_iso8601() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// One journaled mutation. Timestamps are informational and excluded from
// equality; everything else must replay bit-for-bit.
struct EventRecord {
  std::uint64_t seq = 0;
  std::string kind;
  nlohmann::json payload;
  std::string timestamp;

  friend bool operator==(const EventRecord& a, const EventRecord& b) {
    return a.seq == b.seq && a.kind == b.kind && a.payload == b.payload;
  }
};

struct SnapshotMeta {
  std::uint64_t last_seq = 0;
};

// ---- event <-> payload codec ----

inline nlohmann::json event_payload(const Event& event) {
  using nlohmann::json;
  struct Visitor {
    json operator()(const ActorCreated& e) const {
      return {{"actor", e.actor.value}, {"name", e.name}, {"kind", e.kind}};
    }
    json operator()(const RelationDefined& e) const {
      return {{"relation", e.relation.value}, {"owner", e.owner.value},     {"name", e.name},
              {"reciprocal", e.reciprocal},   {"public", e.public_flag}};
    }
    json operator()(const PermissionGranted& e) const {
      return {{"agent", e.agent.value},
              {"principal", e.principal.value},
              {"relation", e.relation.value},
              {"action", e.permission.action},
              {"object_class", e.permission.object_class}};
    }
    json operator()(const PermissionRevoked& e) const {
      return {{"agent", e.agent.value},
              {"principal", e.principal.value},
              {"relation", e.relation.value},
              {"action", e.permission.action},
              {"object_class", e.permission.object_class}};
    }
    json operator()(const EdgeAdded& e) const {
      return {{"agent", e.agent.value},
              {"principal", e.principal.value},
              {"stronger", e.stronger.value},
              {"weaker", e.weaker.value}};
    }
    json operator()(const TieAdded& e) const {
      return {{"agent", e.agent.value},   {"principal", e.principal.value},
              {"tie", e.tie.value},       {"sender", e.sender.value},
              {"relation", e.relation.value}, {"receiver", e.receiver.value},
              {"state", std::string(to_string(e.state))}};
    }
    json operator()(const TieAccepted& e) const {
      return {{"agent", e.agent.value},
              {"principal", e.principal.value},
              {"tie", e.tie.value},
              {"reverse_relation", e.reverse_relation.value},
              {"reverse_tie", e.reverse_tie.value}};
    }
    json operator()(const TieRejected& e) const {
      return {{"agent", e.agent.value}, {"principal", e.principal.value}, {"tie", e.tie.value}};
    }
    json operator()(const TieRemoved& e) const {
      return {{"agent", e.agent.value}, {"principal", e.principal.value}, {"tie", e.tie.value}};
    }
  };
  return std::visit(Visitor{}, event);
}

inline Event event_from_payload(const std::string& kind, const nlohmann::json& p) {
  try {
    if (kind == "actor-created")
      return ActorCreated{ActorId{p.at("actor").get<std::uint64_t>()},
                          p.at("name").get<std::string>(), p.at("kind").get<std::string>()};
    if (kind == "relation-defined")
      return RelationDefined{RelationId{p.at("relation").get<std::uint64_t>()},
                             ActorId{p.at("owner").get<std::uint64_t>()},
                             p.at("name").get<std::string>(), p.at("reciprocal").get<bool>(),
                             p.at("public").get<bool>()};
    if (kind == "permission-granted")
      return PermissionGranted{
          ActorId{p.at("agent").get<std::uint64_t>()},
          ActorId{p.at("principal").get<std::uint64_t>()},
          RelationId{p.at("relation").get<std::uint64_t>()},
          Permission{p.at("action").get<std::string>(), p.at("object_class").get<std::string>()}};
    if (kind == "permission-revoked")
      return PermissionRevoked{
          ActorId{p.at("agent").get<std::uint64_t>()},
          ActorId{p.at("principal").get<std::uint64_t>()},
          RelationId{p.at("relation").get<std::uint64_t>()},
          Permission{p.at("action").get<std::string>(), p.at("object_class").get<std::string>()}};
    if (kind == "edge-added")
      return EdgeAdded{ActorId{p.at("agent").get<std::uint64_t>()},
                       ActorId{p.at("principal").get<std::uint64_t>()},
                       RelationId{p.at("stronger").get<std::uint64_t>()},
                       RelationId{p.at("weaker").get<std::uint64_t>()}};
    if (kind == "tie-added")
      return TieAdded{ActorId{p.at("agent").get<std::uint64_t>()},
                      ActorId{p.at("principal").get<std::uint64_t>()},
                      TieId{p.at("tie").get<std::uint64_t>()},
                      ActorId{p.at("sender").get<std::uint64_t>()},
                      RelationId{p.at("relation").get<std::uint64_t>()},
                      ActorId{p.at("receiver").get<std::uint64_t>()},
                      tie_state_from(p.at("state").get<std::string>())};
    if (kind == "tie-accepted")
      return TieAccepted{ActorId{p.at("agent").get<std::uint64_t>()},
                         ActorId{p.at("principal").get<std::uint64_t>()},
                         TieId{p.at("tie").get<std::uint64_t>()},
                         RelationId{p.at("reverse_relation").get<std::uint64_t>()},
                         TieId{p.at("reverse_tie").get<std::uint64_t>()}};
    if (kind == "tie-rejected")
      return TieRejected{ActorId{p.at("agent").get<std::uint64_t>()},
                         ActorId{p.at("principal").get<std::uint64_t>()},
                         TieId{p.at("tie").get<std::uint64_t>()}};
    if (kind == "tie-removed")
      return TieRemoved{ActorId{p.at("agent").get<std::uint64_t>()},
                        ActorId{p.at("principal").get<std::uint64_t>()},
                        TieId{p.at("tie").get<std::uint64_t>()}};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::corrupt_log, "bad payload for '" + kind + "': " + e.what());
  }
  throw Error(Errc::corrupt_log, "unknown event kind '" + kind + "'");
}

inline EventRecord make_record(std::uint64_t seq, const Event& event) {
  return {seq, std::string(event_kind(event)), event_payload(event), now_iso8601()};
}

// ---- snapshot codec ----

inline nlohmann::json raw_state_to_json(const RawState& state, std::uint64_t last_seq) {
  using nlohmann::json;
  json doc;
  doc["kinds"] = state.kinds;
  json actors = json::array();
  for (const auto& [id, a] : state.actors)
    actors.push_back({{"id", id.value}, {"name", a.name}, {"kind", a.kind.name}});
  doc["actors"] = std::move(actors);
  json relations = json::array();
  for (const auto& [id, r] : state.relations) {
    json perms = json::array();
    for (const auto& p : r.permissions)
      perms.push_back({{"action", p.action}, {"object_class", p.object_class}});
    json weaker = json::array();
    for (const auto& w : r.weaker) weaker.push_back(w.value);
    relations.push_back({{"id", id.value},
                         {"owner", r.owner.value},
                         {"name", r.name},
                         {"reciprocal", r.reciprocal},
                         {"public", r.public_flag},
                         {"permissions", std::move(perms)},
                         {"weaker", std::move(weaker)}});
  }
  doc["relations"] = std::move(relations);
  json ties = json::array();
  for (const auto& [id, t] : state.ties) {
    json entry = {{"id", id.value},
                  {"sender", t.sender.value},
                  {"relation", t.relation.value},
                  {"receiver", t.receiver.value},
                  {"state", std::string(to_string(t.state))}};
    entry["paired_with"] = t.paired_with ? nlohmann::json(t.paired_with->value) : nlohmann::json();
    ties.push_back(std::move(entry));
  }
  doc["ties"] = std::move(ties);
  doc["next_actor_id"] = state.next_actor_id;
  doc["next_relation_id"] = state.next_relation_id;
  doc["next_tie_id"] = state.next_tie_id;
  doc["last_seq"] = last_seq;
  return doc;
}

inline std::pair<RawState, SnapshotMeta> raw_state_from_json(const nlohmann::json& doc) {
  RawState state;
  SnapshotMeta meta;
  try {
    state.kinds = doc.at("kinds").get<std::set<std::string>>();
    state.actors.clear();
    for (const auto& a : doc.at("actors")) {
      ActorId id{a.at("id").get<std::uint64_t>()};
      state.actors[id] =
          Actor{id, a.at("name").get<std::string>(), ActorKind{a.at("kind").get<std::string>()}};
    }
    for (const auto& r : doc.at("relations")) {
      Relation rel;
      rel.id = RelationId{r.at("id").get<std::uint64_t>()};
      rel.owner = ActorId{r.at("owner").get<std::uint64_t>()};
      rel.name = r.at("name").get<std::string>();
      rel.reciprocal = r.at("reciprocal").get<bool>();
      rel.public_flag = r.at("public").get<bool>();
      for (const auto& p : r.at("permissions"))
        rel.permissions.insert(
            Permission{p.at("action").get<std::string>(), p.at("object_class").get<std::string>()});
      for (const auto& w : r.at("weaker")) rel.weaker.insert(RelationId{w.get<std::uint64_t>()});
      state.relations[rel.id] = std::move(rel);
    }
    for (const auto& t : doc.at("ties")) {
      Tie tie;
      tie.id = TieId{t.at("id").get<std::uint64_t>()};
      tie.sender = ActorId{t.at("sender").get<std::uint64_t>()};
      tie.relation = RelationId{t.at("relation").get<std::uint64_t>()};
      tie.receiver = ActorId{t.at("receiver").get<std::uint64_t>()};
      tie.state = tie_state_from(t.at("state").get<std::string>());
      const auto& paired = t.at("paired_with");
      if (!paired.is_null()) tie.paired_with = TieId{paired.get<std::uint64_t>()};
      state.ties[tie.id] = std::move(tie);
    }
    state.next_actor_id = doc.at("next_actor_id").get<std::uint64_t>();
    state.next_relation_id = doc.at("next_relation_id").get<std::uint64_t>();
    state.next_tie_id = doc.at("next_tie_id").get<std::uint64_t>();
    meta.last_seq = doc.at("last_seq").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::corrupt_snapshot, std::string("bad snapshot document: ") + e.what());
  }
  return {std::move(state), meta};
}

inline SnapshotMeta write_snapshot(std::ostream& out, const RawState& state,
                                   std::uint64_t last_seq) {
  out << kSnapshotHeader << "\n" << raw_state_to_json(state, last_seq).dump(2) << "\n";
  if (!out) throw Error(Errc::io_error, "snapshot write failed");
  return {last_seq};
}

inline std::pair<RawState, SnapshotMeta> read_snapshot(std::istream& in) {
  std::string header;
  if (!std::getline(in, header))
    throw Error(Errc::corrupt_snapshot, "empty snapshot file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != kSnapshotHeader)
    throw Error(Errc::corrupt_snapshot, "bad snapshot header '" + header + "'");
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded())
    throw Error(Errc::corrupt_snapshot, "snapshot body is not a well-formed document");
  return raw_state_from_json(doc);
}

// ---- append-only journal ----

// Owns the log file handle. append() honours the write-ahead discipline:
// the record is flushed and fsynced before it returns, so a mutation is
// never acknowledged ahead of its durability.
class Journal {
 public:
  Journal() = default;
  ~Journal() { close(); }
  Journal(const Journal&) = delete;
  Journal& operator=(const Journal&) = delete;

  // Opens (or creates with a header) the log for appending.
  void open_append(const std::filesystem::path& path, std::uint64_t last_seq) {
    close();
    bool fresh = !std::filesystem::exists(path);
    file_ = std::fopen(path.string().c_str(), "a");
    if (!file_) throw Error(Errc::io_error, "cannot open log '" + path.string() + "'");
    if (fresh) {
      std::string header = std::string(kLogHeader) + "\n";
      if (std::fputs(header.c_str(), file_) < 0 || std::fflush(file_) != 0)
        throw Error(Errc::io_error, "cannot write log header");
    }
    last_seq_ = last_seq;
  }

  bool is_open() const { return file_ != nullptr; }
  std::uint64_t last_seq() const { return last_seq_; }

  void append(const EventRecord& record) {
    if (!file_) throw Error(Errc::io_error, "journal is not open");
    if (record.seq != last_seq_ + 1)
      throw Error(Errc::sequence_gap, "expected seq " + std::to_string(last_seq_ + 1) +
                                          ", got " + std::to_string(record.seq));
    nlohmann::json line = {{"seq", record.seq},
                           {"kind", record.kind},
                           {"payload", record.payload},
                           {"ts", record.timestamp}};
    std::string text = line.dump();
    text.push_back('\n');
    if (std::fputs(text.c_str(), file_) < 0 || std::fflush(file_) != 0 ||
        ::fsync(fileno(file_)) != 0)
      throw Error(Errc::io_error, "log append failed");
    ++last_seq_;
  }

  void close() {
    if (file_) {
      std::fclose(file_);
      file_ = nullptr;
    }
  }

  // Reads and validates a whole log file: header, well-formed records,
  // contiguous seq from 1.
  static std::vector<EventRecord> read_all(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot read log '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::corrupt_log, "empty log file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kLogHeader) throw Error(Errc::corrupt_log, "bad log header '" + line + "'");
    std::vector<EventRecord> out;
    std::uint64_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
      if (doc.is_discarded())
        throw Error(Errc::corrupt_log, "log line " + std::to_string(line_no) + " is not a record");
      EventRecord rec;
      try {
        rec.seq = doc.at("seq").get<std::uint64_t>();
        rec.kind = doc.at("kind").get<std::string>();
        rec.payload = doc.at("payload");
        rec.timestamp = doc.value("ts", "");
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::corrupt_log,
                    "log line " + std::to_string(line_no) + ": " + e.what());
      }
      if (rec.seq != out.size() + 1)
        throw Error(Errc::sequence_gap, "log line " + std::to_string(line_no) + ": expected seq " +
                                            std::to_string(out.size() + 1) + ", got " +
                                            std::to_string(rec.seq));
      out.push_back(std::move(rec));
    }
    return out;
  }

 private:
  std::FILE* file_ = nullptr;
  std::uint64_t last_seq_ = 0;
};

// A Store bound to a directory: every mutation is journaled to events.log
// before it is applied, snapshots land in state.snapshot, and open()
// reconstructs the exact pre-shutdown state (snapshot plus log tail).
//
// The outer lock pairs each mutation with its journal append and version
// bump, and lets readers take (result, version) consistently.
class PersistentStore {
 public:
  static constexpr const char* kSnapshotFile = "state.snapshot";
  static constexpr const char* kLogFile = "events.log";

  // Creates a fresh store directory; refuses to touch an existing one.
  static void init(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    fs::path snap = dir / kSnapshotFile;
    fs::path log = dir / kLogFile;
    if (fs::exists(snap) || fs::exists(log))
      throw Error(Errc::io_error, "store at '" + dir.string() + "' is already initialized");
    std::ofstream out(snap);
    if (!out) throw Error(Errc::io_error, "cannot create '" + snap.string() + "'");
    write_snapshot(out, RawState{}, 0);
    Journal j;
    j.open_append(log, 0);
  }

  explicit PersistentStore(const std::filesystem::path& dir) : dir_(dir) {
    namespace fs = std::filesystem;
    fs::path snap = dir_ / kSnapshotFile;
    fs::path log = dir_ / kLogFile;
    if (!fs::exists(snap) && !fs::exists(log)) fs::create_directories(dir_);

    SnapshotMeta meta{};
    if (fs::exists(snap)) {
      std::ifstream in(snap);
      if (!in) throw Error(Errc::io_error, "cannot read '" + snap.string() + "'");
      auto [raw, m] = read_snapshot(in);
      store_ = std::make_unique<Store>(std::move(raw), /*verify_state=*/true);
      meta = m;
    } else {
      store_ = std::make_unique<Store>();
    }
    version_ = meta.last_seq;

    if (fs::exists(log)) {
      std::vector<EventRecord> records = Journal::read_all(log);
      std::uint64_t log_last = records.empty() ? 0 : records.back().seq;
      if (meta.last_seq > log_last)
        throw Error(Errc::sequence_gap, "snapshot includes seq " + std::to_string(meta.last_seq) +
                                            " but the log ends at " + std::to_string(log_last));
      for (const EventRecord& rec : records) {
        if (rec.seq <= meta.last_seq) continue;  // already inside the snapshot
        store_->apply_event(event_from_payload(rec.kind, rec.payload));
        version_ = rec.seq;
      }
      store_->verify();
    } else if (meta.last_seq > 0) {
      throw Error(Errc::sequence_gap, "snapshot includes seq " + std::to_string(meta.last_seq) +
                                          " but there is no log");
    }

    journal_.open_append(log, version_);
    store_->set_observer([this](const Event& event) {
      journal_.append(make_record(version_ + 1, event));
      ++version_;  // the record is durable; later failures cannot unsee it
    });
  }

  // Store configuration pass-through (not journaled; configuration, not state).
  void configure_catalog(DefaultCatalog catalog) { store_->configure_catalog(std::move(catalog)); }
  void set_auto_install(bool enabled) { store_->set_auto_install(enabled); }
  void register_kind(const std::string& name) { store_->register_kind(name); }

  // Runs a mutation with the writer lock held; `fn` gets the store and a
  // live reference to the version counter (already bumped once the mutation
  // returns, so reading it at the end yields the new version).
  template <class F>
  decltype(auto) mutate(F&& fn) {
    std::unique_lock lk(mutex_);
    return fn(*store_, std::as_const(version_));
  }

  // Runs a read against a consistent (state, version) pair.
  template <class F>
  decltype(auto) query(F&& fn) const {
    std::shared_lock lk(mutex_);
    return fn(static_cast<const Store&>(*store_), version_);
  }

  std::uint64_t version() const {
    std::shared_lock lk(mutex_);
    return version_;
  }

  // Serializes the current state (writer quiesced for the duration) and
  // atomically replaces state.snapshot.
  SnapshotMeta snapshot() {
    std::unique_lock lk(mutex_);
    namespace fs = std::filesystem;
    fs::path final_path = dir_ / kSnapshotFile;
    fs::path tmp = dir_ / (std::string(kSnapshotFile) + ".tmp");
    {
      std::ofstream out(tmp);
      if (!out) throw Error(Errc::io_error, "cannot write '" + tmp.string() + "'");
      write_snapshot(out, store_->raw_state(), version_);
    }
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec) throw Error(Errc::io_error, "cannot replace snapshot: " + ec.message());
    return {version_};
  }

  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::unique_ptr<Store> store_;
  Journal journal_;
  std::uint64_t version_ = 0;
  mutable std::shared_mutex mutex_;
};

}  // namespace tierbac
