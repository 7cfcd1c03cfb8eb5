#include "drivelab/collab/store.hpp"

#include <cstdlib>
#include <random>
#include <stdexcept>

namespace drivelab {

namespace fs = std::filesystem;

fs::path default_data_dir() {
  if (const char* env = std::getenv("AUTOVIS_DATA_DIR"); env && *env) return env;
  return fs::current_path() / "autovis-data";
}

std::string random_hex(std::size_t bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::random_device rd;
  std::string out;
  out.reserve(bytes * 2);
  for (std::size_t i = 0; i < bytes; ++i) {
    const unsigned b = rd() & 0xffu;
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

std::shared_ptr<HostedSession> HostedSession::create(const fs::path& dir, const std::string& id,
                                                     const ConfigDocument& doc, Clock clock,
                                                     HeatmapParams heatmap_params) {
  fs::create_directories(dir);
  write_file(dir / "config.json", canonical_serialize(doc));
  write_file(dir / "token", random_hex(16));
  write_file(dir / "ledger.ndjson", "");
  auto s = open(dir, std::move(clock), heatmap_params);
  if (s->id_ != id) throw std::logic_error("session directory name does not match id");
  return s;
}

std::shared_ptr<HostedSession> HostedSession::open(const fs::path& dir, Clock clock, HeatmapParams heatmap_params) {
  std::shared_ptr<HostedSession> s(new HostedSession());
  s->id_ = dir.filename().string();
  s->dir_ = dir;
  s->config_bytes_ = read_file(dir / "config.json");
  s->doc_ = parse_document(s->config_bytes_);
  s->token_ = read_file(dir / "token");
  while (!s->token_.empty() && (s->token_.back() == '\n' || s->token_.back() == '\r')) s->token_.pop_back();
  s->events_ = std::make_unique<EventIndex>(s->doc_);
  s->heatmap_params_ = heatmap_params;
  const auto ledger = read_ledger(dir / "ledger.ndjson");
  s->sequencer_ = std::make_unique<Sequencer>(s->doc_, replay_ledger(s->doc_, ledger.messages), std::move(clock));
  s->ledger_ = std::make_unique<Ledger>(dir / "ledger.ndjson");
  return s;
}

const std::vector<HeatmapLayer>& HostedSession::heatmaps() const {
  std::call_once(heatmaps_once_, [this] { heatmaps_ = compute_heatmaps(doc_, heatmap_params_, nullptr); });
  return heatmaps_;
}

const HeatmapLayer* HostedSession::heatmap(const std::string& layer_id) const {
  for (const auto& l : heatmaps()) {
    if (l.id == layer_id) return &l;
  }
  return nullptr;
}

HostedSession::Subscription HostedSession::join(const std::string& analyst_id, Sink sink) {
  std::lock_guard lock(mutex_);
  Subscription sub;
  sub.id = next_sink_++;
  sub.snapshot = sequencer_->join(analyst_id);
  sinks_.emplace(sub.id, std::move(sink));
  return sub;
}

void HostedSession::leave(std::uint64_t subscription) {
  std::lock_guard lock(mutex_);
  sinks_.erase(subscription);
}

std::size_t HostedSession::connected() const {
  std::lock_guard lock(mutex_);
  return sinks_.size();
}

ApplyResult HostedSession::propose(const SyncMessage& proposal) {
  std::lock_guard lock(mutex_);
  ApplyResult r = sequencer_->apply(proposal);
  if (!r.accepted) return r;
  ledger_->append(r.message);
  const std::string frame = encode_sync_message(r.message);
  for (const auto& [id, sink] : sinks_) sink(frame);
  return r;
}

SessionState HostedSession::state() const {
  std::lock_guard lock(mutex_);
  return sequencer_->state();
}

void HostedSession::flush() {
  std::lock_guard lock(mutex_);
  ledger_->sync();
}

SessionStore::SessionStore(fs::path root, Clock clock, HeatmapParams heatmap_params)
    : root_(std::move(root)), clock_(std::move(clock)), heatmap_params_(heatmap_params) {
  fs::create_directories(root_);
}

void SessionStore::restore_all(Report* report) {
  std::lock_guard lock(mutex_);
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (!entry.is_directory() || !fs::exists(entry.path() / "config.json")) continue;
    const std::string id = entry.path().filename().string();
    if (sessions_.count(id)) continue;
    try {
      sessions_[id] = HostedSession::open(entry.path(), clock_, heatmap_params_);
    } catch (const std::exception& e) {
      if (report) report->error("sessions/" + id, std::string("cannot restore: ") + e.what());
    }
  }
}

std::shared_ptr<HostedSession> SessionStore::host(const ConfigDocument& doc, Report& report) {
  report.merge(validate(doc));
  if (!report.ok()) return nullptr;
  std::lock_guard lock(mutex_);
  std::string id;
  do {
    id = random_hex(8);
  } while (sessions_.count(id) || fs::exists(root_ / id));
  auto s = HostedSession::create(root_ / id, id, doc, clock_, heatmap_params_);
  sessions_[id] = s;
  return s;
}

std::shared_ptr<HostedSession> SessionStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::vector<std::shared_ptr<HostedSession>> SessionStore::list() const {
  std::lock_guard lock(mutex_);
  std::vector<std::shared_ptr<HostedSession>> out;
  for (const auto& [id, s] : sessions_) out.push_back(s);
  return out;
}

void SessionStore::flush_all() {
  for (const auto& s : list()) s->flush();
}

ConfigDocument materialized_document(ConfigDocument doc, const SessionState& state) {
  doc.annotations.clear();
  for (const auto& [id, a] : state.annotations) doc.annotations.push_back(a);
  return doc;
}

}  // namespace drivelab
