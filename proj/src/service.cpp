#include "oasis/service.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "oasis/config.hpp"
#include "oasis/error.hpp"

namespace oasis {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kLogName = "events.ndjson";

std::string new_session_id() {
  static std::mutex mu;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(mu);
  std::ostringstream os;
  os << std::hex << gen() << gen();
  return os.str().substr(0, 24);
}

long long to_millis(Clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

Clock::time_point from_millis(long long ms) {
  return Clock::time_point(std::chrono::duration_cast<Clock::duration>(std::chrono::milliseconds(ms)));
}

const char* score_kind_name(ScoreKind k) {
  switch (k) {
    case ScoreKind::probability: return "probability";
    case ScoreKind::raw: return "raw";
    default: return "auto";
  }
}

ScoreKind parse_score_kind(const std::string& s) {
  if (s == "probability") return ScoreKind::probability;
  if (s == "raw") return ScoreKind::raw;
  if (s == "auto" || s == "automatic") return ScoreKind::automatic;
  throw Error(ErrorCategory::parameter, "unknown score kind '" + s + "'", "score_kind");
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCategory::io, "cannot write " + p.string());
}

}  // namespace

const char* to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::active: return "active";
    case SessionStatus::paused: return "paused";
    case SessionStatus::exhausted: return "exhausted";
  }
  return "?";
}

std::unordered_map<std::string, Payload> read_payloads(std::string_view text, char delimiter) {
  std::unordered_map<std::string, Payload> out;
  std::vector<std::string> header;
  std::size_t row = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto cells = split_csv_line(line, delimiter);
    if (header.empty()) {
      header = std::move(cells);
      continue;
    }
    ++row;
    if (cells.size() != header.size())
      throw Error(ErrorCategory::schema, "payload row has the wrong number of cells", std::nullopt, row);
    Payload p;
    std::optional<std::string> id;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (header[c] == "pair_id")
        id = cells[c];
      else
        p.emplace_back(header[c], cells[c]);
    }
    if (!id) throw Error(ErrorCategory::schema, "payload file needs a pair_id column", "pair_id");
    out[*id] = std::move(p);
  }
  return out;
}

struct SessionStore::Session {
  std::string id;
  SessionRequest request;
  std::unique_ptr<Pool> pool;
  std::unique_ptr<OasisSampler> sampler;
  std::unordered_map<std::string, Payload> payloads;
  std::unordered_map<std::size_t, int> labels;  // by pair index
  std::vector<IterationRecord> records;
  std::vector<int> answers;
  Clock::time_point created;
  Clock::time_point updated;
  mutable std::mutex mu;

  bool done() const {
    const auto& c = sampler->config();
    return sampler->exhausted() || (c.max_budget && labels.size() >= *c.max_budget);
  }

  void accept(int label) {
    const auto& draw = *sampler->pending();
    labels[draw.pair_index] = label;
    answers.push_back(label);
    records.push_back(sampler->observe(label, labels.size()));
  }
};

SessionStore::SessionStore(ServiceOptions options) : options_(std::move(options)) {
  if (options_.data_dir.empty()) throw Error(ErrorCategory::parameter, "data_dir is required", "data_dir");
  std::error_code ec;
  fs::create_directories(fs::path(options_.data_dir) / "sessions", ec);
  if (ec) throw Error(ErrorCategory::io, "cannot create " + options_.data_dir + ": " + ec.message());
  replay();
  log_ = std::make_unique<std::ofstream>(event_log_path(), std::ios::app | std::ios::binary);
  if (!*log_) throw Error(ErrorCategory::io, "cannot open " + event_log_path());
}

SessionStore::~SessionStore() = default;

std::string SessionStore::event_log_path() const {
  return (fs::path(options_.data_dir) / kLogName).string();
}

void SessionStore::append_event(const std::string& line) {
  std::lock_guard lock(log_mu_);
  if (!log_) return;  // replaying
  *log_ << line << '\n';
  log_->flush();
  if (!*log_) throw Error(ErrorCategory::io, "event log write failed");
}

std::shared_ptr<SessionStore::Session> SessionStore::build(const std::string& id,
                                                           const SessionRequest& req) const {
  if (req.config.strategy != Strategy::oasis)
    throw Error(ErrorCategory::parameter, "sessions run the oasis strategy only", "strategy");
  req.config.validate();
  auto s = std::make_shared<Session>();
  s->id = id;
  s->request = req;
  std::istringstream in(req.pool_csv);
  s->pool = std::make_unique<Pool>(read_pool(in, FormatOptions{',', req.score_kind}));
  if (s->pool->empty()) throw Error(ErrorCategory::empty_pool, "pool is empty", "pool");
  if (req.payload_csv) s->payloads = read_payloads(*req.payload_csv);
  s->sampler = std::make_unique<OasisSampler>(*s->pool, req.config);
  return s;
}

void SessionStore::advance(Session& s, bool log) {
  while (!s.done()) {
    const auto& draw = s.sampler->propose();
    const auto it = s.labels.find(draw.pair_index);
    if (it == s.labels.end()) {
      if (log) {
        append_event(json{{"event", "query"},
                          {"session", s.id},
                          {"t", s.sampler->iteration() + 1},
                          {"pair_id", (*s.pool)[draw.pair_index].pair_id},
                          {"ts", to_millis(options_.clock())}}
                         .dump());
      }
      return;
    }
    const int label = it->second;
    s.records.push_back(s.sampler->observe(label, s.labels.size()));
  }
}

std::string SessionStore::create_session(const SessionRequest& request) {
  const std::string id = new_session_id();
  auto s = build(id, request);
  const auto now = options_.clock();
  s->created = s->updated = now;

  const fs::path dir = fs::path(options_.data_dir) / "sessions" / id;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::io, "cannot create " + dir.string());
  write_file(dir / "pool.csv", request.pool_csv);
  if (request.payload_csv) write_file(dir / "payload.csv", *request.payload_csv);

  json cfg = json::object();
  for (const auto& [k, v] : config_entries(request.config)) cfg[k] = v;
  {
    std::lock_guard lock(s->mu);
    append_event(json{{"event", "create"},
                      {"session", id},
                      {"config", cfg},
                      {"score_kind", score_kind_name(request.score_kind)},
                      {"payload", request.payload_csv.has_value()},
                      {"ts", to_millis(now)}}
                     .dump());
    advance(*s, true);
  }
  std::unique_lock lock(sessions_mu_);
  sessions_.emplace(id, s);
  return id;
}

std::shared_ptr<SessionStore::Session> SessionStore::find(const std::string& id) const {
  std::shared_lock lock(sessions_mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCategory::not_found, "no session '" + id + "'", "session_id");
  return it->second;
}

SessionStatus SessionStore::status(const Session& s) const {
  if (s.done()) return SessionStatus::exhausted;
  if (options_.clock() - s.updated > options_.idle_window) return SessionStatus::paused;
  return SessionStatus::active;
}

QueryView SessionStore::next_query(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  if (s->done()) throw Error(ErrorCategory::exhausted, "session has no queries left");
  s->updated = options_.clock();
  const auto& draw = *s->sampler->pending();
  const auto& pair = (*s->pool)[draw.pair_index];
  QueryView q;
  q.session_id = s->id;
  q.t = s->sampler->iteration() + 1;
  q.pair_id = pair.pair_id;
  q.score = pair.score;
  q.predicted_label = pair.predicted_label;
  if (const auto it = s->payloads.find(pair.pair_id); it != s->payloads.end()) q.payload = it->second;
  q.status = status(*s);
  return q;
}

EstimateView SessionStore::submit_label(const std::string& session_id, const std::string& pair_id,
                                        int label) {
  if (label != 0 && label != 1) throw Error(ErrorCategory::validation, "label must be 0 or 1", "label");
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  if (s->done()) throw Error(ErrorCategory::exhausted, "session has no queries left");
  const auto& pending = (*s->pool)[s->sampler->pending()->pair_index];
  if (pending.pair_id != pair_id)
    throw Error(ErrorCategory::conflict,
                "pair '" + pair_id + "' is not the pending query ('" + pending.pair_id + "')", "pair_id");
  const auto now = options_.clock();
  append_event(json{{"event", "label"},
                    {"session", s->id},
                    {"t", s->sampler->iteration() + 1},
                    {"pair_id", pair_id},
                    {"label", label},
                    {"ts", to_millis(now)}}
                   .dump());
  s->accept(label);
  s->updated = now;
  advance(*s, true);
  return view(*s);
}

EstimateView SessionStore::view(const Session& s) const {
  EstimateView v;
  v.session_id = s.id;
  v.alpha = s.sampler->config().alpha;
  const auto& h = s.sampler->history();
  v.f_measure = ais_f_estimate(h, v.alpha);
  v.precision = ais_precision(h);
  v.recall = ais_recall(h);
  v.budget = s.labels.size();
  v.iteration = s.sampler->iteration();
  v.status = status(s);
  const Eigen::VectorXd pi = s.sampler->posterior().means();
  v.pi_hat.assign(pi.data(), pi.data() + pi.size());
  const Eigen::VectorXd next = s.sampler->instrumental().stratum_probs;
  v.instrumental.assign(next.data(), next.data() + next.size());
  return v;
}

EstimateView SessionStore::get_estimate(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return view(*s);
}

std::vector<IterationRecord> SessionStore::records(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return s->records;
}

std::vector<int> SessionStore::labeller_answers(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return s->answers;
}

const Pool& SessionStore::pool(const std::string& session_id) const { return *find(session_id)->pool; }

std::vector<std::string> SessionStore::session_ids() const {
  std::shared_lock lock(sessions_mu_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

void SessionStore::replay() {
  std::ifstream in(event_log_path(), std::ios::binary);
  if (!in) return;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(std::move(line));

  for (std::size_t n = 0; n < lines.size(); ++n) {
    json ev;
    try {
      ev = json::parse(lines[n]);
    } catch (const json::parse_error&) {
      // A torn final line is what a crash mid-append leaves behind.
      if (n + 1 == lines.size()) break;
      throw Error(ErrorCategory::schema, "event log line is not JSON", std::nullopt, n + 1);
    }
    try {
      const std::string kind = ev.at("event");
      const std::string id = ev.at("session");
      const auto ts = from_millis(ev.at("ts").get<long long>());
      if (kind == "create") {
        const fs::path dir = fs::path(options_.data_dir) / "sessions" / id;
        SessionRequest req;
        req.pool_csv = read_file(dir / "pool.csv");
        if (ev.at("payload").get<bool>()) req.payload_csv = read_file(dir / "payload.csv");
        req.score_kind = parse_score_kind(ev.at("score_kind"));
        for (const auto& [k, v] : ev.at("config").items()) set_config_field(req.config, k, v.get<std::string>());
        auto s = build(id, req);
        s->created = s->updated = ts;
        advance(*s, false);
        sessions_[id] = s;
        continue;
      }
      const auto it = sessions_.find(id);
      if (it == sessions_.end()) throw Error(ErrorCategory::schema, "event for unknown session " + id);
      Session& s = *it->second;
      const std::string pair_id = ev.at("pair_id");
      const auto pending = s.sampler->pending();
      if (s.done() || !pending || (*s.pool)[pending->pair_index].pair_id != pair_id ||
          ev.at("t").get<std::size_t>() != s.sampler->iteration() + 1)
        throw Error(ErrorCategory::schema, "event log diverges from the sampler for session " + id);
      if (kind == "label") {
        s.accept(ev.at("label").get<int>());
        advance(s, false);
      } else if (kind != "query") {
        throw Error(ErrorCategory::schema, "unknown event '" + kind + "'");
      }
      s.updated = ts;
    } catch (const json::exception& e) {
      throw Error(ErrorCategory::schema, std::string("malformed event: ") + e.what(), std::nullopt, n + 1);
    }
  }
}

}  // namespace oasis
