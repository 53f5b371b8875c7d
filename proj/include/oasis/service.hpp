#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "oasis/pool.hpp"
#include "oasis/samplers.hpp"

namespace oasis {

enum class SessionStatus { active, paused, exhausted };
const char* to_string(SessionStatus s);

using Clock = std::chrono::system_clock;

// Opaque display fields for one pair, in side-file column order.
using Payload = std::vector<std::pair<std::string, std::string>>;

// Reads a payload side file: a delimited table with a pair_id column; every
// other column is passed through untouched.
std::unordered_map<std::string, Payload> read_payloads(std::string_view text, char delimiter = ',');

struct ServiceOptions {
  // Holds events.ndjson plus one directory per session (uploaded pool and payloads).
  std::string data_dir;
  // Sessions untouched for longer than this report status paused; the next
  // query or label resumes them.
  std::chrono::milliseconds idle_window = std::chrono::minutes(30);
  std::function<Clock::time_point()> clock = [] { return Clock::now(); };
};

struct SessionRequest {
  std::string pool_csv;
  ScoreKind score_kind = ScoreKind::automatic;
  std::optional<std::string> payload_csv;
  SamplerConfig config;
};

struct QueryView {
  std::string session_id;
  std::size_t t = 0;  // iteration this label will complete (1-based)
  std::string pair_id;
  double score = 0.0;
  int predicted_label = 0;
  Payload payload;
  SessionStatus status = SessionStatus::active;
};

struct EstimateView {
  std::string session_id;
  double alpha = 0.5;
  std::optional<double> f_measure;  // nullopt: estimate pending
  std::optional<double> precision;
  std::optional<double> recall;
  std::size_t budget = 0;
  std::size_t iteration = 0;
  SessionStatus status = SessionStatus::active;
  std::vector<double> pi_hat;
  std::vector<double> instrumental;  // stratum distribution of the next draw
};

// Live labelling sessions over OASIS samplers whose oracle is a person.
// Draws whose pair already carries a label are answered from that label
// without asking, so the pending query is always an unlabelled pair and the
// label budget counts distinct pairs. Every create, query and accepted label
// is appended to an NDJSON event log, which the constructor replays.
class SessionStore {
 public:
  explicit SessionStore(ServiceOptions options);
  ~SessionStore();

  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  std::string create_session(const SessionRequest& request);
  QueryView next_query(const std::string& session_id);
  EstimateView submit_label(const std::string& session_id, const std::string& pair_id, int label);
  EstimateView get_estimate(const std::string& session_id) const;

  // Iteration records in order, cached answers included (same layout as run_oasis).
  std::vector<IterationRecord> records(const std::string& session_id) const;
  // Labels given by the labeller, in order; feeding these to run_oasis with
  // replay_labeller reproduces the session.
  std::vector<int> labeller_answers(const std::string& session_id) const;
  const Pool& pool(const std::string& session_id) const;

  std::vector<std::string> session_ids() const;
  std::string event_log_path() const;

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  std::shared_ptr<Session> build(const std::string& id, const SessionRequest& request) const;
  // Answers cached draws until an unlabelled pair is pending or the run ends.
  void advance(Session& s, bool log);
  EstimateView view(const Session& s) const;
  SessionStatus status(const Session& s) const;
  void append_event(const std::string& line);
  void replay();

  ServiceOptions options_;
  mutable std::shared_mutex sessions_mu_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex log_mu_;
  std::unique_ptr<std::ofstream> log_;
};

}  // namespace oasis
