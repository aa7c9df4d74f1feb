#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pbvote/catalog.hpp"
#include "pbvote/prompting.hpp"

namespace pbvote {

struct AgentParams {
  double temperature = 1.0;  // [0, 2]
  std::uint64_t seed = 0;
  std::string model_name;
  int agent_index = 0;
};

enum class BackendKind { Remote, Mock, Replay };

const std::string& to_string(BackendKind k);
BackendKind parse_backend(const std::string& code);  // remote|mock|replay

struct RawResponse {
  std::string text;        // verbatim reply, kept for audit
  std::string turns_echo;  // hash of the bundle it answered
  double latency_ms = 0.0;
  BackendKind backend = BackendKind::Mock;
};

class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual RawResponse chat(const PromptBundle& bundle, const AgentParams& params) = 0;
};

std::string sha256_hex(std::string_view data);
std::string canonical_bundle_serialization(const PromptBundle& bundle);
std::string cache_key(const PromptBundle& bundle, const std::string& model_name,
                      double temperature, int agent_index);

// ---------------------------------------------------------------------------
// Mock voter: utilities play the role of logits in the softmax
// p_i = exp(u_i/t) / sum_j exp(u_j/t); picks are drawn without replacement
// ("softmax peeling"), t = 0 degenerating to argmax with ties broken by
// ascending canonical id.
// ---------------------------------------------------------------------------

struct MockVoterProfile {
  std::array<double, 3> category_weights{};  // indexed by Category
  District home_district = District::Nord;
  double district_bonus = 0.0;
  double cost_aversion = 0.0;  // utility bonus per CHF saved, per 1000 CHF
  std::uint64_t noise_seed = 0;  // 0 disables the per-project jitter
};

/// u_p = category_weight + district_bonus*[home district]
///       + cost_aversion*(10000 - cost)/1000 (+ jitter), per list row.
std::vector<double> mock_utilities(const MockVoterProfile& profile,
                                   const PresentedList& list);

std::string mock_select(const MockVoterProfile& profile, const PresentedList& list,
                        const VotingMethod& method, double temperature,
                        std::uint64_t seed);

/// Draws k indices without replacement; weights from exp((u-max)/t).
std::vector<int> softmax_peel(const std::vector<double>& utilities, int k,
                              double temperature, std::uint64_t seed,
                              const std::vector<int>& tie_order);

/// Integer split of `total` proportional to weights, largest remainder.
std::vector<int> proportional_integer_split(const std::vector<double>& weights, int total);

class MockAgent : public AgentBackend {
 public:
  MockAgent(PresentedList list, std::vector<MockVoterProfile> profiles);

  RawResponse chat(const PromptBundle& bundle, const AgentParams& params) override;

  const MockVoterProfile& profile_for(int agent_index) const;

 private:
  PresentedList list_;
  std::vector<MockVoterProfile> profiles_;
};

// ---------------------------------------------------------------------------
// Record/replay cache: append-only JSONL {key, request, response_text, timestamp}.
// ---------------------------------------------------------------------------

class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::string path);  // loads existing records if present

  std::optional<std::string> lookup(const std::string& key) const;
  void append(const std::string& key, const std::string& request_summary,
              const std::string& response_text);
  std::size_t size() const;

 private:
  std::string path_;  // empty -> in-memory only
  std::map<std::string, std::string> entries_;
  mutable std::mutex mutex_;
};

/// Replay-only: unseen bundles raise CacheMiss.
class ReplayAgent : public AgentBackend {
 public:
  explicit ReplayAgent(std::shared_ptr<ResponseCache> cache);
  RawResponse chat(const PromptBundle& bundle, const AgentParams& params) override;

 private:
  std::shared_ptr<ResponseCache> cache_;
};

/// Serves hits from the cache, forwards misses to the inner backend and
/// records the reply.
class RecordingAgent : public AgentBackend {
 public:
  RecordingAgent(std::unique_ptr<AgentBackend> inner, std::shared_ptr<ResponseCache> cache);
  RawResponse chat(const PromptBundle& bundle, const AgentParams& params) override;

 private:
  std::unique_ptr<AgentBackend> inner_;
  std::shared_ptr<ResponseCache> cache_;
};

// ---------------------------------------------------------------------------
// Remote chat-completion client.
// ---------------------------------------------------------------------------

struct RemoteConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string api_key;
  std::string model;
  int max_attempts = 3;
  double backoff_initial_s = 1.0;
  std::string completions_path = "/chat/completions";
};

/// PBVOTE_API_BASE, PBVOTE_API_KEY, PBVOTE_MODEL.
RemoteConfig remote_config_from_env();

class RemoteAgent : public AgentBackend {
 public:
  explicit RemoteAgent(RemoteConfig config);
  RawResponse chat(const PromptBundle& bundle, const AgentParams& params) override;

 private:
  RemoteConfig config_;
};

/// Thread-safe token bucket; acquire() blocks until a token is available.
class TokenBucket {
 public:
  TokenBucket(double capacity, double refill_per_second);
  void acquire();

 private:
  double capacity_;
  double refill_per_second_;
  double tokens_;
  std::chrono::steady_clock::time_point last_refill_;
  std::mutex mutex_;
};

}  // namespace pbvote
