#include "pbvote/agents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "pbvote/errors.hpp"

namespace pbvote {
namespace {

using json = nlohmann::json;

const std::string kBackendNames[] = {"remote", "mock", "replay"};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// uniform in [0, 1), built from the top 53 bits so the value is identical
// on every platform
double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double next_unit(std::mt19937_64& rng) { return to_unit(rng()); }

}  // namespace

const std::string& to_string(BackendKind k) { return kBackendNames[static_cast<int>(k)]; }

BackendKind parse_backend(const std::string& code) {
  for (int i = 0; i < 3; ++i)
    if (code == kBackendNames[i]) return static_cast<BackendKind>(i);
  throw Error(Errc::BadEnumValue, "unknown backend '" + code + "'");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error(Errc::BackendFailure, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string canonical_bundle_serialization(const PromptBundle& bundle) {
  json turns = json::array();
  for (const auto& turn : bundle.turns)
    turns.push_back({{"role", turn.role == Role::System ? "system" : "user"},
                     {"text", turn.text}});
  json j = {{"turns", std::move(turns)},
            {"method", {{"kind", method_code(bundle.method)},
                        {"k", bundle.method.k},
                        {"points", bundle.method.points}}},
            {"treatment", to_string(bundle.treatment)},
            {"persona_used", bundle.persona_used},
            {"cot_used", bundle.cot_used}};
  return j.dump();
}

std::string cache_key(const PromptBundle& bundle, const std::string& model_name,
                      double temperature, int agent_index) {
  char temp_buf[32];
  std::snprintf(temp_buf, sizeof(temp_buf), "%.6f", temperature);
  std::string material = canonical_bundle_serialization(bundle);
  material.push_back('\x1e');
  material += model_name;
  material.push_back('\x1e');
  material += temp_buf;
  material.push_back('\x1e');
  material += std::to_string(agent_index);
  return sha256_hex(material);
}

// ---------------------------------------------------------------------------
// Mock voter
// ---------------------------------------------------------------------------

std::vector<double> mock_utilities(const MockVoterProfile& profile,
                                   const PresentedList& list) {
  std::vector<double> utilities;
  utilities.reserve(list.rows.size());
  for (const auto& row : list.rows) {
    const Project& p = row.project;
    double u = profile.category_weights[static_cast<int>(p.category)];
    if (p.district == profile.home_district) u += profile.district_bonus;
    u += profile.cost_aversion * (10000.0 - p.cost) / 1000.0;
    if (profile.noise_seed != 0) {
      // jitter keyed by the canonical id, so row order and displayed ids
      // never change a voter's utilities
      std::uint64_t bits =
          splitmix64(profile.noise_seed ^ splitmix64(static_cast<std::uint64_t>(p.id)));
      u += (2.0 * to_unit(bits) - 1.0) * 0.05;
    }
    utilities.push_back(u);
  }
  return utilities;
}

std::vector<int> softmax_peel(const std::vector<double>& utilities, int k,
                              double temperature, std::uint64_t seed,
                              const std::vector<int>& tie_order) {
  int n = static_cast<int>(utilities.size());
  if (static_cast<int>(tie_order.size()) != n)
    throw Error(Errc::DegenerateInput, "tie_order must cover all utilities");
  if (temperature < 0.0) throw Error(Errc::DegenerateInput, "temperature must be >= 0");
  k = std::clamp(k, 0, n);

  std::vector<int> remaining(static_cast<std::size_t>(n));
  std::iota(remaining.begin(), remaining.end(), 0);

  if (temperature == 0.0) {
    // argmax peeling: a pure function of the utilities, the seed is unused
    std::sort(remaining.begin(), remaining.end(), [&](int a, int b) {
      if (utilities[a] != utilities[b]) return utilities[a] > utilities[b];
      return tie_order[a] < tie_order[b];
    });
    remaining.resize(static_cast<std::size_t>(k));
    return remaining;
  }

  std::mt19937_64 rng(seed);
  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(k));
  for (int round = 0; round < k; ++round) {
    double m = utilities[remaining.front()];
    for (int idx : remaining) m = std::max(m, utilities[idx]);
    std::vector<double> weights;
    weights.reserve(remaining.size());
    double total = 0.0;
    for (int idx : remaining) {
      double w = std::exp((utilities[idx] - m) / temperature);
      weights.push_back(w);
      total += w;
    }
    double r = next_unit(rng) * total;
    std::size_t chosen = remaining.size() - 1;  // guard against fp underrun
    double acc = 0.0;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      acc += weights[i];
      if (r < acc) {
        chosen = i;
        break;
      }
    }
    picked.push_back(remaining[chosen]);
    remaining.erase(remaining.begin() + static_cast<long>(chosen));
  }
  return picked;
}

std::vector<int> proportional_integer_split(const std::vector<double>& weights, int total) {
  if (weights.empty()) throw Error(Errc::DegenerateInput, "no weights to split over");
  if (total < 0) throw Error(Errc::DegenerateInput, "negative total");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw Error(Errc::DegenerateInput, "negative weight");
    sum += w;
  }
  std::vector<double> shares(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i)
    shares[i] = sum > 0.0 ? weights[i] / sum * total
                          : static_cast<double>(total) / static_cast<double>(weights.size());

  std::vector<int> split(weights.size());
  int assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    split[i] = static_cast<int>(std::floor(shares[i]));
    assigned += split[i];
  }
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double fa = shares[a] - std::floor(shares[a]);
    double fb = shares[b] - std::floor(shares[b]);
    if (fa != fb) return fa > fb;
    return a < b;
  });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++split[order[i % order.size()]];
  return split;
}

std::string mock_select(const MockVoterProfile& profile, const PresentedList& list,
                        const VotingMethod& method, double temperature,
                        std::uint64_t seed) {
  auto utilities = mock_utilities(profile, list);
  int n = static_cast<int>(utilities.size());
  if (n == 0) throw Error(Errc::EmptyBallotSet, "empty project list");
  std::vector<int> tie_order;
  tie_order.reserve(list.rows.size());
  for (const auto& row : list.rows) tie_order.push_back(row.project.id);

  auto displayed = [&](int row_index) { return list.rows[row_index].displayed_id; };

  switch (method.kind) {
    case VotingMethod::Kind::Approval: {
      double mean = std::accumulate(utilities.begin(), utilities.end(), 0.0) / n;
      int k = 0;
      for (double u : utilities) k += u > mean ? 1 : 0;
      k = std::clamp(k, 1, n);
      auto picks = softmax_peel(utilities, k, temperature, seed, tie_order);
      std::string text;
      for (std::size_t i = 0; i < picks.size(); ++i) {
        if (i) text += ", ";
        text += "#" + std::to_string(displayed(picks[i]));
      }
      return text;
    }
    case VotingMethod::Kind::KApproval: {
      auto picks = softmax_peel(utilities, method.k, temperature, seed, tie_order);
      std::string text;
      for (std::size_t i = 0; i < picks.size(); ++i) {
        if (i) text += ", ";
        text += "#" + std::to_string(displayed(picks[i]));
      }
      return text;
    }
    case VotingMethod::Kind::Ranked: {
      auto picks = softmax_peel(utilities, method.k, temperature, seed, tie_order);
      std::string text;
      for (std::size_t i = 0; i < picks.size(); ++i) {
        if (i) text += ",";
        text += "#" + std::to_string(displayed(picks[i]));
      }
      return text;
    }
    case VotingMethod::Kind::Cumulative: {
      auto picks = softmax_peel(utilities, std::min(4, n), temperature, seed, tie_order);
      std::vector<double> weights;
      double least = utilities[picks.front()];
      for (int idx : picks) least = std::min(least, utilities[idx]);
      for (int idx : picks) weights.push_back(utilities[idx] - least + 1.0);
      auto points = proportional_integer_split(weights, method.points);
      std::string text;
      bool first = true;
      for (std::size_t i = 0; i < picks.size(); ++i) {
        if (points[i] == 0) continue;
        if (!first) text += "\n";
        text += "#" + std::to_string(displayed(picks[i])) + ": " + std::to_string(points[i]);
        first = false;
      }
      return text;
    }
  }
  throw Error(Errc::BadEnumValue, "bad method enum");
}

MockAgent::MockAgent(PresentedList list, std::vector<MockVoterProfile> profiles)
    : list_(std::move(list)), profiles_(std::move(profiles)) {
  if (profiles_.empty())
    throw Error(Errc::BackendFailure, "mock backend needs at least one profile");
}

const MockVoterProfile& MockAgent::profile_for(int agent_index) const {
  return profiles_[static_cast<std::size_t>(agent_index) % profiles_.size()];
}

RawResponse MockAgent::chat(const PromptBundle& bundle, const AgentParams& params) {
  auto start = std::chrono::steady_clock::now();
  std::string text = mock_select(profile_for(params.agent_index), list_, bundle.method,
                                 params.temperature, params.seed);
  auto elapsed = std::chrono::steady_clock::now() - start;
  RawResponse response;
  response.text = std::move(text);
  response.turns_echo = sha256_hex(canonical_bundle_serialization(bundle));
  response.latency_ms =
      std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed).count();
  response.backend = BackendKind::Mock;
  return response;
}

// ---------------------------------------------------------------------------
// Record/replay cache
// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // a missing file means an empty cache
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      entries_[j.at("key").get<std::string>()] = j.at("response_text").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(Errc::SchemaError, "bad cache line " + std::to_string(line_no) + ": " +
                                         e.what());
    }
  }
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::append(const std::string& key, const std::string& request_summary,
                           const std::string& response_text) {
  std::lock_guard lock(mutex_);
  entries_[key] = response_text;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error(Errc::BackendFailure, "cannot append to cache " + path_);
  json j = {{"key", key},
            {"request", request_summary},
            {"response_text", response_text},
            {"timestamp", std::chrono::duration_cast<std::chrono::seconds>(
                              std::chrono::system_clock::now().time_since_epoch())
                              .count()}};
  out << j.dump() << '\n';
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

ReplayAgent::ReplayAgent(std::shared_ptr<ResponseCache> cache) : cache_(std::move(cache)) {
  if (!cache_) throw Error(Errc::BackendFailure, "replay backend needs a cache");
}

RawResponse ReplayAgent::chat(const PromptBundle& bundle, const AgentParams& params) {
  std::string key =
      cache_key(bundle, params.model_name, params.temperature, params.agent_index);
  auto hit = cache_->lookup(key);
  if (!hit) throw Error(Errc::CacheMiss, "no cached response for key " + key);
  RawResponse response;
  response.text = *hit;
  response.turns_echo = sha256_hex(canonical_bundle_serialization(bundle));
  response.latency_ms = 0.0;
  response.backend = BackendKind::Replay;
  return response;
}

RecordingAgent::RecordingAgent(std::unique_ptr<AgentBackend> inner,
                               std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
  if (!inner_ || !cache_)
    throw Error(Errc::BackendFailure, "recording backend needs an inner backend and a cache");
}

RawResponse RecordingAgent::chat(const PromptBundle& bundle, const AgentParams& params) {
  std::string key =
      cache_key(bundle, params.model_name, params.temperature, params.agent_index);
  if (auto hit = cache_->lookup(key)) {
    RawResponse response;
    response.text = *hit;
    response.turns_echo = sha256_hex(canonical_bundle_serialization(bundle));
    response.latency_ms = 0.0;
    response.backend = BackendKind::Replay;
    return response;
  }
  RawResponse response = inner_->chat(bundle, params);
  cache_->append(key, canonical_bundle_serialization(bundle), response.text);
  return response;
}

// ---------------------------------------------------------------------------
// Remote client
// ---------------------------------------------------------------------------

RemoteConfig remote_config_from_env() {
  RemoteConfig config;
  if (const char* base = std::getenv("PBVOTE_API_BASE")) config.base_url = base;
  if (const char* key = std::getenv("PBVOTE_API_KEY")) config.api_key = key;
  if (const char* model = std::getenv("PBVOTE_MODEL")) config.model = model;
  return config;
}

RemoteAgent::RemoteAgent(RemoteConfig config) : config_(std::move(config)) {}

RawResponse RemoteAgent::chat(const PromptBundle& bundle, const AgentParams& params) {
  if (config_.base_url.empty() || config_.api_key.empty())
    throw Error(Errc::CredentialMissing, "remote backend needs PBVOTE_API_BASE and PBVOTE_API_KEY");

  // split the base url into scheme://host[:port] and a path prefix
  auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(Errc::CredentialMissing, "base url must include a scheme");
  auto path_start = config_.base_url.find('/', scheme_end + 3);
  std::string host = path_start == std::string::npos ? config_.base_url
                                                     : config_.base_url.substr(0, path_start);
  std::string prefix =
      path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
  std::string path = prefix + config_.completions_path;

  json body;
  body["model"] = params.model_name.empty() ? config_.model : params.model_name;
  body["temperature"] = params.temperature;
  json messages = json::array();
  for (const auto& turn : bundle.turns)
    messages.push_back({{"role", turn.role == Role::System ? "system" : "user"},
                        {"content", turn.text}});
  body["messages"] = std::move(messages);
  std::string payload = body.dump();

  httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};

  auto start = std::chrono::steady_clock::now();
  std::string last_failure = "no attempt made";
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    httplib::Client client(host);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(120, 0);
    auto res = client.Post(path, headers, payload, "application/json");
    if (res && res->status / 100 == 2) {
      try {
        json reply = json::parse(res->body);
        RawResponse response;
        response.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        response.turns_echo = sha256_hex(canonical_bundle_serialization(bundle));
        auto elapsed = std::chrono::steady_clock::now() - start;
        response.latency_ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed)
                .count();
        response.backend = BackendKind::Remote;
        return response;
      } catch (const json::exception& e) {
        throw Error(Errc::RemoteUnavailable, std::string("malformed completion: ") + e.what());
      }
    }
    if (res && (res->status == 401 || res->status == 403))
      throw Error(Errc::CredentialMissing, "endpoint rejected the credential (status " +
                                               std::to_string(res->status) + ")");
    bool retryable = !res || res->status == 429 || res->status / 100 == 5;
    last_failure = res ? "status " + std::to_string(res->status)
                       : "transport error " + httplib::to_string(res.error());
    if (!retryable)
      throw Error(Errc::RemoteUnavailable, "endpoint failed with " + last_failure);
    if (attempt < config_.max_attempts) {
      double backoff = config_.backoff_initial_s * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
    }
  }
  throw Error(Errc::RemoteUnavailable, "endpoint failed after " +
                                           std::to_string(config_.max_attempts) +
                                           " attempts: " + last_failure);
}

TokenBucket::TokenBucket(double capacity, double refill_per_second)
    : capacity_(capacity), refill_per_second_(refill_per_second), tokens_(capacity),
      last_refill_(std::chrono::steady_clock::now()) {
  if (capacity <= 0.0 || refill_per_second <= 0.0)
    throw Error(Errc::DegenerateInput, "token bucket needs positive capacity and rate");
}

void TokenBucket::acquire() {
  std::unique_lock lock(mutex_);
  for (;;) {
    auto now = std::chrono::steady_clock::now();
    double elapsed = std::chrono::duration<double>(now - last_refill_).count();
    tokens_ = std::min(capacity_, tokens_ + elapsed * refill_per_second_);
    last_refill_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    double wait_s = (1.0 - tokens_) / refill_per_second_;
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
    lock.lock();
  }
}

}  // namespace pbvote
