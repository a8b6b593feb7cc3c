#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace symeval {

struct CompletionRequest {
  std::string prompt;
  int max_tokens = 256;
  double temperature = 0.0;
  std::vector<std::string> stop;  // optional stop sequences
};

struct CompletionResponse {
  std::string text;
  std::string model;  // as reported by the server, when available
  bool from_cache = false;
};

/// Stable content hash of the request (prompt, max_tokens, temperature, and
/// stop when present), independent of process, platform, and field order.
std::string fingerprint(const CompletionRequest& req);

struct FixtureEntry {
  std::string fingerprint;
  std::string prompt;
  int max_tokens = 256;
  double temperature = 0.0;
  std::vector<std::string> stop;
  std::string text;
};

/// JSONL store of recorded completions: a meta header line followed by one
/// entry per line. Not thread-safe; callers serialize access.
class FixtureStore {
 public:
  FixtureStore() = default;

  /// Parses an existing store. Throws BackendError on IO or schema problems.
  static FixtureStore load(const std::filesystem::path& path);

  /// Creates (or truncates) a store and writes the meta line. `created` is an
  /// ISO-8601 timestamp; empty means "now".
  static FixtureStore create(const std::filesystem::path& path,
                             const std::string& model_name,
                             const std::string& created = "");

  /// Opens for appending, creating the file with a meta line if absent.
  static FixtureStore open_append(const std::filesystem::path& path,
                                  const std::string& model_name);

  std::optional<std::string> lookup(const std::string& fp) const;
  bool contains(const std::string& fp) const;

  /// Adds an entry and appends it to the backing file immediately. A repeated
  /// fingerprint overwrites the in-memory entry (last one wins on load too).
  void append(const FixtureEntry& entry);

  std::size_t size() const { return entries_.size(); }
  const std::string& model_name() const { return model_; }
  const std::string& created() const { return created_; }
  const std::filesystem::path& path() const { return path_; }
  const std::map<std::string, FixtureEntry>& entries() const { return entries_; }

 private:
  std::map<std::string, FixtureEntry> entries_;
  std::filesystem::path path_;
  std::string model_;
  std::string created_;
  bool writable_ = false;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResponse complete(const CompletionRequest& req) = 0;
  virtual std::string name() const = 0;
};

struct RetryPolicy {
  int max_retries = 3;  // total attempts = 1 + max_retries
  std::chrono::milliseconds initial_backoff{1000};  // doubles per retry
};

struct EndpointConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/completions";
  std::string model;
  std::string api_key_env = "SYMEVAL_API_KEY";
  std::string auth_header = "Authorization";
  std::string auth_template = "Bearer {key}";  // {key} replaced; empty key allowed
  std::chrono::milliseconds timeout{120000};
  RetryPolicy retry;
};

/// POSTs to a generic completion endpoint: {"model", "prompt", "max_tokens",
/// "temperature"[, "stop"]} in, {"choices":[{"text": ...}]} out. Retries with
/// exponential backoff on timeouts, connection failures, 429 and 5xx.
class LiveBackend : public Backend {
 public:
  using SleepFn = std::function<void(std::chrono::milliseconds)>;
  explicit LiveBackend(EndpointConfig config, SleepFn sleep = {});
  CompletionResponse complete(const CompletionRequest& req) override;
  std::string name() const override { return "live"; }
  const EndpointConfig& config() const { return config_; }

 private:
  EndpointConfig config_;
  SleepFn sleep_;
  std::string api_key_;
};

/// Serves stored completions only; a missing fingerprint is an error that
/// names the fingerprint and the prompt's first 80 characters.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(FixtureStore store);
  CompletionResponse complete(const CompletionRequest& req) override;
  std::string name() const override { return "replay"; }
  const FixtureStore& store() const { return store_; }

 private:
  FixtureStore store_;
};

/// Delegates to an inner backend and persists every new completion; requests
/// whose fingerprint is already stored are served from the store, which makes
/// interrupted recording runs resumable.
class RecordBackend : public Backend {
 public:
  RecordBackend(std::shared_ptr<Backend> inner, FixtureStore store);
  CompletionResponse complete(const CompletionRequest& req) override;
  std::string name() const override { return "record"; }
  const FixtureStore& store() const { return store_; }
  std::size_t recorded_count() const { return recorded_; }
  std::size_t cache_hits() const { return hits_; }

 private:
  std::shared_ptr<Backend> inner_;
  FixtureStore store_;
  std::size_t recorded_ = 0;
  std::size_t hits_ = 0;
  std::mutex mu_;
};

}  // namespace symeval
