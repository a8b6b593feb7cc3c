#include "symeval/backend.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "symeval/errors.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

namespace symeval {

namespace {

using nlohmann::json;

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw BackendError("failed to allocate digest context");
  bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
            EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
            EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw BackendError("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0x0f]);
  }
  return out;
}

json params_json(int max_tokens, double temperature,
                 const std::vector<std::string>& stop) {
  json p;
  p["max_tokens"] = max_tokens;
  p["temperature"] = temperature;
  if (!stop.empty()) p["stop"] = stop;
  return p;
}

std::string iso8601_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

constexpr const char* kFixtureKind = "symeval.fixtures";

}  // namespace

std::string fingerprint(const CompletionRequest& req) {
  // nlohmann::json orders object keys, so the dump is canonical.
  json j;
  j["max_tokens"] = req.max_tokens;
  j["prompt"] = req.prompt;
  j["temperature"] = req.temperature;
  if (!req.stop.empty()) j["stop"] = req.stop;
  return sha256_hex(j.dump());
}

FixtureStore FixtureStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open fixture file: " + path.string());
  FixtureStore store;
  store.path_ = path;
  std::string line;
  std::size_t line_no = 0;
  bool saw_meta = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw BackendError("fixture file " + path.string() + ": invalid JSON on line " +
                         std::to_string(line_no));
    }
    if (!saw_meta) {
      if (j.value("kind", "") != kFixtureKind) {
        throw BackendError("fixture file " + path.string() +
                           ": first line is not a fixture meta header");
      }
      store.model_ = j.value("model", "");
      store.created_ = j.value("created", "");
      saw_meta = true;
      continue;
    }
    FixtureEntry e;
    try {
      e.fingerprint = j.at("fingerprint").get<std::string>();
      e.prompt = j.at("prompt").get<std::string>();
      const json& p = j.at("params");
      e.max_tokens = p.at("max_tokens").get<int>();
      e.temperature = p.at("temperature").get<double>();
      if (p.contains("stop")) e.stop = p.at("stop").get<std::vector<std::string>>();
      e.text = j.at("text").get<std::string>();
    } catch (const json::exception& ex) {
      throw BackendError("fixture file " + path.string() + ": line " +
                         std::to_string(line_no) + ": " + ex.what());
    }
    store.entries_[e.fingerprint] = e;  // last one wins
  }
  if (!saw_meta) {
    throw BackendError("fixture file " + path.string() + ": empty (missing meta header)");
  }
  return store;
}

FixtureStore FixtureStore::create(const std::filesystem::path& path,
                                  const std::string& model_name,
                                  const std::string& created) {
  FixtureStore store;
  store.path_ = path;
  store.model_ = model_name;
  store.created_ = created.empty() ? iso8601_now() : created;
  store.writable_ = true;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw BackendError("cannot create fixture file: " + path.string());
  json meta;
  meta["schema_version"] = 1;
  meta["kind"] = kFixtureKind;
  meta["model"] = store.model_;
  meta["created"] = store.created_;
  out << meta.dump() << '\n';
  if (!out) throw BackendError("failed writing fixture meta: " + path.string());
  return store;
}

FixtureStore FixtureStore::open_append(const std::filesystem::path& path,
                                       const std::string& model_name) {
  if (std::filesystem::exists(path)) {
    FixtureStore store = load(path);
    store.writable_ = true;
    return store;
  }
  return create(path, model_name);
}

std::optional<std::string> FixtureStore::lookup(const std::string& fp) const {
  auto it = entries_.find(fp);
  if (it == entries_.end()) return std::nullopt;
  return it->second.text;
}

bool FixtureStore::contains(const std::string& fp) const {
  return entries_.count(fp) > 0;
}

void FixtureStore::append(const FixtureEntry& entry) {
  if (!writable_) throw BackendError("fixture store is read-only: " + path_.string());
  std::ofstream out(path_, std::ios::app);
  if (!out) throw BackendError("cannot append to fixture file: " + path_.string());
  json j;
  j["fingerprint"] = entry.fingerprint;
  j["prompt"] = entry.prompt;
  j["params"] = params_json(entry.max_tokens, entry.temperature, entry.stop);
  j["text"] = entry.text;
  out << j.dump() << '\n';
  if (!out) throw BackendError("failed appending fixture entry: " + path_.string());
  entries_[entry.fingerprint] = entry;
}

// ---------------------------------------------------------------------------
// Live backend

LiveBackend::LiveBackend(EndpointConfig config, SleepFn sleep)
    : config_(std::move(config)), sleep_(std::move(sleep)) {
  if (config_.base_url.empty()) throw ConfigError("live backend requires a base URL");
  if (!sleep_) {
    sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr) {
      throw ConfigError("API key environment variable not set: " + config_.api_key_env);
    }
    api_key_ = key;
  }
}

CompletionResponse LiveBackend::complete(const CompletionRequest& req) {
  json body;
  if (!config_.model.empty()) body["model"] = config_.model;
  body["prompt"] = req.prompt;
  body["max_tokens"] = req.max_tokens;
  body["temperature"] = req.temperature;
  if (!req.stop.empty()) body["stop"] = req.stop;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.auth_header.empty() && !config_.auth_template.empty()) {
    std::string value = config_.auth_template;
    const std::string marker = "{key}";
    if (auto pos = value.find(marker); pos != std::string::npos) {
      value.replace(pos, marker.size(), api_key_);
    }
    headers.emplace(config_.auth_header, value);
  }

  const int attempts = 1 + std::max(0, config_.retry.max_retries);
  auto backoff = config_.retry.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      sleep_(backoff);
      backoff *= 2;
    }
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));

    auto result = client.Post(config_.path, headers, payload, "application/json");
    if (!result) {
      last_error = "connection error: " + httplib::to_string(result.error());
      continue;  // transport failures are retryable
    }
    const int status = result->status;
    if (status == 429 || (status >= 500 && status <= 599)) {
      last_error = "HTTP " + std::to_string(status);
      continue;
    }
    if (status < 200 || status >= 300) {
      throw BackendError("completion endpoint returned HTTP " + std::to_string(status) +
                         ": " + result->body.substr(0, 200));
    }
    json parsed = json::parse(result->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") ||
        !parsed["choices"].is_array() || parsed["choices"].empty() ||
        !parsed["choices"][0].contains("text")) {
      throw BackendError("malformed completion response body: " +
                         result->body.substr(0, 200));
    }
    CompletionResponse resp;
    resp.text = parsed["choices"][0]["text"].get<std::string>();
    resp.model = parsed.value("model", config_.model);
    return resp;
  }
  throw BackendError("completion request failed after " + std::to_string(attempts) +
                     " attempts (" + last_error + ")");
}

// ---------------------------------------------------------------------------
// Replay backend

ReplayBackend::ReplayBackend(FixtureStore store) : store_(std::move(store)) {}

CompletionResponse ReplayBackend::complete(const CompletionRequest& req) {
  const std::string fp = fingerprint(req);
  auto text = store_.lookup(fp);
  if (!text) throw FixtureMissError(fp, req.prompt.substr(0, 80));
  CompletionResponse resp;
  resp.text = *text;
  resp.model = store_.model_name();
  resp.from_cache = true;
  return resp;
}

// ---------------------------------------------------------------------------
// Record backend

RecordBackend::RecordBackend(std::shared_ptr<Backend> inner, FixtureStore store)
    : inner_(std::move(inner)), store_(std::move(store)) {
  if (!inner_) throw ConfigError("record backend requires an inner backend");
}

CompletionResponse RecordBackend::complete(const CompletionRequest& req) {
  const std::string fp = fingerprint(req);
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto text = store_.lookup(fp)) {
      ++hits_;
      CompletionResponse resp;
      resp.text = *text;
      resp.model = store_.model_name();
      resp.from_cache = true;
      return resp;
    }
  }
  CompletionResponse resp = inner_->complete(req);
  std::lock_guard<std::mutex> lock(mu_);
  if (!store_.contains(fp)) {
    FixtureEntry e;
    e.fingerprint = fp;
    e.prompt = req.prompt;
    e.max_tokens = req.max_tokens;
    e.temperature = req.temperature;
    e.stop = req.stop;
    e.text = resp.text;
    store_.append(e);
    ++recorded_;
  }
  return resp;
}

}  // namespace symeval
