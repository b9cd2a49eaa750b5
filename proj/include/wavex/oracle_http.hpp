// include/wavex/oracle_http.hpp

// Copyright 2026 The wavex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// HTTP wire protocol for a query channel.
//
//   POST /v1/query   {"sample_rate": 16000, "samples": [..]}
//                    {"sample_rate": 16000, "samples_b64": "<little-endian float32>"}
//                    {"sample_rate": 16000, "batch": [[..], ..]}        (several clips)
//                    {"sample_rate": 16000, "batch_b64": [".." , ..]}
//     200 -> {"label": id, "probabilities": [..]}   (probabilities in soft mode only)
//            or {"results": [ .. one object per clip .. ]} for batch bodies
//     400 -> malformed body; nothing is charged
//     429 -> {"error": .., "remaining": r}; nothing is charged
//   GET  /v1/budget  {"used": u, "limit": L or null}
//   GET  /v1/info    {"n_classes", "input_len", "sample_rate", "mode"}

#pragma once

#include <chrono>
#include <cstring>
#include <memory>
#include <string>
#include <thread>
#include <vector>

// Eigen must precede httplib: <resolv.h> defines a `_res` macro that
// collides with Eigen parameter names.
#include <Eigen/Core>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "wavex/oracle_channel.hpp"

namespace wavex {

inline std::string encode_f32_base64(std::span<const float> v) {
  std::string raw(v.size() * sizeof(float), '\0');
  std::memcpy(raw.data(), v.data(), raw.size());
  return httplib::detail::base64_encode(raw);
}

inline std::vector<float> decode_f32_base64(const std::string& text) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::string raw;
  raw.reserve(text.size() * 3 / 4);
  unsigned acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=') break;
    const int v = value(c);
    if (v < 0) throw PreconditionError("base64: invalid character");
    acc = (acc << 6) | unsigned(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      raw.push_back(static_cast<char>((acc >> bits) & 0xFF));
    }
  }
  if (raw.size() % sizeof(float) != 0) throw PreconditionError("base64: payload is not whole float32 values");
  std::vector<float> out(raw.size() / sizeof(float));
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

namespace detail {

inline nlohmann::json label_json(const Labels& l, std::size_t i) {
  nlohmann::json j = {{"label", l.ids[i]}};
  if (!l.probabilities.empty()) j["probabilities"] = l.probabilities[i];
  return j;
}

// Returns the clips and whether the body used the batch form.
inline std::pair<std::vector<Waveform>, bool> parse_query_body(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw PreconditionError("body is not valid JSON");
  }
  if (!j.is_object()) throw PreconditionError("body must be a JSON object");
  if (!j.contains("sample_rate") || !j["sample_rate"].is_number_integer())
    throw PreconditionError("sample_rate (integer) is required");
  const int sr = j["sample_rate"].get<int>();
  auto as_floats = [](const nlohmann::json& a) {
    if (!a.is_array()) throw PreconditionError("samples must be an array of numbers");
    std::vector<float> s;
    s.reserve(a.size());
    for (const auto& v : a) {
      if (!v.is_number()) throw PreconditionError("samples must be an array of numbers");
      s.push_back(v.get<float>());
    }
    return s;
  };
  auto as_b64 = [](const nlohmann::json& a) {
    if (!a.is_string()) throw PreconditionError("base64 payload must be a string");
    return decode_f32_base64(a.get<std::string>());
  };
  std::vector<Waveform> clips;
  bool batch = false;
  if (j.contains("samples")) {
    clips.emplace_back(as_floats(j["samples"]), sr);
  } else if (j.contains("samples_b64")) {
    clips.emplace_back(as_b64(j["samples_b64"]), sr);
  } else if (j.contains("batch") || j.contains("batch_b64")) {
    batch = true;
    const bool b64 = j.contains("batch_b64");
    const auto& arr = b64 ? j["batch_b64"] : j["batch"];
    if (!arr.is_array()) throw PreconditionError("batch must be an array");
    for (const auto& a : arr) clips.emplace_back(b64 ? as_b64(a) : as_floats(a), sr);
  } else {
    throw PreconditionError("one of samples, samples_b64, batch, batch_b64 is required");
  }
  return {std::move(clips), batch};
}

inline nlohmann::json budget_json(const QueryChannel& ch) {
  nlohmann::json j = {{"used", ch.used()}};
  if (auto l = ch.limit()) j["limit"] = *l;
  else j["limit"] = nullptr;
  return j;
}

}  // namespace detail

// Serves any query channel over HTTP. The channel must outlive the server.
class OracleServer {
 public:
  explicit OracleServer(QueryChannel& channel) : channel_(channel) {
    server_.Post("/v1/query", [this](const httplib::Request& req, httplib::Response& res) {
      const auto reply = [&](int status, const nlohmann::json& j) {
        res.status = status;
        res.set_content(j.dump(), "application/json");
      };
      try {
        auto [clips, batch] = detail::parse_query_body(req.body);
        const auto labels = channel_.query(clips);
        if (!batch) return reply(200, detail::label_json(labels, 0));
        nlohmann::json results = nlohmann::json::array();
        for (std::size_t i = 0; i < labels.size(); ++i) results.push_back(detail::label_json(labels, i));
        reply(200, {{"results", results}});
      } catch (const BudgetExhausted& e) {
        reply(429, {{"error", e.what()}, {"remaining", std::max<std::int64_t>(0, e.remaining())}});
      } catch (const PreconditionError& e) {
        reply(400, {{"error", e.what()}});
      } catch (const std::exception& e) {
        reply(500, {{"error", e.what()}});
      }
    });
    server_.Get("/v1/budget", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(detail::budget_json(channel_).dump(), "application/json");
    });
    server_.Get("/v1/info", [this](const httplib::Request&, httplib::Response& res) {
      const auto i = channel_.info();
      nlohmann::json j = {{"n_classes", i.n_classes},
                          {"input_len", i.input_len},
                          {"sample_rate", i.sample_rate},
                          {"mode", to_string(i.mode)}};
      res.set_content(j.dump(), "application/json");
    });
  }

  ~OracleServer() { stop(); }
  OracleServer(const OracleServer&) = delete;
  OracleServer& operator=(const OracleServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw IoError("oracle server: cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  // Serves on the calling thread until stop() is called from elsewhere.
  void run(const std::string& host, int port) {
    if (!server_.listen(host, port)) throw IoError("oracle server: cannot listen on " + host + ":" + std::to_string(port));
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }

 private:
  QueryChannel& channel_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

// Client side of the wire protocol; the attacker's view of a remote victim.
class RemoteOracle : public QueryChannel {
 public:
  RemoteOracle(const std::string& host, int port, int retries = 3,
               std::chrono::milliseconds backoff = std::chrono::milliseconds(200))
      : host_(host), port_(port), retries_(retries), backoff_(backoff) {
    const auto j = get_json("/v1/info");
    info_.n_classes = j.at("n_classes").get<int>();
    info_.input_len = j.at("input_len").get<std::size_t>();
    info_.sample_rate = j.at("sample_rate").get<int>();
    info_.mode = label_mode_from_string(j.at("mode").get<std::string>());
  }

  // "http://host:port" or "host:port".
  static std::unique_ptr<RemoteOracle> from_url(std::string url) {
    if (url.rfind("http://", 0) == 0) url = url.substr(7);
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto colon = url.rfind(':');
    if (colon == std::string::npos) throw ConfigError("remote oracle: url needs a port: " + url);
    int port = 0;
    try {
      port = std::stoi(url.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("remote oracle: bad port in " + url);
    }
    return std::make_unique<RemoteOracle>(url.substr(0, colon), port);
  }

  ChannelInfo info() const override { return info_; }

  std::int64_t used() const override { return get_json("/v1/budget").at("used").get<std::int64_t>(); }

  std::optional<std::int64_t> limit() const override {
    const auto j = get_json("/v1/budget");
    if (j.at("limit").is_null()) return std::nullopt;
    return j.at("limit").get<std::int64_t>();
  }

  Labels query(std::span<const Waveform> batch) override {
    Labels out;
    if (batch.empty()) return out;
    nlohmann::json body = {{"sample_rate", batch.front().sample_rate}};
    auto arr = nlohmann::json::array();
    for (const auto& w : batch) {
      if (w.sample_rate != batch.front().sample_rate)
        throw PreconditionError("remote oracle: mixed sample rates in one batch");
      arr.push_back(encode_f32_base64(w.samples));
    }
    body["batch_b64"] = std::move(arr);
    const auto res = send([&](httplib::Client& c) { return c.Post("/v1/query", body.dump(), "application/json"); });
    const auto j = parse(res->body);
    if (res->status == 429)
      throw BudgetExhausted(j.value("remaining", std::int64_t(0)), static_cast<std::int64_t>(batch.size()));
    if (res->status == 400) throw PreconditionError("remote oracle: " + j.value("error", std::string("bad request")));
    if (res->status != 200) throw IoError("remote oracle: HTTP " + std::to_string(res->status));
    for (const auto& r : j.at("results")) {
      out.ids.push_back(r.at("label").get<int>());
      if (r.contains("probabilities")) out.probabilities.push_back(r["probabilities"].get<std::vector<float>>());
    }
    if (out.ids.size() != batch.size()) throw IoError("remote oracle: response size mismatch");
    return out;
  }

 private:
  template <typename F>
  httplib::Result send(F&& call) const {
    for (int attempt = 0;; ++attempt) {
      httplib::Client c(host_, port_);
      c.set_connection_timeout(5);
      c.set_read_timeout(120);
      auto res = call(c);
      if (res) return res;
      if (attempt >= retries_)
        throw IoError("remote oracle: cannot reach " + host_ + ":" + std::to_string(port_) + " (" +
                      httplib::to_string(res.error()) + ")");
      std::this_thread::sleep_for(backoff_ * (attempt + 1));
    }
  }

  nlohmann::json get_json(const std::string& path) const {
    const auto res = send([&](httplib::Client& c) { return c.Get(path); });
    if (res->status != 200) throw IoError("remote oracle: GET " + path + " returned " + std::to_string(res->status));
    return parse(res->body);
  }

  static nlohmann::json parse(const std::string& text) {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
      throw IoError("remote oracle: response is not JSON");
    }
  }

  std::string host_;
  int port_;
  int retries_;
  std::chrono::milliseconds backoff_;
  ChannelInfo info_;
};

}  // namespace wavex
