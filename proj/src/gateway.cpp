#include "delib/gateway.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <openssl/sha.h>

#include "httplib.h"
#include "json.hpp"

namespace delib {
namespace {

using nlohmann::json;

const char kBase64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<uint8_t>& data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  size_t i = 0;
  while (i + 2 < data.size()) {
    uint32_t n = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out += kBase64Chars[(n >> 18) & 63];
    out += kBase64Chars[(n >> 12) & 63];
    out += kBase64Chars[(n >> 6) & 63];
    out += kBase64Chars[n & 63];
    i += 3;
  }
  if (i + 1 == data.size()) {
    uint32_t n = data[i] << 16;
    out += kBase64Chars[(n >> 18) & 63];
    out += kBase64Chars[(n >> 12) & 63];
    out += "==";
  } else if (i + 2 == data.size()) {
    uint32_t n = (data[i] << 16) | (data[i + 1] << 8);
    out += kBase64Chars[(n >> 18) & 63];
    out += kBase64Chars[(n >> 12) & 63];
    out += kBase64Chars[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

}  // namespace

std::string sha256_hex(const uint8_t* data, size_t len) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(data, len, digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (unsigned char b : digest) {
    out += hex[b >> 4];
    out += hex[b & 15];
  }
  return out;
}

std::string request_digest(const std::vector<ChatMessage>& messages) {
  SHA256_CTX ctx;
  SHA256_Init(&ctx);
  auto feed = [&](const void* p, size_t n) { SHA256_Update(&ctx, p, n); };
  for (const auto& msg : messages) {
    const char* role = msg.role == Role::System ? "system" : "user";
    feed(role, std::strlen(role) + 1);
    for (const auto& part : msg.parts) {
      if (const auto* text = std::get_if<TextPart>(&part)) {
        feed("t", 1);
        feed(text->text.data(), text->text.size());
        feed("\0", 1);
      } else {
        const auto& img = std::get<ImagePart>(part);
        // hash the image digest, not the bytes, so the cassette format stays small
        std::string d = sha256_hex(img.png_bytes.data(), img.png_bytes.size());
        feed("i", 1);
        feed(d.data(), d.size());
      }
    }
  }
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256_Final(digest, &ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (unsigned char b : digest) {
    out += hex[b >> 4];
    out += hex[b & 15];
  }
  return out;
}

std::string HttpBackend::build_request_body(const std::vector<ChatMessage>& messages,
                                            const ModelConfig& cfg) {
  json body;
  body["model"] = cfg.model;
  body["temperature"] = cfg.temperature;
  body["max_tokens"] = cfg.max_tokens;
  body["messages"] = json::array();
  for (const auto& msg : messages) {
    json m;
    m["role"] = msg.role == Role::System ? "system" : "user";
    json content = json::array();
    for (const auto& part : msg.parts) {
      if (const auto* text = std::get_if<TextPart>(&part)) {
        content.push_back({{"type", "text"}, {"text", text->text}});
      } else {
        const auto& img = std::get<ImagePart>(part);
        content.push_back(
            {{"type", "image_url"},
             {"image_url",
              {{"url", "data:image/png;base64," + base64_encode(img.png_bytes)}}}});
      }
    }
    m["content"] = std::move(content);
    body["messages"].push_back(std::move(m));
  }
  return body.dump();
}

std::string HttpBackend::complete(const std::vector<ChatMessage>& messages,
                                  const ModelConfig& cfg) {
  if (messages.empty()) {
    throw GatewayError(GatewayErr::Transport, "no messages to send");
  }
  httplib::Client client(cfg.endpoint);
  client.set_connection_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
  client.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);

  auto res = client.Post("/v1/chat/completions", build_request_body(messages, cfg),
                         "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      throw GatewayError(GatewayErr::Timeout, "request timed out: " + cfg.endpoint);
    }
    throw GatewayError(GatewayErr::Transport,
                       "transport failure: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw GatewayError(GatewayErr::BadStatus,
                       "HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty()) {
    throw GatewayError(GatewayErr::EmptyCompletion, "no choices in response");
  }
  std::string text =
      reply["choices"][0].value("message", json::object()).value("content", "");
  if (text.empty()) {
    throw GatewayError(GatewayErr::EmptyCompletion, "empty completion text");
  }
  return text;
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies)
    : replies_(replies.begin(), replies.end()) {}

void ScriptedBackend::push_reply(std::string reply) {
  replies_.push_back(std::move(reply));
}

std::string ScriptedBackend::complete(const std::vector<ChatMessage>& messages,
                                      const ModelConfig& cfg) {
  (void)messages;
  (void)cfg;
  if (replies_.empty()) {
    throw GatewayError(GatewayErr::EmptyCompletion, "scripted backend out of replies");
  }
  std::string reply = std::move(replies_.front());
  replies_.pop_front();
  return reply;
}

// Cassette file: "CASS1" header, then per record one digest line, one decimal
// length line, then exactly that many response bytes followed by a newline.
void write_cassette(const std::string& path, const std::vector<CassetteEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw GatewayError(GatewayErr::CassetteIo, "cannot write " + path);
  out << "CASS1\n";
  for (const auto& e : entries) {
    out << e.digest << "\n" << e.response.size() << "\n" << e.response << "\n";
  }
}

std::vector<CassetteEntry> read_cassette(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GatewayError(GatewayErr::CassetteIo, "cannot read " + path);
  std::string magic;
  std::getline(in, magic);
  if (magic != "CASS1") {
    throw GatewayError(GatewayErr::CassetteIo, "bad cassette header in " + path);
  }
  std::vector<CassetteEntry> entries;
  std::string digest;
  while (std::getline(in, digest)) {
    if (digest.empty()) continue;
    std::string len_line;
    if (!std::getline(in, len_line)) {
      throw GatewayError(GatewayErr::CassetteIo, "truncated cassette " + path);
    }
    size_t len = std::stoul(len_line);
    std::string response(len, '\0');
    in.read(response.data(), static_cast<std::streamsize>(len));
    if (in.gcount() != static_cast<std::streamsize>(len)) {
      throw GatewayError(GatewayErr::CassetteIo, "truncated cassette " + path);
    }
    in.get();  // trailing newline
    entries.push_back({digest, std::move(response)});
  }
  return entries;
}

CassetteRecorder::CassetteRecorder(std::shared_ptr<Backend> inner, std::string path)
    : inner_(std::move(inner)), path_(std::move(path)) {}

std::string CassetteRecorder::complete(const std::vector<ChatMessage>& messages,
                                       const ModelConfig& cfg) {
  std::string response = inner_->complete(messages, cfg);
  entries_.push_back({request_digest(messages), response});
  return response;
}

void CassetteRecorder::save() const { write_cassette(path_, entries_); }

CassetteReplayer::CassetteReplayer(const std::string& path)
    : entries_(read_cassette(path)) {}

CassetteReplayer::CassetteReplayer(std::vector<CassetteEntry> entries)
    : entries_(std::move(entries)) {}

std::string CassetteReplayer::complete(const std::vector<ChatMessage>& messages,
                                       const ModelConfig& cfg) {
  (void)cfg;
  if (next_ >= entries_.size()) {
    throw GatewayError(GatewayErr::ExhaustedCassette, "no cassette entries left");
  }
  std::string digest = request_digest(messages);
  const CassetteEntry& entry = entries_[next_];
  if (entry.digest != digest) {
    throw GatewayError(GatewayErr::ReplayMismatch,
                       "request digest " + digest + " does not match cassette entry " +
                           std::to_string(next_) + " (" + entry.digest + ")");
  }
  ++next_;
  return entry.response;
}

}  // namespace delib
