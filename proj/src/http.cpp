#include "http.hpp"

#include <stdexcept>
#include <thread>

namespace prelearn::http {

BaseUrl parse_base_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw std::invalid_argument("base URL lacks a scheme: " + std::string(url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  BaseUrl out;
  if (path_start == std::string_view::npos) {
    out.scheme_host = std::string(url);
  } else {
    out.scheme_host = std::string(url.substr(0, path_start));
    out.path_prefix = std::string(url.substr(path_start));
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  return out;
}

std::string percent_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size() * 3);
  for (unsigned char c : s) {
    const bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                            (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' || c == '~';
    if (unreserved) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0x0F]);
    }
  }
  return out;
}

std::unique_ptr<httplib::Client> make_client(const BaseUrl& base, std::chrono::seconds timeout) {
  auto client = std::make_unique<httplib::Client>(base.scheme_host);
  client->set_connection_timeout(timeout);
  client->set_read_timeout(timeout);
  client->set_follow_location(true);
  return client;
}

Response get_with_retry(httplib::Client& client, const std::string& path, int max_attempts,
                        std::chrono::milliseconds initial_backoff, const httplib::Headers& headers) {
  httplib::Headers all = headers;
  all.emplace("User-Agent", std::string(kUserAgent));
  auto backoff = initial_backoff;
  Response last;
  bool got_response = false;
  std::string last_error;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Get(path, all);
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    got_response = true;
    last = {res->status, res->body};
    if (res->status == 429 || res->status >= 500) continue;
    return last;
  }
  if (!got_response) throw std::runtime_error("HTTP GET " + path + " failed: " + last_error);
  return last;
}

}  // namespace prelearn::http
