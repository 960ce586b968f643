#pragma once

// Internal HTTP helpers shared by the pageview and SPARQL clients.

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include <httplib.h>

namespace prelearn::http {

struct BaseUrl {
  std::string scheme_host;  // "https://wikimedia.org" or "http://127.0.0.1:8080"
  std::string path_prefix;  // "/api/rest_v1", may be empty
};

BaseUrl parse_base_url(std::string_view url);

/// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string percent_encode(std::string_view s);

std::unique_ptr<httplib::Client> make_client(const BaseUrl& base, std::chrono::seconds timeout);

struct Response {
  int status = 0;
  std::string body;
};

/// GET with retries on transport errors, 429 and 5xx. Backoff doubles from
/// `initial_backoff`. Returns the last response; throws if no response was
/// ever received.
Response get_with_retry(httplib::Client& client, const std::string& path, int max_attempts,
                        std::chrono::milliseconds initial_backoff,
                        const httplib::Headers& headers = {});

inline constexpr std::string_view kUserAgent = "prelearn-toolkit/1.0 (research; batch)";

}  // namespace prelearn::http
