#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace prelearn {

/// Inclusive date window, both ends `YYYYMMDD`.
struct PageviewWindow {
  std::string start;
  std::string end;
  friend bool operator==(const PageviewWindow&, const PageviewWindow&) = default;
};

/// Throws std::invalid_argument unless both ends are 8-digit dates with start <= end.
void validate_window(const PageviewWindow& w);

struct PageviewSeries {
  std::string title;
  PageviewWindow window;
  std::map<std::string, long long> daily;  // YYYYMMDD -> views
  friend bool operator==(const PageviewSeries&, const PageviewSeries&) = default;
};

/// Mean over the days present in the series; an empty series averages to 0.
double average_daily_views(const PageviewSeries& series);

/// Title-keyed store backed by the JSON cache file
/// `{ "<title>": { "window": [start, end], "daily": { "YYYYMMDD": n } } }`.
class PageviewCache {
 public:
  static PageviewCache load(const std::filesystem::path& path);  // missing file -> empty cache
  void save(const std::filesystem::path& path) const;

  const PageviewSeries* find(const std::string& title, const PageviewWindow& window) const;
  void put(PageviewSeries series);
  std::size_t size() const { return series_.size(); }
  const std::map<std::string, PageviewSeries>& all() const { return series_; }

 private:
  std::map<std::string, PageviewSeries> series_;
};

struct PageviewClientOptions {
  std::string base_url = "https://wikimedia.org/api/rest_v1";
  std::size_t max_concurrency = 4;
  int max_attempts = 4;
  int initial_backoff_ms = 500;
  int timeout_s = 30;
};

/// Base URL override from PRELEARN_PAGEVIEWS_URL, else the public REST API.
std::string pageviews_base_url_from_env();

/// Per-article daily pageviews for it.wikipedia, agent "user", all access.
class PageviewClient {
 public:
  explicit PageviewClient(PageviewClientOptions options = {});

  /// Request path relative to the host, including the base path prefix.
  std::string request_path(const std::string& title, const PageviewWindow& window) const;

  /// HTTP 404 yields an empty series; other failures throw after retries.
  PageviewSeries fetch(const std::string& title, const PageviewWindow& window) const;

  /// Fetches every title with at most max_concurrency requests in flight.
  std::vector<PageviewSeries> fetch_all(const std::vector<std::string>& titles,
                                        const PageviewWindow& window) const;

 private:
  PageviewClientOptions options_;
};

/// Resolves titles to average daily views from the cache, falling back to
/// the live client unless offline. Fetched series are added to the cache.
class PageviewSource {
 public:
  PageviewSource(PageviewCache cache, PageviewWindow window, bool offline,
                 std::optional<PageviewClient> client = std::nullopt);

  /// Offline with a cold cache: throws naming the title.
  double average(const std::string& title);
  /// Ensures every title is cached; fetches concurrently when online.
  void prefetch(const std::vector<std::string>& titles);

  const PageviewCache& cache() const { return cache_; }
  bool dirty() const { return dirty_; }
  const PageviewWindow& window() const { return window_; }

 private:
  PageviewCache cache_;
  PageviewWindow window_;
  bool offline_;
  std::optional<PageviewClient> client_;
  bool dirty_ = false;
};

}  // namespace prelearn
