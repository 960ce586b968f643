#include "prelearn/pageviews.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "http.hpp"

namespace prelearn {
namespace {

bool is_date(const std::string& s) {
  return s.size() == 8 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

void validate_window(const PageviewWindow& w) {
  if (!is_date(w.start) || !is_date(w.end)) {
    throw std::invalid_argument("pageview window ends must be YYYYMMDD, got " + w.start + ".." + w.end);
  }
  if (w.start > w.end) throw std::invalid_argument("pageview window start after end");
}

double average_daily_views(const PageviewSeries& series) {
  if (series.daily.empty()) return 0.0;
  long double sum = 0;
  for (const auto& [day, views] : series.daily) sum += views;
  return static_cast<double>(sum / static_cast<long double>(series.daily.size()));
}

PageviewCache PageviewCache::load(const std::filesystem::path& path) {
  PageviewCache cache;
  if (!std::filesystem::exists(path)) return cache;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed pageview cache " + path.string() + ": " + e.what());
  }
  for (const auto& [title, entry] : doc.items()) {
    PageviewSeries s;
    s.title = title;
    const auto& w = entry.at("window");
    s.window = {w.at(0).get<std::string>(), w.at(1).get<std::string>()};
    validate_window(s.window);
    for (const auto& [day, views] : entry.at("daily").items()) {
      if (!is_date(day) || day < s.window.start || day > s.window.end) {
        throw std::runtime_error("pageview cache: day " + day + " outside window for '" + title + "'");
      }
      const auto n = views.get<long long>();
      if (n < 0) throw std::runtime_error("pageview cache: negative count for '" + title + "'");
      s.daily.emplace(day, n);
    }
    cache.series_.emplace(title, std::move(s));
  }
  return cache;
}

void PageviewCache::save(const std::filesystem::path& path) const {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [title, s] : series_) {
    nlohmann::json daily = nlohmann::json::object();
    for (const auto& [day, n] : s.daily) daily[day] = n;
    doc[title] = {{"window", {s.window.start, s.window.end}}, {"daily", daily}};
  }
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << doc.dump(1) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

const PageviewSeries* PageviewCache::find(const std::string& title, const PageviewWindow& window) const {
  const auto it = series_.find(title);
  if (it == series_.end() || !(it->second.window == window)) return nullptr;
  return &it->second;
}

void PageviewCache::put(PageviewSeries series) {
  auto title = series.title;
  series_.insert_or_assign(std::move(title), std::move(series));
}

std::string pageviews_base_url_from_env() {
  if (const char* env = std::getenv("PRELEARN_PAGEVIEWS_URL"); env && *env) return env;
  return PageviewClientOptions{}.base_url;
}

PageviewClient::PageviewClient(PageviewClientOptions options) : options_(std::move(options)) {
  if (options_.max_concurrency == 0) options_.max_concurrency = 1;
}

std::string PageviewClient::request_path(const std::string& title, const PageviewWindow& window) const {
  std::string t = title;
  std::replace(t.begin(), t.end(), ' ', '_');
  const auto base = http::parse_base_url(options_.base_url);
  return base.path_prefix + "/metrics/pageviews/per-article/it.wikipedia/all-access/user/" +
         http::percent_encode(t) + "/daily/" + window.start + "/" + window.end;
}

PageviewSeries PageviewClient::fetch(const std::string& title, const PageviewWindow& window) const {
  validate_window(window);
  const auto base = http::parse_base_url(options_.base_url);
  auto client = http::make_client(base, std::chrono::seconds(options_.timeout_s));
  const auto res = http::get_with_retry(*client, request_path(title, window), options_.max_attempts,
                                        std::chrono::milliseconds(options_.initial_backoff_ms));
  PageviewSeries s{title, window, {}};
  if (res.status == 404) return s;
  if (res.status != 200) {
    throw std::runtime_error("pageviews API returned HTTP " + std::to_string(res.status) + " for '" +
                             title + "'");
  }
  const auto doc = nlohmann::json::parse(res.body);
  for (const auto& item : doc.at("items")) {
    const std::string day = item.at("timestamp").get<std::string>().substr(0, 8);
    if (day < window.start || day > window.end) continue;
    s.daily[day] += item.at("views").get<long long>();
  }
  return s;
}

std::vector<PageviewSeries> PageviewClient::fetch_all(const std::vector<std::string>& titles,
                                                      const PageviewWindow& window) const {
  std::vector<PageviewSeries> out(titles.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < titles.size();) {
      try {
        out[i] = fetch(titles[i], window);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(options_.max_concurrency, std::max<std::size_t>(titles.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

PageviewSource::PageviewSource(PageviewCache cache, PageviewWindow window, bool offline,
                               std::optional<PageviewClient> client)
    : cache_(std::move(cache)), window_(std::move(window)), offline_(offline), client_(std::move(client)) {
  validate_window(window_);
  if (!offline_ && !client_) client_.emplace(PageviewClientOptions{pageviews_base_url_from_env()});
}

double PageviewSource::average(const std::string& title) {
  if (const auto* s = cache_.find(title, window_)) return average_daily_views(*s);
  if (offline_) {
    throw std::runtime_error("offline mode: no cached pageviews for '" + title + "' in window " +
                             window_.start + ".." + window_.end);
  }
  auto s = client_->fetch(title, window_);
  const double avg = average_daily_views(s);
  cache_.put(std::move(s));
  dirty_ = true;
  return avg;
}

void PageviewSource::prefetch(const std::vector<std::string>& titles) {
  std::vector<std::string> missing;
  for (const auto& t : titles) {
    if (!cache_.find(t, window_) && std::find(missing.begin(), missing.end(), t) == missing.end()) {
      missing.push_back(t);
    }
  }
  if (missing.empty()) return;
  if (offline_) {
    throw std::runtime_error("offline mode: no cached pageviews for '" + missing.front() + "' in window " +
                             window_.start + ".." + window_.end);
  }
  for (auto& s : client_->fetch_all(missing, window_)) cache_.put(std::move(s));
  dirty_ = true;
}

}  // namespace prelearn
