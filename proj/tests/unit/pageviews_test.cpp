#include "prelearn/pageviews.hpp"

#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <regex>
#include <thread>

#include <gtest/gtest.h>
#include <json.hpp>

#include "prelearn/lexres.hpp"
#include "support/synthetic.hpp"
#include "support/stub_server.hpp"

namespace prelearn {
namespace {

const PageviewWindow kWindow{"20200101", "20200105"};

std::string title_from_path(const std::string& path) {
  static const std::regex re(R"(/user/([^/]+)/daily/)");
  std::smatch m;
  return std::regex_search(path, m, re) ? m[1].str() : std::string();
}

std::string items_json(const std::vector<std::pair<std::string, long long>>& days) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& [d, v] : days) items.push_back({{"timestamp", d + "00"}, {"views", v}});
  return nlohmann::json{{"items", items}}.dump();
}

PageviewClientOptions fast_options(const testing::StubServer& server) {
  PageviewClientOptions o;
  o.base_url = server.base_url() + "/api/rest_v1";
  o.initial_backoff_ms = 1;
  o.timeout_s = 5;
  return o;
}

TEST(PageviewWindow, Validation) {
  EXPECT_NO_THROW(validate_window({"20190901", "20200831"}));
  EXPECT_THROW(validate_window({"20200901", "20190831"}), std::invalid_argument);
  EXPECT_THROW(validate_window({"2019091", "20200831"}), std::invalid_argument);
  EXPECT_THROW(validate_window({"2019-09-01", "20200831"}), std::invalid_argument);
}

TEST(PageviewSeries, AverageOverPresentDays) {
  const auto cache = PageviewCache::load(std::string(PRELEARN_FIXTURES) + "/pageviews_365.json");
  const auto* s = cache.find("Triangolo", {"20190901", "20200831"});
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(s->daily.size(), 359u);
  EXPECT_NEAR(average_daily_views(*s), 2540.50139275766, 1e-9);
  EXPECT_EQ(cache.find("Triangolo", {"20190901", "20200830"}), nullptr);
  EXPECT_DOUBLE_EQ(average_daily_views(PageviewSeries{"X", kWindow, {}}), 0.0);
}

TEST(PageviewCache, RoundTrip) {
  PageviewCache c;
  c.put({"Teorema di Pitagora", kWindow, {{"20200101", 10}, {"20200102", 30}}});
  c.put({"Seno", kWindow, {}});
  const auto dir = testing::temp_dir("pv_cache");
  c.save(dir / "cache.json");
  const auto back = PageviewCache::load(dir / "cache.json");
  EXPECT_EQ(back.all(), c.all());
  EXPECT_EQ(PageviewCache::load(dir / "missing.json").size(), 0u);
}

TEST(PageviewClient, RequestPathFollowsRestLayout) {
  PageviewClientOptions o;
  o.base_url = "https://wikimedia.org/api/rest_v1";
  const PageviewClient client(o);
  EXPECT_EQ(client.request_path("Teorema di Pitagora", {"20190901", "20200831"}),
            "/api/rest_v1/metrics/pageviews/per-article/it.wikipedia/all-access/user/Teorema_di_Pitagora/daily/"
            "20190901/20200831");
}

TEST(PageviewClient, FetchParsesItemsAndTreats404AsEmpty) {
  testing::StubServer server([](const httplib::Request& req, httplib::Response& res) {
    if (title_from_path(req.path) == "Triangolo") {
      res.set_content(items_json({{"20200101", 100}, {"20200102", 200}, {"20200104", 600}}), "application/json");
    } else {
      res.status = 404;
    }
  });
  const PageviewClient client(fast_options(server));
  const auto s = client.fetch("Triangolo", kWindow);
  EXPECT_EQ(s.daily.size(), 3u);
  EXPECT_DOUBLE_EQ(average_daily_views(s), 300.0);
  const auto missing = client.fetch("Inesistente", kWindow);
  EXPECT_TRUE(missing.daily.empty());
  EXPECT_DOUBLE_EQ(average_daily_views(missing), 0.0);
}

TEST(PageviewClient, RetriesTransientFailures) {
  std::atomic<int> calls{0};
  testing::StubServer server([&](const httplib::Request&, httplib::Response& res) {
    if (calls.fetch_add(1) < 2) {
      res.status = 503;
      return;
    }
    res.set_content(items_json({{"20200101", 5}}), "application/json");
  });
  const PageviewClient client(fast_options(server));
  EXPECT_EQ(client.fetch("Seno", kWindow).daily.at("20200101"), 5);
  EXPECT_EQ(calls.load(), 3);
}

TEST(PageviewClient, GivesUpAfterMaxAttempts) {
  std::atomic<int> calls{0};
  testing::StubServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  auto opts = fast_options(server);
  opts.max_attempts = 3;
  const PageviewClient client(opts);
  EXPECT_THROW(client.fetch("Seno", kWindow), std::runtime_error);
  EXPECT_EQ(calls.load(), 3);
}

TEST(PageviewClient, FetchAllBoundsConcurrency) {
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  testing::StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    res.set_content(items_json({{"20200101", static_cast<long long>(title_from_path(req.path).size())}}),
                    "application/json");
    --in_flight;
  });
  auto opts = fast_options(server);
  opts.max_concurrency = 2;
  const PageviewClient client(opts);
  std::vector<std::string> titles;
  for (int i = 0; i < 10; ++i) titles.push_back("T" + std::string(static_cast<std::size_t>(i + 1), 'x'));
  const auto all = client.fetch_all(titles, kWindow);
  ASSERT_EQ(all.size(), 10u);
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(all[i].title, titles[i]);
    EXPECT_EQ(all[i].daily.at("20200101"), static_cast<long long>(titles[i].size()));
  }
  EXPECT_LE(peak.load(), 2);
}

TEST(PageviewSource, OfflineColdCacheNamesTitle) {
  PageviewCache cache;
  cache.put({"Seno", kWindow, {{"20200101", 4}, {"20200102", 8}}});
  PageviewSource src(cache, kWindow, true);
  EXPECT_DOUBLE_EQ(src.average("Seno"), 6.0);
  try {
    src.average("Coseno");
    FAIL() << "expected offline error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("Coseno"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("offline"), std::string::npos);
  }
  EXPECT_FALSE(src.dirty());
}

TEST(PageviewSource, OnlineFetchesOnceAndCaches) {
  std::atomic<int> calls{0};
  testing::StubServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.set_content(items_json({{"20200101", 7}}), "application/json");
  });
  PageviewSource src({}, kWindow, false, PageviewClient(fast_options(server)));
  EXPECT_DOUBLE_EQ(src.average("Retta"), 7.0);
  EXPECT_DOUBLE_EQ(src.average("Retta"), 7.0);
  EXPECT_EQ(calls.load(), 1);
  EXPECT_TRUE(src.dirty());
  src.prefetch({"Retta", "Angolo", "Seno"});
  EXPECT_EQ(calls.load(), 3);
  EXPECT_EQ(src.cache().size(), 3u);
}

TEST(FetchMapping, ParsesSparqlBindings) {
  const std::map<std::string, std::string> known = {{"Triangolo", "Q19821"}, {"Teorema di Pitagora", "Q11518"}};
  std::atomic<int> calls{0};
  testing::StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const std::string q = req.get_param_value("query");
    static const std::regex re("\"([^\"]+)\"@it");
    nlohmann::json bindings = nlohmann::json::array();
    for (std::sregex_iterator it(q.begin(), q.end(), re), end; it != end; ++it) {
      const auto t = (*it)[1].str();
      if (auto k = known.find(t); k != known.end()) {
        bindings.push_back({{"title", {{"type", "literal"}, {"value", t}}},
                            {"item", {{"type", "uri"}, {"value", "http://www.wikidata.org/entity/" + k->second}}}});
      }
    }
    res.set_content(nlohmann::json{{"results", {{"bindings", bindings}}}}.dump(), "application/sparql-results+json");
  });
  const std::vector<std::pair<std::string, std::string>> ids = {
      {"c1", "Triangolo"}, {"c2", "Coseno"}, {"c3", "Teorema di Pitagora"}};
  const auto m = fetch_mapping(ids, server.base_url() + "/sparql", 2);
  EXPECT_EQ(calls.load(), 2);
  EXPECT_EQ(m.size(), 3u);
  EXPECT_EQ(m.qid("c1"), std::optional<std::string>("Q19821"));
  EXPECT_FALSE(m.qid("c2").has_value());
  EXPECT_EQ(m.qid("c3"), std::optional<std::string>("Q11518"));
}

}  // namespace
}  // namespace prelearn
