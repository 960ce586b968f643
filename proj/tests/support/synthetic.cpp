#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

namespace prelearn::testing {
namespace {

std::string pseudo_word(std::mt19937_64& rng, std::size_t len) {
  static constexpr char kConsonants[] = "bcdfglmnprstvz";
  static constexpr char kVowels[] = "aeiou";
  std::string w;
  for (std::size_t i = 0; i < len; ++i) {
    if (i % 2 == 0) {
      w.push_back(kConsonants[rng() % (sizeof kConsonants - 1)]);
    } else {
      w.push_back(kVowels[rng() % (sizeof kVowels - 1)]);
    }
  }
  return w;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (Eigen::Index j = 0; j < dim; ++j) v[j] = g(rng);
  return v;
}

}  // namespace

SyntheticCorpus make_synthetic(const SyntheticOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticCorpus out;

  // Filler vocabulary with AoA ratings; some words rated twice.
  std::vector<std::string> vocab;
  std::set<std::string> used;
  while (vocab.size() < 80) {
    auto w = pseudo_word(rng, 4);
    if (used.insert(w).second) vocab.push_back(w);
  }
  std::uniform_real_distribution<double> aoa(2.0, 12.0);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out.aoa_rows.emplace_back(vocab[i], aoa(rng));
    if (i % 5 == 0) out.aoa_rows.emplace_back(vocab[i], aoa(rng));
  }
  out.lexicon = AoaLexicon(out.aoa_rows);

  // Titles are 9-letter pseudo-words, so no title occurs inside another
  // title or inside a 4-letter filler word by construction of length.
  std::vector<Concept> concepts;
  std::map<Domain, std::vector<std::size_t>> by_domain;
  for (Domain d : kAllDomains) {
    for (std::size_t i = 0; i < o.concepts_per_domain; ++i) {
      std::string title;
      do {
        title = pseudo_word(rng, 9);
      } while (!used.insert(title).second);
      Concept c;
      c.id = std::string(domain_short(d)) + "_" + std::to_string(i);
      c.title = title;
      c.domain = d;
      by_domain[d].push_back(concepts.size());
      concepts.push_back(std::move(c));
    }
  }

  std::vector<std::vector<std::string>> mentions(concepts.size());
  std::vector<std::pair<std::size_t, std::size_t>> pair_members;
  for (Domain d : kAllDomains) {
    const auto& members = by_domain[d];
    std::set<std::pair<std::size_t, std::size_t>> taken;
    DomainPairs dp;
    const std::size_t total = o.train_pairs_per_domain + o.test_pairs_per_domain;
    while (taken.size() < total) {
      const std::size_t a = members[rng() % members.size()];
      const std::size_t b = members[rng() % members.size()];
      if (a == b || !taken.emplace(a, b).second) continue;
      LabeledPair p{concepts[a].id, concepts[b].id, unit(rng) < o.positive_rate ? 1 : 0, d};
      (dp.train.size() < o.train_pairs_per_domain ? dp.train : dp.test).push_back(std::move(p));
      pair_members.emplace_back(a, b);
    }
    // Within each split, exactly round(signal * n_c) pairs of class c agree
    // with the substring feature: positives get the mention, negatives do not.
    const std::size_t n_train = dp.train.size();
    auto plant = [&](const std::vector<LabeledPair>& split, std::size_t offset) {
      for (int label : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < split.size(); ++i) {
          if (split[i].label == label) idx.push_back(i);
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto agree = static_cast<std::size_t>(std::llround(o.signal * static_cast<double>(idx.size())));
        for (std::size_t j = 0; j < idx.size(); ++j) {
          if ((j < agree) != (label == 1)) continue;
          const auto [a, b] = pair_members[offset + idx[j]];
          mentions[a].push_back(concepts[b].title);
        }
      }
    };
    plant(dp.train, 0);
    plant(dp.test, n_train);
    pair_members.clear();
    out.dataset.pairs.emplace(d, std::move(dp));
  }

  std::uniform_int_distribution<int> n_words(15, 40);
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    std::vector<std::string> words;
    const int n = n_words(rng);
    for (int k = 0; k < n; ++k) words.push_back(vocab[rng() % vocab.size()]);
    const int formulas = static_cast<int>(rng() % 4);
    for (int k = 0; k < formulas; ++k) words.push_back("formula_" + std::to_string(k + 1));
    for (const auto& m : mentions[i]) words.push_back(m);
    std::shuffle(words.begin(), words.end(), rng);
    std::string desc;
    for (std::size_t k = 0; k < words.size(); ++k) {
      desc += (k ? (k % 11 == 0 ? ".\n" : " ") : "") + words[k];
    }
    concepts[i].description = desc + ".";
  }

  for (std::size_t i = 0; i < concepts.size(); ++i) {
    const auto& c = concepts[i];
    PageviewSeries s{c.title, out.window, {}};
    for (int day = 1; day <= 7; ++day) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "202001%02d", day);
      s.daily[buf] = static_cast<long long>(rng() % 500);
    }
    out.pageviews.put(std::move(s));

    MappingEntry e{c.title, std::nullopt};
    if (i % 17 != 3) e.qid = "Q" + std::to_string(1000 + i);
    if (e.qid) out.wd.insert(*e.qid, random_vector(rng, kGraphEmbeddingDim));
    out.mapping.insert(c.id, std::move(e));
    out.wp.insert(c.title, random_vector(rng, kTitleEmbeddingDim));
  }
  out.dataset.registry = ConceptRegistry(std::move(concepts));
  return out;
}

SyntheticFiles write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  SyntheticFiles f;
  f.data_dir = dir / "data";
  fs::create_directories(f.data_dir / "pairs");
  write_concept_pages(pages_path(f.data_dir), corpus.dataset.registry);
  for (const auto& [d, dp] : corpus.dataset.pairs) {
    write_pairs(pairs_path(f.data_dir, d, false), dp.train);
    write_pairs(pairs_path(f.data_dir, d, true), dp.test);
  }
  f.aoa = dir / "aoa.tsv";
  {
    std::ofstream out(f.aoa);
    out << "word\taoa\n";
    char buf[32];
    for (const auto& [w, v] : corpus.aoa_rows) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << w << '\t' << buf << '\n';
    }
  }
  f.pageviews = dir / "pageviews.json";
  corpus.pageviews.save(f.pageviews);
  f.mapping = dir / "mapping.tsv";
  write_concept_mapping(f.mapping, corpus.mapping);
  f.wd = dir / "wd.tsv";
  {
    // Full-file style keys, URI-wrapped.
    std::ofstream out(f.wd);
    char buf[32];
    for (const auto& [k, v] : corpus.wd.table()) {
      out << "<http://www.wikidata.org/entity/" << k << '>';
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", v[j]);
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
  f.wp = dir / "wp.txt";
  {
    std::ofstream out(f.wp);
    out << corpus.wp.size() << ' ' << corpus.wp.dim() << '\n';
    char buf[32];
    for (const auto& [k, v] : corpus.wp.table()) {
      out << "ENTITY/" << k;
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", v[j]);
        out << ' ' << buf;
      }
      out << '\n';
    }
  }
  return f;
}

std::filesystem::path temp_dir(const std::string& name) {
  static std::mt19937_64 rng(std::random_device{}());
  auto p = std::filesystem::temp_directory_path() / ("prelearn_" + name + "_" + std::to_string(rng() % 1000000000));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace prelearn::testing
