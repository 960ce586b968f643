#include "prelearn/features.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "prelearn/textprep.hpp"

namespace prelearn {

FeatureConfig FeatureConfig::complex(Scenario scenario, bool with_wd) {
  FeatureConfig c;
  c.include_complexity = true;
  c.include_page_view = true;
  c.include_domain_onehot = scenario == Scenario::InDomain;
  c.include_wd_embedding = with_wd;
  return c;
}

FeatureConfig FeatureConfig::for_scenario(Scenario scenario) const {
  FeatureConfig c = *this;
  if (scenario == Scenario::CrossDomain) c.include_domain_onehot = false;
  return c;
}

std::vector<std::string> complexity_slot_names(bool include_page_view) {
  std::vector<std::string> names = {"aoa_gm",     "aoa_matches", "related_aoa", "related_count",
                                    "word_count", "formula_count"};
  if (include_page_view) names.emplace_back("page_view");
  return names;
}

std::vector<std::string> FeatureConfig::layout() const {
  std::vector<std::string> out;
  if (include_complexity) {
    for (const char* side : {"a_", "b_"}) {
      for (const auto& n : complexity_slot_names(include_page_view)) out.push_back(side + n);
    }
    out.emplace_back("a_in_b");
    out.emplace_back("b_in_a");
  }
  if (include_domain_onehot) {
    for (Domain d : kAllDomains) out.push_back("domain_" + std::string(domain_slug(d)));
  }
  auto add_block = [&out](const char* prefix, Eigen::Index dim) {
    for (const char* side : {"a_", "b_"}) {
      for (Eigen::Index j = 0; j < dim; ++j) out.push_back(side + std::string(prefix) + std::to_string(j));
    }
  };
  if (include_wp_embedding) add_block("wp_", kTitleEmbeddingDim);
  if (include_wd_embedding) add_block("wd_", kGraphEmbeddingDim);
  return out;
}

std::size_t FeatureConfig::size() const {
  std::size_t n = 0;
  if (include_complexity) n += 2 * (include_page_view ? 7 : 6) + 2;
  if (include_domain_onehot) n += kAllDomains.size();
  if (include_wp_embedding) n += 2 * kTitleEmbeddingDim;
  if (include_wd_embedding) n += 2 * kGraphEmbeddingDim;
  return n;
}

std::string FeatureConfig::layout_id() const {
  auto flag = [](bool b) { return b ? '1' : '0'; };
  std::string id = "cx";
  id += flag(include_complexity);
  id += "-pv";
  id += flag(include_complexity && include_page_view);
  id += "-oh";
  id += flag(include_domain_onehot);
  id += "-wp";
  id += flag(include_wp_embedding);
  id += "-wd";
  id += flag(include_wd_embedding);
  return id;
}

namespace {

bool appears_in(const Concept& x, const Concept& y) {
  return text::contains_substring(x.norm_title, y.norm_title) ||
         text::contains_substring(x.norm_title, y.norm_description);
}

}  // namespace

Eigen::VectorXd pair_feature_vector(const LabeledPair& pair, const ConceptRegistry& registry,
                                    const FeatureConfig& config) {
  const Concept& a = registry.at(pair.a);
  const Concept& b = registry.at(pair.b);
  const Eigen::Index n = config.include_domain_onehot ? 6 : 2;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v[0] = appears_in(a, b) ? 1.0 : 0.0;
  v[1] = appears_in(b, a) ? 1.0 : 0.0;
  if (config.include_domain_onehot) v[2 + static_cast<Eigen::Index>(domain_index(pair.domain))] = 1.0;
  return v;
}

FeatureBuilder::FeatureBuilder(FeatureConfig config, FeatureDeps deps)
    : config_(config), deps_(deps) {
  if (!deps_.registry) throw std::invalid_argument("FeatureBuilder: registry is required");
  if (config_.include_complexity && !deps_.lexicon) {
    throw std::invalid_argument("FeatureBuilder: complexity features need an AoA lexicon");
  }
  if (config_.include_complexity && config_.include_page_view && !deps_.pageviews) {
    throw std::invalid_argument("FeatureBuilder: page_view feature needs a pageview source");
  }
  if (config_.include_wd_embedding && (!deps_.wd_store || !deps_.mapping)) {
    throw std::invalid_argument("FeatureBuilder: Wikidata embeddings need a mapping and a store");
  }
  if (config_.include_wp_embedding && !deps_.wp_store) {
    throw std::invalid_argument("FeatureBuilder: Wikipedia embeddings need a store");
  }
}

FeatureBuilder::Profile& FeatureBuilder::profile(const Concept& c) {
  auto it = profiles_.find(c.id);
  if (it != profiles_.end()) return it->second;
  Profile p;
  const auto tokens = text::tokenize(c.norm_description);
  p.aoa = concept_aoa(tokens, *deps_.lexicon);
  p.words = tokens.size();
  p.formulas = text::count_formula_tokens(tokens);
  return profiles_.emplace(c.id, std::move(p)).first->second;
}

ConceptAoa FeatureBuilder::concept_aoa_of(const Concept& c) { return profile(c).aoa; }

RelatedStats FeatureBuilder::related_concept_stats(const Concept& c) {
  Profile& self = profile(c);
  if (self.related) return *self.related;
  RelatedStats stats;
  double sum = 0.0;
  for (const Concept& other : deps_.registry->concepts()) {
    if (other.id == c.id) continue;
    if (!text::contains_substring(other.norm_title, c.norm_description)) continue;
    sum += profile(other).aoa.aoa;
    ++stats.count;
  }
  stats.aoa_mean = stats.count ? sum / static_cast<double>(stats.count) : deps_.lexicon->stats().mean;
  self.related = stats;
  return stats;
}

Eigen::VectorXd FeatureBuilder::complexity_vector(const Concept& c) {
  const RelatedStats rel = related_concept_stats(c);
  const Profile& p = profile(c);
  Eigen::VectorXd v(config_.include_page_view ? 7 : 6);
  v[0] = p.aoa.aoa;
  v[1] = static_cast<double>(p.aoa.matches);
  v[2] = rel.aoa_mean;
  v[3] = static_cast<double>(rel.count);
  v[4] = static_cast<double>(p.words);
  v[5] = static_cast<double>(p.formulas);
  if (config_.include_page_view) v[6] = deps_.pageviews->average(c.title);
  return v;
}

Eigen::VectorXd FeatureBuilder::wd_vector(const Concept& c) const {
  const auto qid = deps_.mapping->qid(c.id);
  if (!qid) return Eigen::VectorXd::Zero(deps_.wd_store->dim());
  return deps_.wd_store->lookup(*qid);
}

Eigen::VectorXd FeatureBuilder::assemble(const LabeledPair& pair) {
  const Concept& a = deps_.registry->at(pair.a);
  const Concept& b = deps_.registry->at(pair.b);
  Eigen::VectorXd out(static_cast<Eigen::Index>(config_.size()));
  Eigen::Index pos = 0;
  auto put = [&out, &pos](const Eigen::VectorXd& block) {
    out.segment(pos, block.size()) = block;
    pos += block.size();
  };
  if (config_.include_complexity) {
    put(complexity_vector(a));
    put(complexity_vector(b));
    FeatureConfig pair_cfg = config_;
    pair_cfg.include_domain_onehot = false;
    put(pair_feature_vector(pair, *deps_.registry, pair_cfg));
  }
  if (config_.include_domain_onehot) {
    Eigen::VectorXd onehot = Eigen::VectorXd::Zero(4);
    onehot[static_cast<Eigen::Index>(domain_index(pair.domain))] = 1.0;
    put(onehot);
  }
  if (config_.include_wp_embedding) {
    put(deps_.wp_store->lookup_title(a.title));
    put(deps_.wp_store->lookup_title(b.title));
  }
  if (config_.include_wd_embedding) {
    put(wd_vector(a));
    put(wd_vector(b));
  }
  if (pos != out.size()) throw std::logic_error("feature layout length mismatch");
  return out;
}

Eigen::MatrixXd FeatureBuilder::assemble_matrix(std::span<const LabeledPair> pairs) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(config_.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = assemble(pairs[i]).transpose();
  }
  if (!m.allFinite()) throw std::runtime_error("feature matrix contains NaN or infinite values");
  return m;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureConfig& config,
                       std::span<const LabeledPair> pairs, const Eigen::MatrixXd& features) {
  if (features.rows() != static_cast<Eigen::Index>(pairs.size()) ||
      features.cols() != static_cast<Eigen::Index>(config.size())) {
    throw std::invalid_argument("write_feature_csv: matrix shape does not match pairs/layout");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "concept_a,concept_b,domain,label";
  for (const auto& name : config.layout()) out << ',' << name;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out << pairs[i].a << ',' << pairs[i].b << ',' << domain_slug(pairs[i].domain) << ',' << pairs[i].label;
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", features(static_cast<Eigen::Index>(i), j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace prelearn
