#include "prelearn/embeddings.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "prelearn/textprep.hpp"
#include "prelearn/types.hpp"

namespace prelearn {

EmbeddingStore::EmbeddingStore(const EmbeddingStore& other)
    : dim_(other.dim_), table_(other.table_), folded_(other.folded_), oov_(other.oov_.load()),
      lookups_(other.lookups_.load()) {}

EmbeddingStore& EmbeddingStore::operator=(const EmbeddingStore& other) {
  if (this != &other) {
    dim_ = other.dim_;
    table_ = other.table_;
    folded_ = other.folded_;
    oov_ = other.oov_.load();
    lookups_ = other.lookups_.load();
  }
  return *this;
}

EmbeddingStore::EmbeddingStore(EmbeddingStore&& other) noexcept
    : dim_(other.dim_), table_(std::move(other.table_)), folded_(std::move(other.folded_)),
      oov_(other.oov_.load()), lookups_(other.lookups_.load()) {}

EmbeddingStore& EmbeddingStore::operator=(EmbeddingStore&& other) noexcept {
  dim_ = other.dim_;
  table_ = std::move(other.table_);
  folded_ = std::move(other.folded_);
  oov_ = other.oov_.load();
  lookups_ = other.lookups_.load();
  return *this;
}

std::string fold_title(const std::string& title) {
  std::string s = text::utf8_lower(title);
  for (char& c : s) {
    if (c == '_') c = ' ';
  }
  return s;
}

void EmbeddingStore::insert(const std::string& key, Eigen::VectorXd v) {
  if (v.size() != dim_) {
    throw std::invalid_argument("embedding for '" + key + "' has dimension " + std::to_string(v.size()) +
                                ", expected " + std::to_string(dim_));
  }
  if (!table_.emplace(key, std::move(v)).second) {
    throw std::invalid_argument("duplicate embedding key '" + key + "'");
  }
  const std::string folded = fold_title(key);
  auto [it, fresh] = folded_.emplace(folded, key);
  if (!fresh && key < it->second) it->second = key;
}

const Eigen::VectorXd* EmbeddingStore::find(const std::string& key) const {
  const auto it = table_.find(key);
  return it == table_.end() ? nullptr : &it->second;
}

const Eigen::VectorXd* EmbeddingStore::find_title(const std::string& title) const {
  if (const auto* v = find(title)) return v;
  std::string variant = title;
  if (variant.find(' ') != std::string::npos) {
    for (char& c : variant) if (c == ' ') c = '_';
  } else {
    for (char& c : variant) if (c == '_') c = ' ';
  }
  if (const auto* v = find(variant)) return v;
  const auto it = folded_.find(fold_title(title));
  return it == folded_.end() ? nullptr : find(it->second);
}

Eigen::VectorXd EmbeddingStore::lookup(const std::string& key) const {
  ++lookups_;
  if (const auto* v = find(key)) return *v;
  ++oov_;
  return Eigen::VectorXd::Zero(dim_);
}

Eigen::VectorXd EmbeddingStore::lookup_title(const std::string& title) const {
  ++lookups_;
  if (const auto* v = find_title(title)) return *v;
  ++oov_;
  return Eigen::VectorXd::Zero(dim_);
}

std::string normalize_entity_key(std::string_view key) {
  if (key.size() >= 2 && key.front() == '<' && key.back() == '>') {
    key = key.substr(1, key.size() - 2);
  }
  const auto slash = key.rfind('/');
  if (slash != std::string_view::npos) {
    const auto tail = key.substr(slash + 1);
    if (tail.size() >= 2 && tail[0] == 'Q') return std::string(tail);
  }
  return std::string(key);
}

namespace {

bool parse_value(std::string_view tok, double& out) {
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
}

}  // namespace

EmbeddingStore load_title_embeddings(const std::filesystem::path& path,
                                     const std::optional<std::set<std::string>>& filter,
                                     Eigen::Index expected_dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string source = path.string();

  std::set<std::string> folded_filter;
  if (filter) {
    for (const auto& k : *filter) folded_filter.insert(fold_title(k));
  }

  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    const auto head = split(line, ' ');
    long long count = 0;
    long long dim = 0;
    if (head.size() != 2 || std::from_chars(head[0].data(), head[0].data() + head[0].size(), count).ec != std::errc() ||
        std::from_chars(head[1].data(), head[1].data() + head[1].size(), dim).ec != std::errc()) {
      throw ParseError(source, 1, "header must be '<count> <dim>'");
    }
    if (dim != expected_dim) {
      throw ParseError(source, 1, "dimension " + std::to_string(dim) + " != expected " +
                                      std::to_string(expected_dim));
    }
  }

  EmbeddingStore store(expected_dim);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    while (!line.empty() && line.back() == ' ') line.pop_back();
    const auto toks = split(line, ' ');
    if (toks.size() < static_cast<std::size_t>(expected_dim) + 1) {
      throw ParseError(source, lineno, "expected key and " + std::to_string(expected_dim) + " values");
    }
    const std::size_t key_end = toks.size() - static_cast<std::size_t>(expected_dim);
    std::string key(toks[0]);
    for (std::size_t i = 1; i < key_end; ++i) key += " " + std::string(toks[i]);
    if (key.starts_with("ENTITY/")) key.erase(0, 7);
    if (filter && !folded_filter.count(fold_title(key))) continue;

    Eigen::VectorXd v(expected_dim);
    for (Eigen::Index j = 0; j < expected_dim; ++j) {
      if (!parse_value(toks[key_end + static_cast<std::size_t>(j)], v[j])) {
        throw ParseError(source, lineno, "non-numeric value in column " + std::to_string(j + 1));
      }
    }
    store.insert(key, std::move(v));
  }
  return store;
}

EmbeddingStore load_graph_embeddings(const std::filesystem::path& path,
                                     const std::optional<std::set<std::string>>& qid_filter,
                                     Eigen::Index expected_dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string source = path.string();
  EmbeddingStore store(expected_dim);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (lineno == 1 && cols.size() == 2) continue;  // optional "<count>\t<dim>" header
    if (cols.size() != static_cast<std::size_t>(expected_dim) + 1) {
      throw ParseError(source, lineno, "row has " + std::to_string(cols.size()) + " fields, expected " +
                                           std::to_string(expected_dim + 1));
    }
    const std::string key = normalize_entity_key(cols[0]);
    if (qid_filter && !qid_filter->count(key)) continue;
    Eigen::VectorXd v(expected_dim);
    for (Eigen::Index j = 0; j < expected_dim; ++j) {
      if (!parse_value(cols[static_cast<std::size_t>(j) + 1], v[j])) {
        throw ParseError(source, lineno, "non-numeric value in column " + std::to_string(j + 2));
      }
    }
    store.insert(key, std::move(v));
  }
  return store;
}

void write_embeddings_tsv(const std::filesystem::path& path, const EmbeddingStore& store) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char buf[32];
  for (const auto& [key, v] : store.table()) {
    out << key;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", v[j]);
      out << '\t' << buf;
    }
    out << '\n';
  }
}

Eigen::VectorXd pair_embedding(const EmbeddingStore& store, const std::string& key_a,
                               const std::string& key_b) {
  Eigen::VectorXd out(2 * store.dim());
  out << store.lookup(key_a), store.lookup(key_b);
  return out;
}

}  // namespace prelearn
