#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>

#include <Eigen/Core>

namespace prelearn {

inline constexpr Eigen::Index kTitleEmbeddingDim = 100;
inline constexpr Eigen::Index kGraphEmbeddingDim = 200;

/// Immutable key -> vector table. Lookups of absent keys return a zero
/// vector and bump the OOV counter.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(Eigen::Index dim = 0) : dim_(dim) {}
  EmbeddingStore(const EmbeddingStore& other);
  EmbeddingStore& operator=(const EmbeddingStore& other);
  EmbeddingStore(EmbeddingStore&&) noexcept;
  EmbeddingStore& operator=(EmbeddingStore&&) noexcept;

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }

  /// Throws on dimension mismatch or duplicate key.
  void insert(const std::string& key, Eigen::VectorXd v);

  const Eigen::VectorXd* find(const std::string& key) const;
  /// Exact key, then the space/underscore variant, then a case-folded match.
  const Eigen::VectorXd* find_title(const std::string& title) const;

  Eigen::VectorXd lookup(const std::string& key) const;
  Eigen::VectorXd lookup_title(const std::string& title) const;

  std::size_t oov_count() const { return oov_.load(); }
  std::size_t lookup_count() const { return lookups_.load(); }
  const std::map<std::string, Eigen::VectorXd>& table() const { return table_; }

 private:
  Eigen::Index dim_;
  std::map<std::string, Eigen::VectorXd> table_;
  std::unordered_map<std::string, std::string> folded_;  // folded form -> smallest original key
  mutable std::atomic<std::size_t> oov_{0};
  mutable std::atomic<std::size_t> lookups_{0};
};

/// Lowercase with underscores as spaces; the form used for title matching.
std::string fold_title(const std::string& title);

/// "<http://www.wikidata.org/entity/Q42>" -> "Q42"; other keys pass through.
std::string normalize_entity_key(std::string_view key);

/// Word2vec-style text file: header `<count> <dim>`, then `<key> v1 .. vdim`.
/// An "ENTITY/" key prefix is dropped. Only rows whose folded key is in the
/// folded filter are kept; no filter keeps everything.
EmbeddingStore load_title_embeddings(const std::filesystem::path& path,
                                     const std::optional<std::set<std::string>>& filter,
                                     Eigen::Index expected_dim = kTitleEmbeddingDim);

/// TSV `<key>\tv1\t..\tv_dim`; keys normalized to bare qids and filtered.
EmbeddingStore load_graph_embeddings(const std::filesystem::path& path,
                                     const std::optional<std::set<std::string>>& qid_filter,
                                     Eigen::Index expected_dim = kGraphEmbeddingDim);

/// Writes `<key>\tv1..` rows readable by load_graph_embeddings (with the
/// store's dim); values printed with round-trip precision.
void write_embeddings_tsv(const std::filesystem::path& path, const EmbeddingStore& store);

/// [lookup(a); lookup(b)], OOV rows zero.
Eigen::VectorXd pair_embedding(const EmbeddingStore& store, const std::string& key_a,
                               const std::string& key_b);

}  // namespace prelearn
