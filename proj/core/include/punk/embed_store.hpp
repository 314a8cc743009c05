#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "punk/corpus.hpp"
#include "punk/tensor.hpp"

namespace punk {

// `concept_` because `concept` is a keyword.
enum class ItemKind { problem, sentence, answer, concept_ };

std::string_view to_string(ItemKind kind);
ItemKind parse_item_kind(std::string_view name);

struct ItemKey {
  ItemKind kind = ItemKind::problem;
  std::string id;
  std::optional<int> sub_index;  // sentence index

  auto operator<=>(const ItemKey&) const = default;
  std::string describe() const;

  static ItemKey problem(std::string id) { return {ItemKind::problem, std::move(id), {}}; }
  static ItemKey sentence(std::string id, int j) { return {ItemKind::sentence, std::move(id), j}; }
  static ItemKey answer(std::string id) { return {ItemKind::answer, std::move(id), {}}; }
  static ItemKey concept_item(std::string id) { return {ItemKind::concept_, std::move(id), {}}; }
};

// One item to store: `values` holds n_tokens rows of equal width, row-major.
struct EmbeddingItem {
  ItemKey key;
  int n_tokens = 0;
  std::vector<float> values;
};

inline constexpr std::string_view kEmbeddingMagic = "PUNKEMB1";
inline constexpr std::size_t kEmbeddingHeaderBytes = 12;  // magic + u32 dim

// Token-level embeddings keyed by item. Immutable once built; all readers
// share the single float buffer.
class EmbeddingTable {
 public:
  struct Entry {
    int n_tokens = 0;
    std::size_t offset = 0;  // byte offset in the data file
  };

  explicit EmbeddingTable(int dim);

  // Appends an item. Throws on duplicate keys, empty items or a row width
  // different from dim().
  void add(const ItemKey& key, int n_tokens, std::span<const float> values);

  int dim() const { return dim_; }
  std::size_t size() const { return order_.size(); }
  bool contains(const ItemKey& key) const { return entries_.count(key) > 0; }
  const Entry& entry(const ItemKey& key) const;
  const std::vector<ItemKey>& keys() const { return order_; }

  std::span<const float> rows(const ItemKey& key) const;
  Matrix matrix(const ItemKey& key) const;  // n_tokens x dim
  // Arithmetic mean over the item's token rows.
  Vector pooled(const ItemKey& key) const;

  std::span<const float> data() const { return data_; }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.dim_ == b.dim_ && a.order_ == b.order_ && a.data_ == b.data_;
  }

 private:
  int dim_;
  std::map<ItemKey, Entry> entries_;
  std::vector<ItemKey> order_;
  std::vector<float> data_;
};

struct TablePaths {
  std::filesystem::path index;
  std::filesystem::path data;

  // <prefix>.index.json and <prefix>.bin
  static TablePaths from_prefix(const std::filesystem::path& prefix);
};

// Builds a table from items; throws on dimension mismatch or duplicate keys.
EmbeddingTable make_table(const std::vector<EmbeddingItem>& items);

void write_table(const EmbeddingTable& table, const TablePaths& paths);
void write_table(const std::vector<EmbeddingItem>& items, const TablePaths& paths);
// Validates magic, header dim, and that every offset lies within the file.
EmbeddingTable read_table(const TablePaths& paths);

// Deterministic stand-in for a pretrained encoder: each token maps to `dim`
// uniform values in [-1, 1] drawn from a PRNG seeded by
// hash64(lowercased token, seed). Covers every problem, sentence, answer and
// concept (concatenated definitions, or the name when there are none).
EmbeddingTable fake_embeddings(const Corpus& corpus,
                               const std::vector<Concept>& concepts,
                               std::uint64_t seed, int dim);

// The row a fake_embeddings table assigns to one token.
std::vector<float> fake_token_vector(std::string_view token, std::uint64_t seed,
                                     int dim);

// Text embedded for a concept node.
std::string concept_text(const Concept& concept_entry);

}  // namespace punk
