#include "punk/embed_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <unordered_map>

#include "punk/error.hpp"
#include "punk/rng.hpp"

namespace punk {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "embedding files are little-endian; add byte swapping for this target");

std::string_view to_string(ItemKind kind) {
  switch (kind) {
    case ItemKind::problem: return "problem";
    case ItemKind::sentence: return "sentence";
    case ItemKind::answer: return "answer";
    case ItemKind::concept_: return "concept";
  }
  return "problem";
}

ItemKind parse_item_kind(std::string_view name) {
  if (name == "problem") return ItemKind::problem;
  if (name == "sentence") return ItemKind::sentence;
  if (name == "answer") return ItemKind::answer;
  if (name == "concept") return ItemKind::concept_;
  throw ParseError("unknown item kind '" + std::string(name) + "'");
}

std::string ItemKey::describe() const {
  std::string s = std::string(to_string(kind)) + ":" + id;
  if (sub_index) s += "#" + std::to_string(*sub_index);
  return s;
}

EmbeddingTable::EmbeddingTable(int dim) : dim_(dim) {
  if (dim < 1) throw ValidationError("embedding dim must be >= 1");
}

void EmbeddingTable::add(const ItemKey& key, int n_tokens,
                         std::span<const float> values) {
  if (n_tokens < 1) {
    throw ValidationError("item " + key.describe() + " has no tokens");
  }
  if (values.size() != static_cast<std::size_t>(n_tokens) * dim_) {
    throw ValidationError("item " + key.describe() + " does not have dim " +
                          std::to_string(dim_));
  }
  Entry e{n_tokens, kEmbeddingHeaderBytes + data_.size() * sizeof(float)};
  if (!entries_.emplace(key, e).second) {
    throw ValidationError("duplicate item " + key.describe());
  }
  order_.push_back(key);
  data_.insert(data_.end(), values.begin(), values.end());
}

const EmbeddingTable::Entry& EmbeddingTable::entry(const ItemKey& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw NotFoundError("no embeddings for " + key.describe());
  }
  return it->second;
}

std::span<const float> EmbeddingTable::rows(const ItemKey& key) const {
  const Entry& e = entry(key);
  std::size_t first = (e.offset - kEmbeddingHeaderBytes) / sizeof(float);
  return std::span<const float>(data_).subspan(
      first, static_cast<std::size_t>(e.n_tokens) * dim_);
}

Matrix EmbeddingTable::matrix(const ItemKey& key) const {
  auto r = rows(key);
  Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      m(r.data(), static_cast<Eigen::Index>(r.size() / dim_), dim_);
  return m.cast<double>();
}

Vector EmbeddingTable::pooled(const ItemKey& key) const {
  auto r = rows(key);
  const std::size_t n = r.size() / dim_;
  Vector sum = Vector::Zero(dim_);
  for (std::size_t t = 0; t < n; ++t) {
    for (int d = 0; d < dim_; ++d) sum[d] += r[t * dim_ + d];
  }
  return sum / static_cast<double>(n);
}

TablePaths TablePaths::from_prefix(const std::filesystem::path& prefix) {
  return {std::filesystem::path(prefix.string() + ".index.json"),
          std::filesystem::path(prefix.string() + ".bin")};
}

EmbeddingTable make_table(const std::vector<EmbeddingItem>& items) {
  if (items.empty()) throw ValidationError("no items to store");
  const auto& first = items.front();
  if (first.n_tokens < 1 || first.values.size() % first.n_tokens != 0) {
    throw ValidationError("item " + first.key.describe() + " is malformed");
  }
  EmbeddingTable table(static_cast<int>(first.values.size() / first.n_tokens));
  for (const auto& item : items) {
    table.add(item.key, item.n_tokens, item.values);
  }
  return table;
}

void write_table(const std::vector<EmbeddingItem>& items, const TablePaths& paths) {
  write_table(make_table(items), paths);
}

void write_table(const EmbeddingTable& table, const TablePaths& paths) {
  std::ofstream data(paths.data, std::ios::binary);
  if (!data) throw Error("cannot write " + paths.data.string());
  data.write(kEmbeddingMagic.data(), kEmbeddingMagic.size());
  auto dim = static_cast<std::uint32_t>(table.dim());
  data.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  auto payload = table.data();
  data.write(reinterpret_cast<const char*>(payload.data()),
             static_cast<std::streamsize>(payload.size_bytes()));
  if (!data) throw Error("failed writing " + paths.data.string());

  json items = json::array();
  for (const auto& key : table.keys()) {
    const auto& e = table.entry(key);
    items.push_back({{"kind", to_string(key.kind)},
                     {"id", key.id},
                     {"sub_index", key.sub_index ? json(*key.sub_index) : json(nullptr)},
                     {"offset", e.offset},
                     {"n_tokens", e.n_tokens}});
  }
  std::ofstream index(paths.index);
  index << json{{"dim", table.dim()}, {"items", items}}.dump() << '\n';
  if (!index) throw Error("failed writing " + paths.index.string());
}

EmbeddingTable read_table(const TablePaths& paths) {
  std::ifstream index_in(paths.index);
  if (!index_in) throw Error("cannot open " + paths.index.string());
  json index;
  try {
    index = json::parse(index_in);
  } catch (const json::exception& e) {
    throw ParseError(paths.index.string() + ": " + e.what());
  }
  std::ifstream data_in(paths.data, std::ios::binary);
  if (!data_in) throw Error("cannot open " + paths.data.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(data_in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() < kEmbeddingHeaderBytes ||
      std::string_view(bytes.data(), kEmbeddingMagic.size()) != kEmbeddingMagic) {
    throw ParseError(paths.data.string() + ": bad magic");
  }
  std::uint32_t dim = 0;
  std::memcpy(&dim, bytes.data() + kEmbeddingMagic.size(), sizeof dim);
  if (index.at("dim").get<std::uint32_t>() != dim) {
    throw ParseError("index dim does not match data header");
  }
  EmbeddingTable table(static_cast<int>(dim));
  std::vector<float> row_buf;
  for (const auto& it : index.at("items")) {
    ItemKey key;
    key.kind = parse_item_kind(it.at("kind").get<std::string>());
    key.id = it.at("id").get<std::string>();
    if (!it.at("sub_index").is_null()) key.sub_index = it.at("sub_index").get<int>();
    auto offset = it.at("offset").get<std::size_t>();
    int n_tokens = it.at("n_tokens").get<int>();
    std::size_t n_bytes = static_cast<std::size_t>(n_tokens) * dim * sizeof(float);
    if (n_tokens < 1 || offset < kEmbeddingHeaderBytes ||
        (offset - kEmbeddingHeaderBytes) % sizeof(float) != 0 ||
        offset + n_bytes > bytes.size()) {
      throw ParseError("item " + key.describe() + " is out of bounds");
    }
    row_buf.resize(static_cast<std::size_t>(n_tokens) * dim);
    std::memcpy(row_buf.data(), bytes.data() + offset, n_bytes);
    table.add(key, n_tokens, row_buf);
  }
  return table;
}

std::vector<float> fake_token_vector(std::string_view token, std::uint64_t seed,
                                     int dim) {
  Rng rng(hash64(to_lower_ascii(token), seed));
  std::vector<float> v(static_cast<std::size_t>(dim));
  for (auto& x : v) x = static_cast<float>(2.0 * rng.uniform() - 1.0);
  return v;
}

std::string concept_text(const Concept& concept_entry) {
  std::string text;
  for (const auto& d : concept_entry.definitions) {
    if (!text.empty()) text += ' ';
    text += d;
  }
  return trim(text).empty() ? concept_entry.name : text;
}

EmbeddingTable fake_embeddings(const Corpus& corpus,
                               const std::vector<Concept>& concepts,
                               std::uint64_t seed, int dim) {
  EmbeddingTable table(dim);
  std::unordered_map<std::string, std::vector<float>> cache;
  std::vector<float> buf;
  auto add = [&](const ItemKey& key, std::string_view text) {
    auto tokens = tokenize(text);
    if (tokens.empty()) tokens.emplace_back(kCodeToken);
    buf.clear();
    for (const auto& tok : tokens) {
      std::string lower = to_lower_ascii(tok);
      auto it = cache.find(lower);
      if (it == cache.end()) {
        it = cache.emplace(lower, fake_token_vector(lower, seed, dim)).first;
      }
      buf.insert(buf.end(), it->second.begin(), it->second.end());
    }
    table.add(key, static_cast<int>(tokens.size()), buf);
  };
  for (const auto& p : corpus.problems()) {
    add(ItemKey::problem(p.id), p.text);
    for (const auto& s : p.sentences) add(ItemKey::sentence(p.id, s.index), s.text);
  }
  for (const auto& a : corpus.answers()) add(ItemKey::answer(a.id), a.text);
  for (const auto& c : concepts) add(ItemKey::concept_item(c.id), concept_text(c));
  return table;
}

}  // namespace punk
