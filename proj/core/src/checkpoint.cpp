#include "punk/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "punk/embed_store.hpp"

namespace punk {

using nlohmann::json;

const Matrix& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return m;
  }
  throw NotFoundError("checkpoint has no tensor " + name);
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  json header = ck.header;
  json shapes = json::array();
  std::size_t offset = 0;
  for (const auto& [name, m] : ck.tensors) {
    shapes.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    offset += static_cast<std::size_t>(m.size()) * sizeof(float);
  }
  header["tensors"] = shapes;
  header["format"] = "punk-checkpoint/1";

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << header.dump() << '\n';
  out.write(kEmbeddingMagic.data(), kEmbeddingMagic.size());
  std::uint32_t width = 1;
  out.write(reinterpret_cast<const char*>(&width), sizeof width);
  std::vector<float> buf;
  for (const auto& [name, m] : ck.tensors) {
    buf.resize(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i) buf[i] = static_cast<float>(m.data()[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::string line;
  std::getline(in, line);
  Checkpoint ck;
  try {
    ck.header = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError("checkpoint header: " + std::string(e.what()));
  }
  char magic[8];
  std::uint32_t width = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&width), sizeof width);
  if (!in || std::string_view(magic, 8) != kEmbeddingMagic || width != 1) {
    throw ParseError("checkpoint payload header is invalid");
  }
  std::vector<char> payload((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
  for (const auto& t : ck.header.at("tensors")) {
    auto rows = t.at("rows").get<Eigen::Index>();
    auto cols = t.at("cols").get<Eigen::Index>();
    auto offset = t.at("offset").get<std::size_t>();
    std::size_t n = static_cast<std::size_t>(rows * cols);
    if (offset + n * sizeof(float) > payload.size()) {
      throw ParseError("checkpoint tensor out of bounds");
    }
    std::vector<float> buf(n);
    std::memcpy(buf.data(), payload.data() + offset, n * sizeof(float));
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < n; ++i) m.data()[i] = buf[i];
    ck.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
  }
  ck.header.erase("tensors");
  ck.header.erase("format");
  return ck;
}

}  // namespace punk
