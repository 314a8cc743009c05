#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "punk/error.hpp"
#include "punk/tensor.hpp"

namespace punk {

// Serialized model: a one-line JSON header (kind, config, seed, tensor
// shapes) followed by the embedding payload layout: "PUNKEMB1", u32 row
// width (always 1 here), then every tensor as little-endian f32 in header
// order. Values are stored in single precision.
struct Checkpoint {
  nlohmann::json header;
  std::vector<std::pair<std::string, Matrix>> tensors;

  template <class Model>
  static Checkpoint capture(nlohmann::json header, Model& model) {
    Checkpoint ck;
    ck.header = std::move(header);
    model.visit([&](const std::string& name, Param& p) {
      ck.tensors.emplace_back(name, p.value);
    });
    return ck;
  }

  // Copies tensors into the model by name; shapes must match exactly.
  template <class Model>
  void restore(Model& model) const {
    std::size_t used = 0;
    model.visit([&](const std::string& name, Param& p) {
      const Matrix& m = tensor(name);
      if (m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
        throw ValidationError("checkpoint tensor " + name + " has shape " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
      }
      p.value = m;
      p.grad = Matrix::Zero(m.rows(), m.cols());
      ++used;
    });
    if (used != tensors.size()) {
      throw ValidationError("checkpoint has tensors the model does not use");
    }
  }

  const Matrix& tensor(const std::string& name) const;
  std::string kind() const { return header.value("kind", ""); }
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rounds every parameter through f32 so an in-memory model behaves exactly
// like the same model reloaded from disk.
template <class Model>
void round_to_storage(Model& model) {
  model.visit([](const std::string&, Param& p) {
    p.value = p.value.template cast<float>().template cast<double>();
  });
}

}  // namespace punk

namespace punk {

// Per-epoch (or per-episode) training losses.
struct TrainLog {
  std::vector<double> losses;

  nlohmann::json to_json() const { return {{"losses", losses}}; }
};

}  // namespace punk
