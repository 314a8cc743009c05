#include "punk/config_io.hpp"

namespace punk {

using nlohmann::json;

json to_json(const EncoderConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"widths", c.widths},
          {"kernels_per_width", c.kernels_per_width},
          {"hidden", c.hidden},
          {"layers", c.layers},
          {"dropout", c.dropout}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  EncoderConfig c;
  c.kind = parse_encoder_kind(j.value("kind", "bow"));
  c.widths = j.value("widths", c.widths);
  c.kernels_per_width = j.value("kernels_per_width", c.kernels_per_width);
  c.hidden = j.value("hidden", c.hidden);
  c.layers = j.value("layers", c.layers);
  c.dropout = j.value("dropout", c.dropout);
  return c;
}

json to_json(const AdamConfig& c) {
  return {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}};
}

AdamConfig adam_config_from_json(const json& j) {
  AdamConfig c;
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  return c;
}

}  // namespace punk
