#pragma once

#include <nlohmann/json.hpp>

#include "punk/adam.hpp"
#include "punk/layers.hpp"

namespace punk {

nlohmann::json to_json(const EncoderConfig& c);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AdamConfig& c);
AdamConfig adam_config_from_json(const nlohmann::json& j);

}  // namespace punk
