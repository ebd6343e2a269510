#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pilid/pilib.hpp"
#include "pilid/trainer.hpp"

namespace pilid {

inline constexpr int kFormatVersion = 1;

using AnyModel = std::variant<PilidModel, PilibModel>;

// Text format, one record per line, reals as hexadecimal floats, closed by
// a crc32 line over everything before it.
std::string serialize(const AnyModel& model);
AnyModel deserialize(const std::string& text);

void save_model(const AnyModel& model, const std::filesystem::path& path);
AnyModel load_model(const std::filesystem::path& path);

const std::vector<FeatureSpec>& model_specs(const AnyModel& model);
const PiecewiseLinearParams& model_linear(const AnyModel& model);
const CharacteristicPoints& model_points(const AnyModel& model);
Task model_task(const AnyModel& model);
std::vector<double> predict(const AnyModel& model, const Matrix& rows);

}  // namespace pilid
