#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pilid/persist.hpp"
#include "pilid/pilib.hpp"

namespace pilid {

// `feature,point_index,x,u` for every characteristic point of every feature.
std::string shapes_csv(const ShapeSet& shapes, const std::vector<FeatureSpec>& specs);
// Standalone SVG line chart of one shape with axes, ticks and the feature name.
std::string shape_svg(const FeatureShape& shape, const std::string& name);

struct ShapeExport {
  std::filesystem::path csv;
  std::vector<std::filesystem::path> svgs;
};
// Writes shapes.csv (and shape_<j>.svg per feature when svg is set) into
// out_dir. kMeanCentered needs the encoded reference rows.
ShapeExport export_shapes(const AnyModel& model, const std::filesystem::path& out_dir, bool svg = true,
                          ShapeAnchor anchor = ShapeAnchor::kFirstPoint, const Matrix* reference_encoded = nullptr);

// `x_a,x_b,value` over the grid, with the feature names in a leading comment.
std::string interaction_csv(const InteractionSurface& surface, const std::vector<FeatureSpec>& specs);

// `epoch,loss`; with a second phase, `phase,epoch,loss`.
void write_loss_trace(const std::filesystem::path& path, std::span<const double> trace,
                      std::span<const double> phase2 = {});
// Per-block estimated order and active feature names.
void write_block_diagnostics(const std::filesystem::path& path, const PilibResult& result);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pilid
