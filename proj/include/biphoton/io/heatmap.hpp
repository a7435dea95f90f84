#pragma once

#include <filesystem>
#include <vector>

#include "biphoton/core/types.hpp"

namespace biphoton::io {

/// Largest cell value across a set of maps (for shared-brightness rendering
/// of main/control pairs). Non-positive maxima collapse to 0.
double shared_max(const std::vector<const core::CorrelationMap*>& maps);

/// Render an 8-bit grayscale binary PGM with the linear mapping
/// [0, max_value] -> [0, 255]; values below 0 clip to black. max_value <= 0
/// renders all black.
void render_heatmap_pgm(const core::CorrelationMap& map, const std::filesystem::path& path,
                        double max_value);

/// Per-map normalization convenience: max_value = the map's own maximum.
void render_heatmap_pgm(const core::CorrelationMap& map, const std::filesystem::path& path);

} // namespace biphoton::io
