#include "biphoton/io/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "biphoton/core/errors.hpp"

namespace biphoton::io {

double shared_max(const std::vector<const core::CorrelationMap*>& maps) {
    double m = 0.0;
    for (const core::CorrelationMap* map : maps)
        for (double v : map->values) m = std::max(m, v);
    return m;
}

void render_heatmap_pgm(const core::CorrelationMap& map, const std::filesystem::path& path,
                        double max_value) {
    map.validate();
    for (double v : map.values)
        if (!std::isfinite(v)) throw core::ValidationError("render_heatmap: non-finite map value");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw core::IoError("render_heatmap: cannot create " + path.string());
    out << "P5\n" << map.size << " " << map.size << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(map.size));
    for (int y = 0; y < map.size; ++y) {
        for (int x = 0; x < map.size; ++x) {
            const double v = map.values[static_cast<std::size_t>(y) * map.size + x];
            double g = 0.0;
            if (max_value > 0.0) g = std::clamp(v, 0.0, max_value) / max_value * 255.0;
            row[static_cast<std::size_t>(x)] = static_cast<unsigned char>(std::lround(g));
        }
        out.write(reinterpret_cast<const char*>(row.data()), map.size);
    }
    if (!out) throw core::IoError("render_heatmap: write failed for " + path.string());
}

void render_heatmap_pgm(const core::CorrelationMap& map, const std::filesystem::path& path) {
    render_heatmap_pgm(map, path, shared_max({&map}));
}

} // namespace biphoton::io
