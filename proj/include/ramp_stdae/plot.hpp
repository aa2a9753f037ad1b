#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ramp_stdae {

/// Static SVG line chart of a ground-truth and a predicted series.
void write_forecast_svg(const std::filesystem::path& path, const std::string& title, const std::vector<double>& truth,
                        const std::vector<double>& pred);

}  // namespace ramp_stdae
