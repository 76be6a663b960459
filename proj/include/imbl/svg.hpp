#pragma once

#include <string>
#include <vector>

#include "imbl/matrix.hpp"

namespace imbl {
namespace svg {

/// 2-D class-colored scatter. Real points are circles, synthetic points are
/// drawn as crosses so the two sample kinds are distinguishable; one circle
/// element per real row.
std::string scatter(const Matrix& xy, const std::vector<int>& cls,
                    const std::vector<bool>& synthetic, const std::string& title);

struct LineSeries {
    std::string label;
    Vector y; // one value per x position
};

/// Metric-vs-x line chart with one polyline per series and one labelled
/// tick per x value (<g class="xtick">).
std::string lines(const Vector& x, const std::vector<LineSeries>& series,
                  const std::string& x_label, const std::string& y_label,
                  const std::string& title);

} // namespace svg
} // namespace imbl
