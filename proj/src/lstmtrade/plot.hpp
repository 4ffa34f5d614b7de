#pragma once

#include "lstmtrade/simulator.hpp"

#include <string>
#include <vector>

namespace lstmtrade {

struct PlotSeries {
    std::string label;
    EquityCurve curve;
};

/// Growth of one unit: each curve is divided by its first value. Output depends only on the inputs.
std::string render_equity_svg(const std::vector<PlotSeries>& series, const std::string& title = "Growth of 1 unit");

}  // namespace lstmtrade
