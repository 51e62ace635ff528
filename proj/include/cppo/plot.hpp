#pragma once

#include <string>
#include <vector>

namespace cppo {

struct MetricsTable {
    std::vector<long long> env_steps;
    std::vector<double> ep_return_mean;
    std::vector<double> ep_cost_mean;
};

// Strict parse of the trainer's metrics schema; throws std::invalid_argument
// on a mismatched header or malformed row.
MetricsTable parse_metrics_csv(const std::string& text);

// Per-seed mean curve with a std band; the cost plot carries a dashed line at
// the cost limit. Output is deterministic for identical inputs.
struct PlotFiles {
    std::string return_svg;
    std::string cost_svg;
};
PlotFiles render_learning_curves(const std::vector<MetricsTable>& runs, double cost_limit);

}  // namespace cppo
