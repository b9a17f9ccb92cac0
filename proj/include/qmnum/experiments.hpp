#pragma once

#include <string>
#include <vector>

#include "qmnum/config.hpp"

namespace qmnum::experiments {

std::vector<std::string> names();

// Default parameter set; throws invalid_input for an unknown experiment.
nlohmann::json defaults(const std::string& name);

// Resolves params against the defaults (unknown keys rejected) without
// running anything.
nlohmann::json resolve_params(const config::ExperimentConfig& cfg);

// Runs the experiment, writing manifest.json plus results under
// cfg.out_dir/<experiment>/. Returns the summary json. Sweep experiments
// checkpoint per point and resume when re-run with the same resolved config.
nlohmann::json run(const config::ExperimentConfig& cfg);

// Fit y ~ C x^(1/4) in log space with the exponent pinned; returns C and the
// coefficient of determination of the pinned fit.
struct QuarterFit {
    double c = 0.0;
    double r_squared = 0.0;
    double free_slope = 0.0;  // unconstrained log-log slope, for reporting
};
QuarterFit fit_quarter_power(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qmnum::experiments
