#ifndef FLOWPRESS_EXPERIMENT_HPP
#define FLOWPRESS_EXPERIMENT_HPP

#include "flowpress/ekp.hpp"
#include "flowpress/lsv.hpp"
#include "flowpress/pressure.hpp"
#include "flowpress/shift_model.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace flowpress::cli {

struct SweepSpec {
    double s_min = 1e-4;
    double s_max = 1e-1;
    std::size_t points = 16;
    std::string spacing = "log"; // or "linear"
};

struct ExperimentConfig {
    std::string model_type = "synthetic"; // or "lsv"
    double beta = 1.5;
    double gamma = 1.0;
    double C0 = 5.0;
    double C1 = 1.0;
    std::int64_t N = 1'000'000;
    // lsv-only knobs
    double alpha = 0.75;
    std::size_t grid = 2048;
    SweepSpec sweep;
    std::vector<std::string> fits; // tail, blowup2, blowup3, ekp, moments
    std::string out_dir = ".";
    std::vector<std::string> formats{"csv", "json"};
};

// Named parameter sets realizing the studied regimes.
ExperimentConfig preset(const std::string& name);

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

// Validates regime gates and the sweep window; throws on violation.
void validate(const ExperimentConfig& cfg);

struct HardInvariantReport {
    double normalization_residual = 0.0;
    double gibbs_max_residual = 0.0;
    double duality_max_residual = 0.0;
    double convexity_min_second_difference = 0.0;
    double q_concavity_max_second_difference = 0.0;
    std::vector<std::string> failures; // named failing assertions
    bool ok() const { return failures.empty(); }
};

struct RunResult {
    HardInvariantReport invariants;
    std::vector<std::filesystem::path> files;
    std::string summary_json;
};

// Executes the sweep plus requested fits and writes CSV/JSON artifacts into
// cfg.out_dir.  Exit-code policy: invariant failures are bugs; claimed-vs-fit
// disagreement is a finding and never fails a run.
RunResult run(const ExperimentConfig& cfg);

std::vector<double> sweep_grid(const SweepSpec& spec);

} // namespace flowpress::cli

#endif
