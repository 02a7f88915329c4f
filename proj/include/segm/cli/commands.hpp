#pragma once

#include <segm/cli/config.hpp>
#include <segm/inference.hpp>
#include <segm/samplers.hpp>

#include <iosfwd>
#include <optional>

namespace segm::cli {

// One of the three simulation designs.
struct ModelSpec {
    enum class Kind { Gaussian, Ising, Mixed };
    Kind kind = Kind::Gaussian;
    Index d = 0;               // gaussian
    Index rows = 0, cols = 0;  // ising, mixed
    double mu = 0.0;
    bool random_signs = false;
    std::uint64_t sign_seed = 0;
    int burn_in = 1000;
    int thin = 10;

    Index dim() const;
    // Symmetric interaction matrix with zero diagonal (the true beta*).
    Matrix interactions() const;
    Dataset sample(Index n, std::uint64_t seed) const;
};

std::string to_string(ModelSpec::Kind k);
ModelSpec::Kind parse_model(const std::string& s);

struct PowerSettings {
    ModelSpec model;
    std::vector<double> mus;
    Index n = 150;
    int replicates = 100;
    Index j = 0, k = 1;
    EdgeTestConfig test;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

struct ReplicateOutcome {
    bool reject = false;
    bool degenerate = false;
    bool failed = false;
    double p_value = 1.0;
    double z = 0.0;
};

struct PowerRow {
    double mu = 0.0;
    Index n = 0, d = 0;
    std::string model;
    int replicates = 0;
    double rejection_rate = 0.0;
    double monte_carlo_stderr = 0.0;
    int rejections = 0;
    int degenerate = 0;  // excluded from the denominator
    int failures = 0;    // counted as non-rejections
};

struct PowerTable {
    std::vector<PowerRow> rows;  // ordered by mu
    std::vector<std::string> errors;
    std::vector<std::vector<ReplicateOutcome>> outcomes;  // [row][replicate]
};

/**
 * Replicate r draws its data from substream (seed, r), the same for every
 * mu, and its CV folds from a second substream, so a table row does not
 * depend on the replicate count or on the other rows.
 */
PowerTable run_power(const PowerSettings& s);

// Settings objects built from a resolved config.
SolverConfig solver_config(const RunConfig& cfg);
LambdaSelection lambda_selection(const RunConfig& cfg, LambdaSelection::Mode cv_mode);
EdgeTestConfig edge_test_config(const RunConfig& cfg);
ModelSpec model_spec(const RunConfig& cfg, std::optional<double> mu);

// Each command writes its primary output to --output (stdout when unset)
// and returns the process exit code.
int cmd_estimate(const RunConfig& cfg, std::ostream& out);
int cmd_test(const RunConfig& cfg, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_power(const RunConfig& cfg, std::ostream& out);

int run_command(const RunConfig& cfg, std::ostream& out);

// Sibling path: "dir/run.json" with suffix ".edges.csv" -> "dir/run.edges.csv".
std::string sibling_path(const std::string& path, const std::string& suffix);

}  // namespace segm::cli
