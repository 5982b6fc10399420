#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nsmc/baselines.hpp"
#include "nsmc/config.hpp"
#include "nsmc/datagen.hpp"
#include "nsmc/optimizer.hpp"
#include "nsmc/verification.hpp"

namespace nsmc {

/// One long-format result line. `seed` is the decimal seed, or "mean" for
/// an aggregate over seeds.
struct ResultRow {
    std::string experiment;
    std::string method;
    std::string seed;
    std::string metric;
    double value = 0.0;
};

struct ExperimentReport {
    std::string name;
    std::vector<ResultRow> rows;       ///< per (cell, method, seed), in grid order
    std::vector<ResultRow> aggregates; ///< arithmetic means over seeds
    std::vector<McCheckResult> checks; ///< pass/fail checks; any failure means exit 1
    std::vector<std::string> notes;    ///< per-cell errors and diagnostics for stderr

    [[nodiscard]] bool all_passed() const;
};

/// Appends one aggregate row per (experiment, method, metric): the mean of
/// that group's per-seed rows, in order of first appearance.
void add_aggregates(ExperimentReport& report);

/// "# config_hash=<hex>" line, the header, then rows and aggregates.
std::string results_csv(const ExperimentReport& report, const Config& config);

/// results.csv and resolved_config.txt under `out_dir` (created if needed).
void write_report(const ExperimentReport& report, const Config& config, const std::filesystem::path& out_dir);

enum class Method { Nsmc, Smc, Nimc, Imc };
Method parse_method(const std::string& name);
std::string to_string(Method m);

/// Everything one fit needs. `union_batch` feeds the squared-loss methods.
struct FitProblem {
    SampleBatch omega;
    SampleBatch omega_prime;
    SampleBatch union_batch;
    ActivationKind a1 = ActivationKind::ReLU;
    ActivationKind a2 = ActivationKind::ReLU;
    bool tied = false;
    bool fix_first_row = false;
    VarianceStabilizer transform;
};

/// Activations a method fits with: the problem's for NSMC/NIMC, identity for SMC/IMC.
std::pair<ActivationKind, ActivationKind> method_activations(Method m, const FitProblem& p);

Objective make_objective(Method m, const FitProblem& p);

/// Runs GD for one method from `start`; trace_truth is forwarded when set.
GdResult fit_method(Method m, const FitProblem& p, const WeightPair& start, const GdConfig& gd);

/// Parses the shared GD keys (step, max_iters, grad_tol).
GdConfig gd_config_from(const Config& c);

/// "auto" resolves to true when either activation is relu.
bool resolve_fix_first_row(const Config& c, ActivationKind a1, ActivationKind a2);

/// Linear-convergence traces for every (law, a2, seed) cell. Writes
/// trace_<law>_<a1>-<a2>_s<seed>.csv.
ExperimentReport run_convergence(const Config& c, const std::filesystem::path& out_dir);

/// Relative errors E_U, E_V, E_Theta of each method over the grid.
ExperimentReport run_misspec(const Config& c, const std::filesystem::path& out_dir);

/// Clustering of the learned embeddings on mixture features. Writes
/// coords_<side>_<method>_s<seed>.csv.
ExperimentReport run_cluster(const Config& c, const std::filesystem::path& out_dir);

/// Semi-supervised clustering on a labeled CSV data set.
ExperimentReport run_semisup(const Config& c, const std::filesystem::path& out_dir);

/// Lemma, stationarity, curvature, convergence and finite-difference checks.
/// Writes checks.csv.
ExperimentReport run_verify(const Config& c, const std::filesystem::path& out_dir);

/// Labeled data set after encoding and optional standardization.
struct LabeledData {
    Matrix features;
    std::vector<int> labels; ///< 1..K in sorted order of the raw label strings
    std::vector<std::string> feature_names;
    int classes = 0;
};

struct LoadOptions {
    std::string label_column;
    std::vector<std::string> one_hot_columns; ///< "*" encodes every feature column
    bool standardize = true;
};

/// Throws CsvError (with the line number) on malformed or non-numeric cells
/// and ConfigError when the label column is missing.
LabeledData load_labeled_csv(const std::filesystem::path& path, const LoadOptions& opts);

/// Per-column z-scores; constant columns become 0.
Matrix standardize_columns(const Matrix& x);

/// Keeps at most `cap` items per class (uniformly chosen, original order kept).
LabeledData cap_per_class(const LabeledData& data, int cap, std::uint64_t seed);

struct BlobOptions {
    int clusters = 7;
    int dim = 19;
    int per_cluster = 300;
    double separation = 3.0; ///< standard deviation of the centers; points have unit spread
    std::uint64_t seed = 1;
};

/// Gaussian blobs as CSV text: columns f0..f{d-1},label.
std::string blob_csv(const BlobOptions& opts);

} // namespace nsmc
