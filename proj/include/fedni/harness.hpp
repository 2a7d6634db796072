#ifndef FEDNI_HARNESS_HPP
#define FEDNI_HARNESS_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedni/classifier.hpp"
#include "fedni/datagen.hpp"
#include "fedni/federation.hpp"

namespace fedni {

enum class Mode { fedni, fedgcn, localgcn, centralgcn, random_inpaint };
Mode mode_from_name(const std::string& name);
const char* mode_name(Mode m);

enum class MaskingMode { bfs, random };

/// Full experiment configuration. Defaults are the production settings:
/// alpha = beta = 1, k = 10, M = 5, E = 10, T1 = 30, T2 = 10, lr = 0.001,
/// sigma_dp = 0.01, 5 folds x 5 repeats, 80% labeled rate upstream.
struct ExperimentConfig {
    Mode mode = Mode::fedni;
    InpaintFlMode inpaint_fl = InpaintFlMode::fl_g;
    MaskingMode masking = MaskingMode::bfs;
    bool use_discriminator = true;
    bool use_edge_prediction = true;
    double alpha = 1.0;
    double beta = 1.0;
    std::size_t k = 10;
    std::size_t k_prime = 1; // similarity edges per generated node (plus the parent edge)
    double gamma = 2.0;
    double sigma = 0.0; // 0 = mean pairwise distance
    double n_max = 5.0;
    std::size_t clients = 5;
    std::size_t epochs = 10;         // E, both phases
    std::size_t rounds_phase1 = 30;  // T for federated inpainting
    std::size_t rounds_phase2 = 10;  // T for federated classification
    double lr = 1e-3;
    double sigma_dp = 0.01;
    double mask_target = 0.125;
    std::size_t disc_interval = 1;
    std::size_t folds = 5;
    std::size_t repeats = 5;
    std::size_t local_epochs = 100; // LocalGCN / CentralGCN training budget
    std::uint64_t seed = 0;
    bool remerge_each_round = false; // experimental: retrain phase 1 on progressively fused graphs
    bool byte_transport = true;

    std::set<std::string> explicit_keys; // filled by the parser

    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig parse_file(const std::string& path);
    void set_key(const std::string& key, const std::string& value);
    /// Rejects inpainting keys on modes that never touch the inpainting
    /// pipeline, and other inconsistent combinations.
    void validate() const;
    std::map<std::string, std::string> to_key_values() const;
};

struct CellResult {
    std::size_t repeat = 0;
    std::size_t fold = 0;
    MetricsReport metrics;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<CellResult> cells;
    MetricsSummary summary;
    std::vector<std::vector<RoundLog>> phase1_logs; // per repeat
    std::vector<std::vector<RoundLog>> phase2_logs; // per cell, cells order
    double total_wall_ms = 0;
};

ExperimentResult run_experiment(const ExperimentConfig& config, const PopulationGraph& dataset);

/// Deterministic JSON report (no wall times). Byte-identical across runs with
/// the same config, dataset and seed.
std::string render_report_json(const ExperimentResult& result);
/// One row per cell plus a summary row.
std::string render_report_csv(const ExperimentResult& result);
/// Wall-clock timings, kept out of the deterministic report.
std::string render_timings_json(const ExperimentResult& result);

struct TTestResult {
    double t = 0;
    double df = 0;
    double p = 1;
};

/// Two-sample pooled-variance t-test, two-tailed.
TTestResult two_sample_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct AblationVariant {
    std::string name;
    ExperimentConfig config;
};

struct AblationPair {
    std::string a, b;
    std::map<std::string, TTestResult> per_metric;
};

struct AblationResult {
    std::vector<std::string> names;
    std::vector<ExperimentResult> results;
    std::vector<AblationPair> pairs;
};

/// Runs every variant and pairwise t-tests on each metric across the
/// fold x repeat cells.
AblationResult run_ablation(const std::vector<AblationVariant>& variants,
                            const PopulationGraph& dataset);

/// INI-style matrix file: one [name] section per variant, flat config keys
/// inside each section.
std::vector<AblationVariant> parse_ablation_matrix_file(const std::string& path);

std::string render_ablation_json(const AblationResult& result);

/// The random-inpainting baseline: the same generated-node volume as the
/// trained pipeline (about one node per real node), features drawn from the
/// z-scored feature distribution, phenotypes resampled from the local table,
/// unit-weight edges to the parent plus random real peers.
FusedGraph random_merge(const PopulationGraph& g, std::size_t k_prime, Rng& rng);

} // namespace fedni

#endif
