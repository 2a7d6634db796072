#ifndef FEDNI_DATAGEN_HPP
#define FEDNI_DATAGEN_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fedni/graph.hpp"

namespace fedni {

/// Class-conditional distribution of one phenotype field.
struct PhenoFieldSpec {
    std::string name;
    PhenoKind kind = PhenoKind::categorical;
    // categorical: per class, probability of each category
    std::vector<std::vector<double>> class_probs;
    // continuous: per class mean, shared stddev
    std::array<double, 2> mean = {0.0, 0.0};
    double stddev = 1.0;
};

/// Synthetic cohort with planted two-class structure: class-conditional unit
/// Gaussians separated by `class_sep` in feature space, class-correlated
/// phenotypes, z-scored features, and a population graph built on top.
struct CohortSpec {
    std::size_t n = 500;
    std::size_t d = 50;
    double class_sep = 2.5;
    double label_balance = 0.5;
    double labeled_rate = 0.8;
    std::vector<PhenoFieldSpec> phenotypes;
    GraphParams graph;
    std::uint64_t seed = 0;

    /// Desk-scale defaults: sex (categorical, mildly class-correlated) and
    /// age (continuous, class means 68 vs 74).
    static CohortSpec defaults();
};

PopulationGraph generate_population(const CohortSpec& spec);

/// Uniform random node split into `m` near-equal parts. Each client's graph
/// is rebuilt locally from its own nodes (cross-client edges never exist);
/// `induced_subgraph` instead carves rows/columns out of the global graph for
/// controlled experiments.
std::vector<PopulationGraph> partition_clients(const PopulationGraph& g, std::size_t m,
                                               std::uint64_t seed, bool induced_subgraph = false);

/// Binary container, magic "FNI1": features, typed phenotype columns, labels,
/// masks and construction params. Integers little-endian; loading rebuilds
/// the graph deterministically from the stored content.
void save_dataset(const PopulationGraph& g, const std::string& path);
PopulationGraph load_dataset(const std::string& path);

/// Flat key-value cohort description for the CLI (n, d, class_sep, seed,
/// graph params, phenotype knobs). Unknown keys are rejected.
CohortSpec parse_cohort_spec_file(const std::string& path);

} // namespace fedni

#endif
