#ifndef FEDNI_TEST_ORACLES_HPP
#define FEDNI_TEST_ORACLES_HPP

#include <functional>
#include <string>
#include <vector>

#include "fedni/graph.hpp"
#include "fedni/matrix.hpp"
#include "fedni/tape.hpp"

// Brute-force reference implementations used by tests and the acceptance
// suite. Everything here is deliberately independent of the library's
// implementation path: direct double loops, exhaustive extraction, dense SVD.
namespace fedni::testing {

Matrix brute_feature_similarity(const Matrix& h, double sigma);
Matrix brute_phenotype_similarity(const PhenotypeTable& u, double gamma);
Matrix brute_build_adjacency(const Matrix& s, const Matrix& st, std::size_t k);

/// All-pairs comparison count with ties worth 1/2.
double brute_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Largest singular value via dense SVD (Eigen JacobiSVD).
double brute_largest_singular_value(const Matrix& w);

/// Union-find connectivity of the subgraph induced by `retained`.
bool uf_connected(const Matrix& a, const std::vector<std::uint8_t>& retained);

/// Random spanning tree plus extra random edges, wrapped as a PopulationGraph
/// (unit edge weights, self-loops, one categorical phenotype field).
PopulationGraph random_connected_graph(std::size_t n, std::size_t extra_edges, std::uint64_t seed);

/// Tiny cohort through the full construction pipeline (for gradient checks
/// and structural tests).
PopulationGraph small_random_population(std::size_t n, std::size_t d, std::uint64_t seed);

double max_abs_diff(const Matrix& a, const Matrix& b);

struct FdReport {
    double max_rel = 0.0;
    std::size_t checked = 0;
    std::string worst;
    bool pass(double tol) const { return max_rel <= tol; }
};

/// Central finite differences over every element of every parameter against
/// the supplied analytic gradients. Elements where both |analytic| and |fd|
/// are below `abs_floor` count as agreeing.
FdReport fd_check_params(const std::function<double()>& eval,
                         const std::vector<ParamTensor*>& params,
                         const std::vector<Matrix>& analytic, double h = 1e-5,
                         double abs_floor = 1e-6);

std::vector<Matrix> snapshot_grads(const std::vector<ParamTensor*>& params);

} // namespace fedni::testing

#endif
