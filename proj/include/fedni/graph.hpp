#ifndef FEDNI_GRAPH_HPP
#define FEDNI_GRAPH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fedni/matrix.hpp"

namespace fedni {

enum class PhenoKind : std::uint8_t { categorical = 0, continuous = 1 };

struct PhenotypeField {
    std::string name;
    PhenoKind kind = PhenoKind::categorical;
    std::size_t n_categories = 0; // categorical only
};

/// Per-node non-imaging attributes. Categorical values are stored as
/// nonnegative integer codes; continuous values in their natural units.
struct PhenotypeTable {
    std::vector<PhenotypeField> fields;
    Matrix values; // n x Q

    std::size_t size() const { return values.rows(); }
    std::size_t n_fields() const { return fields.size(); }

    PhenotypeTable subset(const std::vector<std::size_t>& ids) const;
    bool operator==(const PhenotypeTable& o) const;
};

/// Fitted PCA projection, kept so generated node features can be mapped into
/// the same reduced space used for edge construction.
struct PcaModel {
    Matrix mean;  // 1 x d
    Matrix basis; // d x d_h, columns are principal directions
    std::vector<double> eigenvalues; // all d, descending

    bool empty() const { return basis.empty(); }
    Matrix project(const Matrix& x) const; // (x - mean) * basis
};

struct GraphParams {
    std::size_t k = 10;
    std::size_t d_h = 64;  // clamped to min(n, d) at construction
    double sigma = 0.0;    // Gaussian kernel width; 0 = mean pairwise distance
    double gamma = 2.0;    // continuous-phenotype window

    bool operator==(const GraphParams& o) const {
        return k == o.k && d_h == o.d_h && sigma == o.sigma && gamma == o.gamma;
    }
};

constexpr std::uint8_t kNodeReal = 0;
constexpr std::uint8_t kNodeGenerated = 1;

/// A population graph: one node per subject, weighted edges fusing feature
/// and phenotype similarity, with self-loops.
struct PopulationGraph {
    Matrix X;                         // n x d features (z-scored)
    Matrix H;                         // n x d_h reduced features
    PhenotypeTable U;
    Matrix A;                         // n x n fused adjacency, self-loops included
    std::vector<int> y;               // 0/1 labels; -1 for generated nodes
    std::vector<std::uint8_t> labeled_mask;
    std::vector<std::uint8_t> provenance; // kNodeReal / kNodeGenerated
    PcaModel pca;
    GraphParams params;
    double sigma_used = 0.0;
    Matrix a_norm;                    // cached D^{-1/2} A D^{-1/2}

    std::size_t n() const { return X.rows(); }
    std::size_t feature_dim() const { return X.cols(); }

    PopulationGraph subset(const std::vector<std::size_t>& ids) const; // rows/cols; recomputes a_norm
};

} // namespace fedni

#endif
