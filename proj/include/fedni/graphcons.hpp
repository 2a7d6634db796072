#ifndef FEDNI_GRAPHCONS_HPP
#define FEDNI_GRAPHCONS_HPP

#include "fedni/graph.hpp"
#include "fedni/matrix.hpp"

namespace fedni {

struct PcaResult {
    Matrix h; // n x d_h
    PcaModel model;
};

/// Projects X onto its top-d_h principal directions (descending eigenvalue
/// order; each column's sign is fixed so its largest-magnitude entry is
/// positive). Throws dimension_error when d_h > min(n, d), naming the
/// achievable dimension.
PcaResult pca_reduce(const Matrix& x, std::size_t d_h);

/// s_ij = exp(-|h_i - h_j|^2 / (2 sigma^2)). Symmetric with unit diagonal.
Matrix feature_similarity(const Matrix& h, double sigma);

/// s~_ij = sum_q f^q(u_i, u_j): equality indicator for categorical fields,
/// |u_i - u_j| <= gamma indicator for continuous fields. Integer-valued in
/// [0, Q].
Matrix phenotype_similarity(const PhenotypeTable& u, double gamma);

/// A0 = S o S~; keeps the k largest off-diagonal weights per row (ties broken
/// by lower node index), symmetrizes by max, then adds the identity.
Matrix build_adjacency(const Matrix& s, const Matrix& s_tilde, std::size_t k);

/// D^{-1/2} A D^{-1/2} with D = diag(row sums of A).
Matrix normalized_adjacency(const Matrix& a);

/// Mean Euclidean distance over all node pairs of H (the default Gaussian
/// kernel width). Returns 1 when there are fewer than two distinct rows.
double mean_pairwise_distance(const Matrix& h);

/// Runs the full construction pipeline on g.X/g.U per g.params, filling
/// H, pca, sigma_used, A and a_norm. d_h is clamped to min(n, d).
void finalize_graph(PopulationGraph& g);

} // namespace fedni

#endif
