#include "fedni/graphcons.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "fedni/errors.hpp"

namespace fedni {

PcaResult pca_reduce(const Matrix& x, std::size_t d_h) {
    const std::size_t n = x.rows(), d = x.cols();
    const std::size_t achievable = std::min(n, d);
    if (d_h == 0 || d_h > achievable)
        throw dimension_error("pca_reduce: d_h " + std::to_string(d_h) + " exceeds achievable rank " +
                              std::to_string(achievable));

    Matrix mean = col_means(x);
    Eigen::MatrixXd xc(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) xc(i, j) = x(i, j) - mean(0, j);

    const double denom = n > 1 ? double(n - 1) : 1.0;
    Eigen::MatrixXd cov = (xc.transpose() * xc) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw numeric_error("pca_reduce: eigendecomposition failed");

    // Eigen returns ascending eigenvalues; we want descending.
    PcaResult out;
    out.model.mean = mean;
    out.model.basis = Matrix(d, d_h);
    out.model.eigenvalues.resize(d);
    for (std::size_t j = 0; j < d; ++j) out.model.eigenvalues[j] = es.eigenvalues()(Eigen::Index(d - 1 - j));
    for (std::size_t c = 0; c < d_h; ++c) {
        Eigen::VectorXd v = es.eigenvectors().col(Eigen::Index(d - 1 - c));
        // fix sign: largest-magnitude entry positive
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0) v = -v;
        for (std::size_t r = 0; r < d; ++r) out.model.basis(r, c) = v(Eigen::Index(r));
    }

    Eigen::MatrixXd bas(d, d_h);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d_h; ++c) bas(r, c) = out.model.basis(r, c);
    Eigen::MatrixXd h = xc * bas;
    out.h = Matrix(n, d_h);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d_h; ++c) out.h(i, c) = h(i, c);
    return out;
}

Matrix feature_similarity(const Matrix& h, double sigma) {
    if (sigma <= 0.0) throw config_error("feature_similarity: sigma must be > 0");
    const std::size_t n = h.rows();
    Matrix s(n, n);
    const double denom = 2.0 * sigma * sigma;
    for (std::size_t i = 0; i < n; ++i) {
        s(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = std::exp(-row_sqdist(h, i, h, j) / denom);
            s(i, j) = v;
            s(j, i) = v;
        }
    }
    return s;
}

Matrix phenotype_similarity(const PhenotypeTable& u, double gamma) {
    const std::size_t n = u.size(), q = u.n_fields();
    for (const auto& f : u.fields) {
        if (f.kind != PhenoKind::categorical && f.kind != PhenoKind::continuous)
            throw schema_error("phenotype_similarity: unknown field kind in '" + f.name + "'");
        if (f.kind == PhenoKind::continuous && gamma <= 0.0)
            throw config_error("phenotype_similarity: gamma must be > 0");
    }
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t f = 0; f < q; ++f) {
                const double a = u.values(i, f), b = u.values(j, f);
                if (u.fields[f].kind == PhenoKind::categorical)
                    acc += (a == b) ? 1.0 : 0.0;
                else
                    acc += (std::abs(a - b) <= gamma) ? 1.0 : 0.0;
            }
            s(i, j) = acc;
            s(j, i) = acc;
        }
    return s;
}

Matrix build_adjacency(const Matrix& s, const Matrix& s_tilde, std::size_t k) {
    if (!s.same_shape(s_tilde) || s.rows() != s.cols())
        throw dimension_error("build_adjacency: S and S~ must be square and same shape");
    if (k < 1) throw config_error("build_adjacency: k must be >= 1");
    const std::size_t n = s.rows();
    if (k >= n && n > 0)
        std::cerr << "[fedni] build_adjacency: k=" << k << " >= n=" << n
                  << ", keeping all off-diagonal entries\n";
    const std::size_t keep = std::min(k, n > 0 ? n - 1 : 0);

    Matrix fused = hadamard(s, s_tilde);
    Matrix masked(n, n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (fused(i, a) != fused(i, b)) return fused(i, a) > fused(i, b);
            return a < b;
        });
        for (std::size_t t = 0; t < keep && t < order.size(); ++t)
            masked(i, order[t]) = fused(i, order[t]);
    }
    // symmetrize by max, then add identity
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            a(i, j) = std::max(masked(i, j), masked(j, i));
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
    return a;
}

Matrix normalized_adjacency(const Matrix& a) {
    if (a.rows() != a.cols()) throw dimension_error("normalized_adjacency: matrix must be square");
    const std::size_t n = a.rows();
    std::vector<double> dinv(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
        if (deg <= 0.0) throw numeric_error("normalized_adjacency: node " + std::to_string(i) + " has zero degree");
        dinv[i] = 1.0 / std::sqrt(deg);
    }
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(i, j) = dinv[i] * a(i, j) * dinv[j];
    return out;
}

double mean_pairwise_distance(const Matrix& h) {
    const std::size_t n = h.rows();
    if (n < 2) return 1.0;
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            total += std::sqrt(row_sqdist(h, i, h, j));
            ++pairs;
        }
    const double mean = total / double(pairs);
    return mean > 0.0 ? mean : 1.0;
}

void finalize_graph(PopulationGraph& g) {
    const std::size_t n = g.n(), d = g.feature_dim();
    if (n == 0) throw config_error("finalize_graph: empty graph");
    const std::size_t d_h = std::min(g.params.d_h, std::min(n, d));
    PcaResult pca = pca_reduce(g.X, d_h);
    g.H = std::move(pca.h);
    g.pca = std::move(pca.model);
    g.sigma_used = g.params.sigma > 0.0 ? g.params.sigma : mean_pairwise_distance(g.H);
    Matrix s = feature_similarity(g.H, g.sigma_used);
    Matrix st = phenotype_similarity(g.U, g.params.gamma);
    g.A = build_adjacency(s, st, g.params.k);
    g.a_norm = normalized_adjacency(g.A);
}

} // namespace fedni
