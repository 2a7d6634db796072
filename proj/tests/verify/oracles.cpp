#include "oracles.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedni/graphcons.hpp"
#include "fedni/rng.hpp"

namespace fedni::testing {

Matrix brute_feature_similarity(const Matrix& h, double sigma) {
    const std::size_t n = h.rows();
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double sq = 0.0;
            for (std::size_t c = 0; c < h.cols(); ++c) {
                const double d = h(i, c) - h(j, c);
                sq += d * d;
            }
            s(i, j) = std::exp(-sq / (2.0 * sigma * sigma));
        }
    return s;
}

Matrix brute_phenotype_similarity(const PhenotypeTable& u, double gamma) {
    const std::size_t n = u.size();
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t q = 0; q < u.n_fields(); ++q) {
                if (u.fields[q].kind == PhenoKind::categorical) {
                    if (u.values(i, q) == u.values(j, q)) acc += 1.0;
                } else {
                    if (std::abs(u.values(i, q) - u.values(j, q)) <= gamma) acc += 1.0;
                }
            }
            s(i, j) = acc;
        }
    return s;
}

Matrix brute_build_adjacency(const Matrix& s, const Matrix& st, std::size_t k) {
    const std::size_t n = s.rows();
    Matrix fused(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) fused(i, j) = s(i, j) * st(i, j);

    Matrix kept(n, n);
    const std::size_t keep = std::min(k, n > 0 ? n - 1 : 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::uint8_t> taken(n, 0);
        for (std::size_t pick = 0; pick < keep; ++pick) {
            // exhaustive max extraction; ties to the lowest index
            std::size_t best = SIZE_MAX;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || taken[j]) continue;
                if (best == SIZE_MAX || fused(i, j) > fused(i, best)) best = j;
            }
            if (best == SIZE_MAX) break;
            taken[best] = 1;
            kept(i, best) = fused(i, best);
        }
    }
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = std::max(kept(i, j), kept(j, i));
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
    return a;
}

double brute_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / double(pairs);
}

double brute_largest_singular_value(const Matrix& w) {
    Eigen::MatrixXd m(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = w(i, j);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

namespace {
struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};
} // namespace

bool uf_connected(const Matrix& a, const std::vector<std::uint8_t>& retained) {
    const std::size_t n = a.rows();
    UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (retained[i] && retained[j] && a(i, j) != 0.0) uf.unite(i, j);
    std::size_t root = SIZE_MAX;
    for (std::size_t i = 0; i < n; ++i) {
        if (!retained[i]) continue;
        if (root == SIZE_MAX)
            root = uf.find(i);
        else if (uf.find(i) != root)
            return false;
    }
    return true;
}

PopulationGraph random_connected_graph(std::size_t n, std::size_t extra_edges, std::uint64_t seed) {
    Rng rng(seed);
    PopulationGraph g;
    g.A = Matrix(n, n);
    for (std::size_t v = 1; v < n; ++v) {
        const std::size_t u = rng.uniform_index(v); // attach to an earlier node
        g.A(v, u) = 1.0;
        g.A(u, v) = 1.0;
    }
    for (std::size_t e = 0; e < extra_edges; ++e) {
        const std::size_t i = rng.uniform_index(n);
        const std::size_t j = rng.uniform_index(n);
        if (i == j) continue;
        g.A(i, j) = 1.0;
        g.A(j, i) = 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) g.A(i, i) += 1.0;

    const std::size_t d = 4;
    g.X = Matrix(n, d);
    for (auto& v : g.X.raw()) v = rng.normal();
    PhenotypeField sex;
    sex.name = "sex";
    sex.kind = PhenoKind::categorical;
    sex.n_categories = 2;
    g.U.fields = {sex};
    g.U.values = Matrix(n, 1);
    for (std::size_t i = 0; i < n; ++i) g.U.values(i, 0) = double(rng.uniform_index(2));
    g.y.assign(n, 0);
    g.labeled_mask.assign(n, 1);
    g.provenance.assign(n, kNodeReal);
    g.sigma_used = 1.0;
    g.a_norm = normalized_adjacency(g.A);
    return g;
}

PopulationGraph small_random_population(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    PopulationGraph g;
    g.X = Matrix(n, d);
    for (auto& v : g.X.raw()) v = rng.normal();
    PhenotypeField sex;
    sex.name = "sex";
    sex.kind = PhenoKind::categorical;
    sex.n_categories = 2;
    PhenotypeField age;
    age.name = "age";
    age.kind = PhenoKind::continuous;
    g.U.fields = {sex, age};
    g.U.values = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        g.U.values(i, 0) = double(rng.uniform_index(2));
        g.U.values(i, 1) = rng.normal(70.0, 6.0);
    }
    g.y.resize(n);
    for (auto& v : g.y) v = int(rng.uniform_index(2));
    g.labeled_mask.assign(n, 1);
    g.provenance.assign(n, kNodeReal);
    g.params.k = 3;
    g.params.d_h = std::min(n, d);
    g.params.gamma = 5.0;
    finalize_graph(g);
    return g;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.raw()[i] - b.raw()[i]));
    return m;
}

std::vector<Matrix> snapshot_grads(const std::vector<ParamTensor*>& params) {
    std::vector<Matrix> out;
    out.reserve(params.size());
    for (const ParamTensor* p : params) out.push_back(p->grad);
    return out;
}

FdReport fd_check_params(const std::function<double()>& eval,
                         const std::vector<ParamTensor*>& params,
                         const std::vector<Matrix>& analytic, double h, double abs_floor) {
    FdReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        ParamTensor* p = params[pi];
        for (std::size_t e = 0; e < p->numel(); ++e) {
            const double saved = p->value.raw()[e];
            p->value.raw()[e] = saved + h;
            const double lp = eval();
            p->value.raw()[e] = saved - h;
            const double lm = eval();
            p->value.raw()[e] = saved;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = analytic[pi].raw()[e];
            ++report.checked;
            const double mag = std::max(std::abs(an), std::abs(fd));
            if (mag < abs_floor) continue;
            const double rel = std::abs(an - fd) / mag;
            if (rel > report.max_rel) {
                report.max_rel = rel;
                report.worst = p->name + "[" + std::to_string(e) + "] analytic=" + std::to_string(an) +
                               " fd=" + std::to_string(fd);
            }
        }
    }
    return report;
}

} // namespace fedni::testing
