#include "fedni/graph.hpp"

#include "fedni/errors.hpp"
#include "fedni/graphcons.hpp"

namespace fedni {

PhenotypeTable PhenotypeTable::subset(const std::vector<std::size_t>& ids) const {
    PhenotypeTable t;
    t.fields = fields;
    t.values = Matrix(ids.size(), values.cols());
    for (std::size_t r = 0; r < ids.size(); ++r)
        for (std::size_t q = 0; q < values.cols(); ++q)
            t.values(r, q) = values(ids[r], q);
    return t;
}

bool PhenotypeTable::operator==(const PhenotypeTable& o) const {
    if (fields.size() != o.fields.size()) return false;
    for (std::size_t q = 0; q < fields.size(); ++q) {
        if (fields[q].name != o.fields[q].name || fields[q].kind != o.fields[q].kind ||
            fields[q].n_categories != o.fields[q].n_categories)
            return false;
    }
    return values == o.values;
}

Matrix PcaModel::project(const Matrix& x) const {
    if (x.cols() != mean.cols()) throw dimension_error("PcaModel::project: feature dim mismatch");
    Matrix centered = x;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j)
            centered(i, j) -= mean(0, j);
    return matmul(centered, basis);
}

PopulationGraph PopulationGraph::subset(const std::vector<std::size_t>& ids) const {
    PopulationGraph g;
    g.X = Matrix(ids.size(), X.cols());
    for (std::size_t r = 0; r < ids.size(); ++r)
        for (std::size_t j = 0; j < X.cols(); ++j) g.X(r, j) = X(ids[r], j);
    if (!H.empty()) {
        g.H = Matrix(ids.size(), H.cols());
        for (std::size_t r = 0; r < ids.size(); ++r)
            for (std::size_t j = 0; j < H.cols(); ++j) g.H(r, j) = H(ids[r], j);
    }
    g.U = U.subset(ids);
    g.A = Matrix(ids.size(), ids.size());
    for (std::size_t r = 0; r < ids.size(); ++r)
        for (std::size_t c = 0; c < ids.size(); ++c) g.A(r, c) = A(ids[r], ids[c]);
    g.y.reserve(ids.size());
    g.labeled_mask.reserve(ids.size());
    g.provenance.reserve(ids.size());
    for (std::size_t id : ids) {
        g.y.push_back(y[id]);
        g.labeled_mask.push_back(labeled_mask[id]);
        g.provenance.push_back(provenance[id]);
    }
    g.pca = pca;
    g.params = params;
    g.sigma_used = sigma_used;
    g.a_norm = normalized_adjacency(g.A);
    return g;
}

} // namespace fedni
