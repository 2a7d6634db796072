#include "fedni/layers.hpp"

#include <cmath>

#include "fedni/errors.hpp"

namespace fedni {

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / double(rows + cols));
    Matrix m(rows, cols);
    for (auto& v : m.raw()) v = rng.uniform(-limit, limit);
    return m;
}

LinearLayer::LinearLayer(const std::string& name, std::size_t in_dim, std::size_t out_dim, Rng& rng)
    : W(name + ".W", glorot_uniform(in_dim, out_dim, rng)), b(name + ".b", Matrix(1, out_dim)) {}

Tape::Ref LinearLayer::forward(Tape& t, Tape::Ref x, bool trainable) {
    Tape::Ref w = trainable ? t.param(W) : t.constant(W.value);
    Tape::Ref bias = trainable ? t.param(b) : t.constant(b.value);
    return t.add_row(t.matmul(x, w), bias);
}

void SpectralNorm::init(std::size_t out_dim, Rng& rng) {
    u = Matrix(1, out_dim);
    double norm = 0.0;
    for (auto& v : u.raw()) {
        v = rng.normal();
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        u(0, 0) = 1.0;
        return;
    }
    for (auto& v : u.raw()) v /= norm;
}

namespace {
double vec_norm(const Matrix& v) {
    double s = 0.0;
    for (double x : v.raw()) s += x * x;
    return std::sqrt(s);
}
} // namespace

Matrix spectral_normalize(const ParamTensor& W, SpectralNorm& sn, std::size_t power_iters) {
    const Matrix& w = W.value;
    sn.degenerate = false;
    if (frobenius_norm(w) == 0.0) {
        sn.degenerate = true;
        return w;
    }
    for (std::size_t it = 0; it < power_iters; ++it) {
        // v = W u / |W u|  (input space), u = W^T v / |W^T v| (output space)
        Matrix v = matmul(w, sn.u.transpose()); // in x 1
        const double vn = vec_norm(v);
        if (vn < 1e-30) {
            sn.degenerate = true;
            return w;
        }
        for (auto& x : v.raw()) x /= vn;
        Matrix un = matmul(w.transpose(), v); // out x 1
        const double un_norm = vec_norm(un);
        if (un_norm < 1e-30) {
            sn.degenerate = true;
            return w;
        }
        for (std::size_t j = 0; j < un.rows(); ++j) sn.u(0, j) = un(j, 0) / un_norm;
        // sigma = v^T W u with the refreshed u
        Matrix wu = matmul(w, sn.u.transpose());
        double s = 0.0;
        for (std::size_t i = 0; i < wu.rows(); ++i) s += v(i, 0) * wu(i, 0);
        sn.sigma = s;
    }
    if (sn.sigma <= 0.0 || !std::isfinite(sn.sigma)) {
        sn.degenerate = true;
        return w;
    }
    return scale(w, 1.0 / sn.sigma);
}

SnLinearLayer::SnLinearLayer(const std::string& name, std::size_t in_dim, std::size_t out_dim, Rng& rng)
    : W(name + ".W", glorot_uniform(in_dim, out_dim, rng)), b(name + ".b", Matrix(1, out_dim)) {
    sn.init(out_dim, rng);
}

void SnLinearLayer::refresh(std::size_t power_iters) { spectral_normalize(W, sn, power_iters); }

Tape::Ref SnLinearLayer::forward(Tape& t, Tape::Ref x, bool trainable) {
    Tape::Ref w = trainable ? t.param(W) : t.constant(W.value);
    const double inv_sigma = sn.degenerate ? 1.0 : 1.0 / sn.sigma;
    Tape::Ref w_eff = t.affine(w, inv_sigma, 0.0);
    Tape::Ref bias = trainable ? t.param(b) : t.constant(b.value);
    return t.add_row(t.matmul(x, w_eff), bias);
}

GraphConvLayer::GraphConvLayer(const std::string& name, std::size_t in_dim, std::size_t out_dim,
                               Act act_, Rng& rng)
    : W(name + ".W", glorot_uniform(in_dim, out_dim, rng)), act(act_) {}

Tape::Ref GraphConvLayer::forward(Tape& t, Tape::Ref a_norm, Tape::Ref z, bool trainable) {
    Tape::Ref w = trainable ? t.param(W) : t.constant(W.value);
    return t.activation(t.matmul(t.matmul(a_norm, z), w), act);
}

Tape::Ref gcn_layer_forward(Tape& t, Tape::Ref z, Tape::Ref a_norm, ParamTensor& w, Act act) {
    const Matrix& zv = t.value(z);
    const Matrix& av = t.value(a_norm);
    if (av.rows() != av.cols() || av.cols() != zv.rows() || zv.cols() != w.value.rows())
        throw dimension_error("gcn_layer_forward: A " + std::to_string(av.rows()) + "x" +
                              std::to_string(av.cols()) + ", Z " + std::to_string(zv.rows()) + "x" +
                              std::to_string(zv.cols()) + ", W " + std::to_string(w.value.rows()) +
                              "x" + std::to_string(w.value.cols()));
    require_finite(zv, "gcn_layer_forward: Z");
    require_finite(av, "gcn_layer_forward: A_norm");
    return t.activation(t.matmul(t.matmul(a_norm, z), t.param(w)), act);
}

BatchNormLayer::BatchNormLayer(const std::string& name, std::size_t dim)
    : gamma(name + ".gamma", Matrix(1, dim, 1.0)), beta(name + ".beta", Matrix(1, dim, 0.0)), state(dim) {}

Tape::Ref BatchNormLayer::forward(Tape& t, Tape::Ref x, bool training, bool trainable) {
    Tape::Ref g = trainable ? t.param(gamma) : t.constant(gamma.value);
    Tape::Ref bt = trainable ? t.param(beta) : t.constant(beta.value);
    return t.batch_norm(x, g, bt, state, training);
}

} // namespace fedni
