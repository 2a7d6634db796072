#ifndef FEDNI_LAYERS_HPP
#define FEDNI_LAYERS_HPP

#include <string>
#include <vector>

#include "fedni/matrix.hpp"
#include "fedni/rng.hpp"
#include "fedni/tape.hpp"

namespace fedni {

/// Glorot-uniform initialization: U(-l, l) with l = sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

/// y = x W + b.
struct LinearLayer {
    ParamTensor W; // in x out
    ParamTensor b; // 1 x out

    LinearLayer() = default;
    LinearLayer(const std::string& name, std::size_t in_dim, std::size_t out_dim, Rng& rng);

    Tape::Ref forward(Tape& t, Tape::Ref x, bool trainable = true);
    void collect(std::vector<ParamTensor*>& out) {
        out.push_back(&W);
        out.push_back(&b);
    }
    std::size_t in_dim() const { return W.value.rows(); }
    std::size_t out_dim() const { return W.value.cols(); }
};

/// Persistent power-iteration estimate of a weight matrix's largest singular
/// value. `u` approximates the leading singular direction in the output space.
struct SpectralNorm {
    Matrix u;             // 1 x out_dim, unit Euclidean norm
    double sigma = 1.0;   // last estimate
    bool degenerate = false;

    void init(std::size_t out_dim, Rng& rng);
};

/// Returns W.value scaled by 1/sigma_max_estimate. power_iters >= 1 runs that
/// many power iterations, updating sn.u and sn.sigma in place; power_iters == 0
/// reuses the cached estimate (the estimate is a constant as far as
/// differentiation is concerned either way). A zero matrix is returned
/// unchanged with sn.degenerate set.
Matrix spectral_normalize(const ParamTensor& W, SpectralNorm& sn, std::size_t power_iters);

/// Linear layer whose weight is divided by its estimated largest singular
/// value on every forward (SN-GAN discriminator layers).
struct SnLinearLayer {
    ParamTensor W;
    ParamTensor b;
    SpectralNorm sn;

    SnLinearLayer() = default;
    SnLinearLayer(const std::string& name, std::size_t in_dim, std::size_t out_dim, Rng& rng);

    /// Runs power iterations to refresh the sigma estimate (training does one
    /// per step; tests use 20+).
    void refresh(std::size_t power_iters);

    /// Forward with the cached sigma; gradients w.r.t. W are scaled by
    /// 1/sigma, with sigma treated as a constant.
    Tape::Ref forward(Tape& t, Tape::Ref x, bool trainable = true);

    void collect(std::vector<ParamTensor*>& out) {
        out.push_back(&W);
        out.push_back(&b);
    }
};

/// Graph convolution per a fixed symmetric normalization:
/// y = act(A_norm Z W), no bias.
struct GraphConvLayer {
    ParamTensor W;
    Act act = Act::identity;

    GraphConvLayer() = default;
    GraphConvLayer(const std::string& name, std::size_t in_dim, std::size_t out_dim, Act act, Rng& rng);

    Tape::Ref forward(Tape& t, Tape::Ref a_norm, Tape::Ref z, bool trainable = true);
    void collect(std::vector<ParamTensor*>& out) { out.push_back(&W); }
};

/// Functional form of the graph-convolution forward; registers the op on the
/// tape so gradients w.r.t. Z and W are exact.
Tape::Ref gcn_layer_forward(Tape& t, Tape::Ref z, Tape::Ref a_norm, ParamTensor& w, Act act);

/// Batch normalization with learnable scale/shift and running statistics.
struct BatchNormLayer {
    ParamTensor gamma; // 1 x d, init 1
    ParamTensor beta;  // 1 x d, init 0
    BatchNormState state;

    BatchNormLayer() = default;
    explicit BatchNormLayer(const std::string& name, std::size_t dim);

    Tape::Ref forward(Tape& t, Tape::Ref x, bool training, bool trainable = true);
    void collect(std::vector<ParamTensor*>& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }
};

} // namespace fedni

#endif
