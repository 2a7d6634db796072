#ifndef FEDNI_TAPE_HPP
#define FEDNI_TAPE_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "fedni/matrix.hpp"

namespace fedni {

enum class Act { identity, relu, elu, tanh, sigmoid };

Act activation_from_name(const std::string& name);
const char* activation_name(Act a);

/// A trainable parameter: value plus gradient and Adam state, all one shape.
struct ParamTensor {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix adam_m;
    Matrix adam_v;
    std::size_t step_count = 0;

    ParamTensor() = default;
    ParamTensor(std::string n, Matrix v)
        : name(std::move(n)),
          value(std::move(v)),
          grad(value.rows(), value.cols()),
          adam_m(value.rows(), value.cols()),
          adam_v(value.rows(), value.cols()) {}

    void zero_grad() { grad.fill(0.0); }
    std::size_t numel() const { return value.size(); }
};

/// Running statistics of a batch-norm layer (buffers, not parameters).
struct BatchNormState {
    Matrix running_mean; // 1 x d
    Matrix running_var;  // 1 x d
    bool size_one_fallback = false; // set when a training batch of size 1 used running stats

    explicit BatchNormState(std::size_t dim = 0)
        : running_mean(1, dim, 0.0), running_var(1, dim, 1.0) {}
};

/// Reverse-mode tape over dense matrices. One tape per forward/backward pass;
/// the op set is exactly what the fixed model architectures need. Not
/// thread-safe; one pass at a time.
class Tape {
public:
    struct Ref {
        std::size_t id = SIZE_MAX;
        bool valid() const { return id != SIZE_MAX; }
    };

    /// Leaf with no gradient accumulation.
    Ref constant(Matrix v);
    /// Leaf bound to a parameter; backward() adds into p.grad.
    Ref param(ParamTensor& p);

    Ref matmul(Ref a, Ref b);
    Ref add(Ref a, Ref b);
    Ref sub(Ref a, Ref b);
    Ref mul(Ref a, Ref b);                     // elementwise
    Ref mul_const(Ref a, Matrix weights);      // elementwise by a constant matrix
    Ref add_row(Ref a, Ref row_bias);          // broadcast 1 x d bias over rows
    Ref affine(Ref a, double s, double t);     // s*x + t
    Ref activation(Ref a, Act act);
    Ref log(Ref a);
    Ref square(Ref a);
    Ref clip(Ref a, double lo, double hi);     // gradient passes only strictly inside (lo, hi)
    Ref sum(Ref a);                            // 1x1
    Ref mean(Ref a);                           // 1x1; mean of empty matrix is 0
    Ref concat_cols(Ref a, Ref b);
    Ref slice_cols(Ref a, std::size_t c0, std::size_t c1); // columns [c0, c1)
    Ref gather_rows(Ref a, std::vector<std::size_t> idx);
    Ref softmax_rows(Ref a);
    Ref batch_norm(Ref x, Ref gamma, Ref beta, BatchNormState& state, bool training);

    const Matrix& value(Ref r) const { return nodes_[r.id].value; }
    /// Gradient accumulated at a node; valid after backward().
    const Matrix& grad(Ref r) const { return nodes_[r.id].grad; }

    /// Reverse pass from a 1x1 root. Zeroes the grads of every registered
    /// parameter first, then accumulates into them.
    void backward(Ref root);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&)> pull; // propagates this node's grad into its inputs
        ParamTensor* bound = nullptr;
    };

    Ref push(Matrix value, std::function<void(Tape&)> pull);
    Matrix& grad_mut(Ref r) { return nodes_[r.id].grad; }

    std::vector<Node> nodes_;
    std::vector<std::size_t> param_nodes_;
};

/// Applies an activation to a plain matrix (no tape).
Matrix apply_activation(const Matrix& a, Act act);

/// Standard Adam update, in place, on every listed parameter.
/// beta1 = 0.9, beta2 = 0.999, eps = 1e-8. Throws numeric_error if an update
/// produces a non-finite value.
void adam_step(const std::vector<ParamTensor*>& params, double lr);

} // namespace fedni

#endif
