#include "fedni/tape.hpp"

#include <cmath>

#include "fedni/errors.hpp"

namespace fedni {

Act activation_from_name(const std::string& name) {
    if (name == "identity" || name.empty()) return Act::identity;
    if (name == "relu") return Act::relu;
    if (name == "elu") return Act::elu;
    if (name == "tanh") return Act::tanh;
    if (name == "sigmoid") return Act::sigmoid;
    throw config_error("unknown activation: " + name);
}

const char* activation_name(Act a) {
    switch (a) {
        case Act::identity: return "identity";
        case Act::relu: return "relu";
        case Act::elu: return "elu";
        case Act::tanh: return "tanh";
        case Act::sigmoid: return "sigmoid";
    }
    return "?";
}

namespace {
constexpr double kEluAlpha = 1.0;

double act_fwd(double x, Act a) {
    switch (a) {
        case Act::identity: return x;
        case Act::relu: return x > 0.0 ? x : 0.0;
        case Act::elu: return x > 0.0 ? x : kEluAlpha * (std::exp(x) - 1.0);
        case Act::tanh: return std::tanh(x);
        case Act::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

// derivative expressed through input x and output y
double act_bwd(double x, double y, Act a) {
    switch (a) {
        case Act::identity: return 1.0;
        case Act::relu: return x > 0.0 ? 1.0 : 0.0;
        case Act::elu: return x > 0.0 ? 1.0 : y + kEluAlpha;
        case Act::tanh: return 1.0 - y * y;
        case Act::sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}
} // namespace

Matrix apply_activation(const Matrix& a, Act act) {
    Matrix y = a;
    for (auto& v : y.raw()) v = act_fwd(v, act);
    return y;
}

Tape::Ref Tape::push(Matrix value, std::function<void(Tape&)> pull) {
    Node n;
    n.value = std::move(value);
    n.grad = Matrix(n.value.rows(), n.value.cols());
    n.pull = std::move(pull);
    nodes_.push_back(std::move(n));
    return Ref{nodes_.size() - 1};
}

Tape::Ref Tape::constant(Matrix v) { return push(std::move(v), nullptr); }

Tape::Ref Tape::param(ParamTensor& p) {
    Ref r = push(p.value, nullptr);
    nodes_[r.id].bound = &p;
    param_nodes_.push_back(r.id);
    return r;
}

Tape::Ref Tape::matmul(Ref a, Ref b) {
    Matrix c = fedni::matmul(value(a), value(b));
    return push(std::move(c), [a, b, out = Ref{nodes_.size()}](Tape& t) {
        const Matrix& g = t.grad(out);
        const Matrix da = fedni::matmul(g, t.value(b).transpose());
        const Matrix db = fedni::matmul(t.value(a).transpose(), g);
        t.grad_mut(a) = fedni::add(t.grad(a), da);
        t.grad_mut(b) = fedni::add(t.grad(b), db);
    });
}

Tape::Ref Tape::add(Ref a, Ref b) {
    return push(fedni::add(value(a), value(b)), [a, b, out = Ref{nodes_.size()}](Tape& t) {
        t.grad_mut(a) = fedni::add(t.grad(a), t.grad(out));
        t.grad_mut(b) = fedni::add(t.grad(b), t.grad(out));
    });
}

Tape::Ref Tape::sub(Ref a, Ref b) {
    return push(fedni::sub(value(a), value(b)), [a, b, out = Ref{nodes_.size()}](Tape& t) {
        t.grad_mut(a) = fedni::add(t.grad(a), t.grad(out));
        t.grad_mut(b) = fedni::sub(t.grad(b), t.grad(out));
    });
}

Tape::Ref Tape::mul(Ref a, Ref b) {
    return push(fedni::hadamard(value(a), value(b)), [a, b, out = Ref{nodes_.size()}](Tape& t) {
        t.grad_mut(a) = fedni::add(t.grad(a), fedni::hadamard(t.grad(out), t.value(b)));
        t.grad_mut(b) = fedni::add(t.grad(b), fedni::hadamard(t.grad(out), t.value(a)));
    });
}

Tape::Ref Tape::mul_const(Ref a, Matrix weights) {
    Matrix y = fedni::hadamard(value(a), weights);
    return push(std::move(y), [a, w = std::move(weights), out = Ref{nodes_.size()}](Tape& t) {
        t.grad_mut(a) = fedni::add(t.grad(a), fedni::hadamard(t.grad(out), w));
    });
}

Tape::Ref Tape::add_row(Ref a, Ref row_bias) {
    return push(add_row_broadcast(value(a), value(row_bias)),
                [a, row_bias, out = Ref{nodes_.size()}](Tape& t) {
                    const Matrix& g = t.grad(out);
                    t.grad_mut(a) = fedni::add(t.grad(a), g);
                    Matrix& gb = t.grad_mut(row_bias);
                    for (std::size_t i = 0; i < g.rows(); ++i)
                        for (std::size_t j = 0; j < g.cols(); ++j)
                            gb(0, j) += g(i, j);
                });
}

Tape::Ref Tape::affine(Ref a, double s, double t0) {
    Matrix y = value(a);
    for (auto& v : y.raw()) v = s * v + t0;
    return push(std::move(y), [a, s, out = Ref{nodes_.size()}](Tape& t) {
        t.grad_mut(a) = fedni::add(t.grad(a), fedni::scale(t.grad(out), s));
    });
}

Tape::Ref Tape::activation(Ref a, Act act) {
    Matrix y = apply_activation(value(a), act);
    return push(std::move(y), [a, act, out = Ref{nodes_.size()}](Tape& t) {
        const Matrix& x = t.value(a);
        const Matrix& y = t.value(out);
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            ga.raw()[i] += g.raw()[i] * act_bwd(x.raw()[i], y.raw()[i], act);
    });
}

Tape::Ref Tape::log(Ref a) {
    Matrix y = value(a);
    for (auto& v : y.raw()) v = std::log(v);
    return push(std::move(y), [a, out = Ref{nodes_.size()}](Tape& t) {
        const Matrix& x = t.value(a);
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga.raw()[i] += g.raw()[i] / x.raw()[i];
    });
}

Tape::Ref Tape::square(Ref a) {
    Matrix y = value(a);
    for (auto& v : y.raw()) v = v * v;
    return push(std::move(y), [a, out = Ref{nodes_.size()}](Tape& t) {
        const Matrix& x = t.value(a);
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga.raw()[i] += 2.0 * g.raw()[i] * x.raw()[i];
    });
}

Tape::Ref Tape::clip(Ref a, double lo, double hi) {
    Matrix y = value(a);
    for (auto& v : y.raw()) v = v < lo ? lo : (v > hi ? hi : v);
    return push(std::move(y), [a, lo, hi, out = Ref{nodes_.size()}](Tape& t) {
        const Matrix& x = t.value(a);
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (x.raw()[i] > lo && x.raw()[i] < hi) ga.raw()[i] += g.raw()[i];
    });
}

Tape::Ref Tape::sum(Ref a) {
    Matrix y(1, 1, sum_all(value(a)));
    return push(std::move(y), [a, out = Ref{nodes_.size()}](Tape& t) {
        const double g = t.grad(out)(0, 0);
        Matrix& ga = t.grad_mut(a);
        for (auto& v : ga.raw()) v += g;
    });
}

Tape::Ref Tape::mean(Ref a) {
    const std::size_t n = value(a).size();
    Matrix y(1, 1, n == 0 ? 0.0 : sum_all(value(a)) / double(n));
    return push(std::move(y), [a, n, out = Ref{nodes_.size()}](Tape& t) {
        if (n == 0) return;
        const double g = t.grad(out)(0, 0) / double(n);
        Matrix& ga = t.grad_mut(a);
        for (auto& v : ga.raw()) v += g;
    });
}

Tape::Ref Tape::concat_cols(Ref a, Ref b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (va.rows() != vb.rows()) throw dimension_error("concat_cols: row mismatch");
    Matrix y(va.rows(), va.cols() + vb.cols());
    for (std::size_t i = 0; i < va.rows(); ++i) {
        for (std::size_t j = 0; j < va.cols(); ++j) y(i, j) = va(i, j);
        for (std::size_t j = 0; j < vb.cols(); ++j) y(i, va.cols() + j) = vb(i, j);
    }
    return push(std::move(y), [a, b, ca = va.cols(), out = Ref{nodes_.size()}](Tape& t) {
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        Matrix& gb = t.grad_mut(b);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(i, j);
            for (std::size_t j = 0; j < gb.cols(); ++j) gb(i, j) += g(i, ca + j);
        }
    });
}

Tape::Ref Tape::slice_cols(Ref a, std::size_t c0, std::size_t c1) {
    const Matrix& va = value(a);
    if (c1 > va.cols() || c0 >= c1) throw dimension_error("slice_cols: bad range");
    Matrix y(va.rows(), c1 - c0);
    for (std::size_t i = 0; i < va.rows(); ++i)
        for (std::size_t j = c0; j < c1; ++j) y(i, j - c0) = va(i, j);
    return push(std::move(y), [a, c0, out = Ref{nodes_.size()}](Tape& t) {
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga(i, c0 + j) += g(i, j);
    });
}

Tape::Ref Tape::gather_rows(Ref a, std::vector<std::size_t> idx) {
    const Matrix& va = value(a);
    Matrix y(idx.size(), va.cols());
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < va.cols(); ++j) y(r, j) = va(idx[r], j);
    return push(std::move(y), [a, idx = std::move(idx), out = Ref{nodes_.size()}](Tape& t) {
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t j = 0; j < g.cols(); ++j) ga(idx[r], j) += g(r, j);
    });
}

Tape::Ref Tape::softmax_rows(Ref a) {
    const Matrix& x = value(a);
    Matrix y(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mx = -1e300;
        for (std::size_t j = 0; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) z += std::exp(x(i, j) - mx);
        for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) = std::exp(x(i, j) - mx) / z;
    }
    return push(std::move(y), [a, out = Ref{nodes_.size()}](Tape& t) {
        const Matrix& y = t.value(out);
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < y.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < y.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
        }
    });
}

Tape::Ref Tape::batch_norm(Ref x, Ref gamma, Ref beta, BatchNormState& state, bool training) {
    const Matrix& vx = value(x);
    const std::size_t n = vx.rows(), d = vx.cols();
    if (state.running_mean.cols() != d)
        throw dimension_error("batch_norm: stats dim " + std::to_string(state.running_mean.cols()) +
                              " vs features " + std::to_string(d));
    constexpr double kEps = 1e-5;
    constexpr double kMomentum = 0.1;

    const bool use_batch_stats = training && n > 1;
    if (training && n == 1) state.size_one_fallback = true;

    Matrix mu, var;
    if (use_batch_stats) {
        mu = col_means(vx);
        var = col_vars(vx, mu, /*unbiased=*/false);
        // running stats track the unbiased variance
        Matrix var_unbiased = col_vars(vx, mu, /*unbiased=*/true);
        for (std::size_t j = 0; j < d; ++j) {
            state.running_mean(0, j) = (1.0 - kMomentum) * state.running_mean(0, j) + kMomentum * mu(0, j);
            state.running_var(0, j) = (1.0 - kMomentum) * state.running_var(0, j) + kMomentum * var_unbiased(0, j);
        }
    } else {
        mu = state.running_mean;
        var = state.running_var;
    }

    Matrix inv_std(1, d);
    for (std::size_t j = 0; j < d; ++j) inv_std(0, j) = 1.0 / std::sqrt(var(0, j) + kEps);

    Matrix xhat(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            xhat(i, j) = (vx(i, j) - mu(0, j)) * inv_std(0, j);

    const Matrix& g0 = value(gamma);
    const Matrix& b0 = value(beta);
    Matrix y(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            y(i, j) = g0(0, j) * xhat(i, j) + b0(0, j);

    return push(std::move(y), [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std),
                               use_batch_stats, n, d, out = Ref{nodes_.size()}](Tape& t) {
        const Matrix& g = t.grad(out);
        const Matrix& gval = t.value(gamma);
        Matrix& gx = t.grad_mut(x);
        Matrix& gg = t.grad_mut(gamma);
        Matrix& gb = t.grad_mut(beta);

        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                gg(0, j) += g(i, j) * xhat(i, j);
                gb(0, j) += g(i, j);
            }

        if (!use_batch_stats) {
            // stats are constants here
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    gx(i, j) += g(i, j) * gval(0, j) * inv_std(0, j);
            return;
        }

        // standard batch-norm backward through batch mean/variance
        for (std::size_t j = 0; j < d; ++j) {
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dxhat = g(i, j) * gval(0, j);
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xhat(i, j);
            }
            const double inv_n = 1.0 / double(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double dxhat = g(i, j) * gval(0, j);
                gx(i, j) += inv_std(0, j) * (dxhat - inv_n * sum_dxhat - inv_n * xhat(i, j) * sum_dxhat_xhat);
            }
        }
    });
}

void Tape::backward(Ref root) {
    if (!root.valid() || root.id >= nodes_.size()) throw dimension_error("backward: invalid root");
    if (nodes_[root.id].value.size() != 1) throw dimension_error("backward: root must be 1x1");
    for (std::size_t id : param_nodes_) nodes_[id].bound->zero_grad();
    for (auto& n : nodes_) n.grad.fill(0.0);
    nodes_[root.id].grad(0, 0) = 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
        if (nodes_[i].pull) nodes_[i].pull(*this);
    }
    for (std::size_t id : param_nodes_) {
        ParamTensor* p = nodes_[id].bound;
        p->grad = fedni::add(p->grad, nodes_[id].grad);
    }
}

void adam_step(const std::vector<ParamTensor*>& params, double lr) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    for (ParamTensor* p : params) {
        p->step_count += 1;
        const double bc1 = 1.0 - std::pow(kBeta1, double(p->step_count));
        const double bc2 = 1.0 - std::pow(kBeta2, double(p->step_count));
        for (std::size_t i = 0; i < p->numel(); ++i) {
            const double g = p->grad.raw()[i];
            double& m = p->adam_m.raw()[i];
            double& v = p->adam_v.raw()[i];
            m = kBeta1 * m + (1.0 - kBeta1) * g;
            v = kBeta2 * v + (1.0 - kBeta2) * g * g;
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            p->value.raw()[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
        }
        require_finite(p->value, "adam_step(" + p->name + ")");
    }
}

} // namespace fedni
