#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fedni/errors.hpp"
#include "fedni/graphcons.hpp"
#include "fedni/layers.hpp"
#include "fedni/matrix.hpp"
#include "fedni/rng.hpp"
#include "fedni/tape.hpp"
#include "oracles.hpp"

using namespace fedni;
using namespace fedni::testing;

TEST_CASE("matmul small hand case and shape errors") {
    Matrix a(2, 3);
    a(0, 0) = 1; a(0, 1) = 2; a(0, 2) = 3;
    a(1, 0) = 4; a(1, 1) = 5; a(1, 2) = 6;
    Matrix b(3, 2);
    b(0, 0) = 7; b(0, 1) = 8;
    b(1, 0) = 9; b(1, 1) = 10;
    b(2, 0) = 11; b(2, 1) = 12;
    Matrix c = matmul(a, b);
    CHECK(c(0, 0) == doctest::Approx(58));
    CHECK(c(1, 1) == doctest::Approx(154));
    CHECK_THROWS_AS(matmul(b, a.transpose()), dimension_error);
}

TEST_CASE("gcn_layer_forward: two-node hand case") {
    // A with self-loops = all ones, D = diag(2,2), Z = I, W = I, identity act
    Matrix a(2, 2, 1.0);
    Matrix a_norm = normalized_adjacency(a);
    Tape t;
    ParamTensor w("w", Matrix::identity(2));
    Tape::Ref out = gcn_layer_forward(t, t.constant(Matrix::identity(2)), t.constant(a_norm), w,
                                      Act::identity);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(t.value(out)(i, j) == doctest::Approx(0.5));
}

TEST_CASE("gcn_layer_forward: zero input stays zero through relu") {
    Rng rng(3);
    Matrix a(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) a(i, j) = (i == j) ? 1.0 : 0.5;
    Matrix a_norm = normalized_adjacency(a);
    ParamTensor w("w", glorot_uniform(3, 2, rng));
    Tape t;
    Tape::Ref out = gcn_layer_forward(t, t.constant(Matrix(4, 3)), t.constant(a_norm), w, Act::relu);
    for (double v : t.value(out).raw()) CHECK(v == 0.0);
}

TEST_CASE("gcn_layer_forward: gradient of sum(output) wrt W matches finite differences") {
    Rng rng(17);
    PopulationGraph g = small_random_population(6, 3, 99);
    ParamTensor w("w", glorot_uniform(3, 2, rng));
    auto eval = [&]() {
        Tape t;
        Tape::Ref out = gcn_layer_forward(t, t.constant(g.X), t.constant(g.a_norm), w, Act::elu);
        return t.value(t.sum(out))(0, 0);
    };
    Tape t;
    Tape::Ref out = gcn_layer_forward(t, t.constant(g.X), t.constant(g.a_norm), w, Act::elu);
    Tape::Ref loss = t.sum(out);
    t.backward(loss);
    auto analytic = snapshot_grads({&w});
    FdReport rep = fd_check_params(eval, {&w}, analytic);
    CHECK(rep.max_rel <= 1e-4);
}

TEST_CASE("gcn layer with identity A_norm equals plain linear plus activation") {
    Rng rng(5);
    Matrix z(4, 3);
    for (auto& v : z.raw()) v = rng.normal();
    ParamTensor w("w", glorot_uniform(3, 2, rng));
    Tape t;
    Tape::Ref gcn = gcn_layer_forward(t, t.constant(z), t.constant(Matrix::identity(4)), w, Act::tanh);
    Matrix plain = apply_activation(matmul(z, w.value), Act::tanh);
    CHECK(max_abs_diff(t.value(gcn), plain) < 1e-14);
}

TEST_CASE("tape: per-op gradients against finite differences") {
    Rng rng(11);
    ParamTensor p("p", glorot_uniform(3, 4, rng));
    for (auto& v : p.value.raw()) v += 0.75; // keep log/clip away from kinks

    auto check = [&](auto build) {
        auto eval = [&]() {
            Tape t;
            return t.value(build(t))(0, 0);
        };
        Tape t;
        Tape::Ref loss = build(t);
        t.backward(loss);
        auto analytic = snapshot_grads({&p});
        FdReport rep = fd_check_params(eval, {&p}, analytic);
        CHECK(rep.max_rel <= 1e-4);
    };

    check([&](Tape& t) { return t.sum(t.square(t.param(p))); });
    check([&](Tape& t) { return t.mean(t.log(t.param(p))); });
    check([&](Tape& t) { return t.sum(t.activation(t.param(p), Act::sigmoid)); });
    check([&](Tape& t) { return t.sum(t.activation(t.param(p), Act::elu)); });
    check([&](Tape& t) { return t.sum(t.activation(t.param(p), Act::tanh)); });
    check([&](Tape& t) { return t.sum(t.softmax_rows(t.param(p))); });
    check([&](Tape& t) { return t.sum(t.mul(t.param(p), t.param(p))); });
    check([&](Tape& t) { return t.sum(t.slice_cols(t.param(p), 1, 3)); });
    check([&](Tape& t) { return t.sum(t.gather_rows(t.param(p), {2, 0, 2})); });
    check([&](Tape& t) {
        Tape::Ref x = t.param(p);
        return t.sum(t.concat_cols(x, t.square(x)));
    });
    check([&](Tape& t) { return t.sum(t.clip(t.param(p), -0.2, 1.4)); });
}

TEST_CASE("batch norm: training statistics and shift behavior") {
    BatchNormLayer bn("bn", 3);

    SUBCASE("constant column maps to the learned shift") {
        bn.beta.value(0, 1) = 0.4;
        Matrix x(5, 3, 2.0);
        Tape t;
        Tape::Ref out = bn.forward(t, t.constant(x), /*training=*/true);
        for (std::size_t i = 0; i < 5; ++i) CHECK(t.value(out)(i, 1) == doctest::Approx(0.4));
    }

    SUBCASE("normalized output has zero mean and unit variance per column") {
        Rng rng(2);
        Matrix x(64, 3);
        for (auto& v : x.raw()) v = rng.normal(3.0, 2.5);
        Tape t;
        Tape::Ref out = bn.forward(t, t.constant(x), true);
        Matrix mu = col_means(t.value(out));
        Matrix var = col_vars(t.value(out), mu);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::abs(mu(0, j)) < 1e-4);
            CHECK(std::abs(var(0, j) - 1.0) < 1e-2); // eps shifts variance slightly
        }
    }

    SUBCASE("standardized input with fresh stats passes through in eval mode") {
        Rng rng(4);
        Matrix x(10, 3);
        for (auto& v : x.raw()) v = rng.normal();
        Tape t;
        Tape::Ref out = bn.forward(t, t.constant(x), /*training=*/false);
        // fresh running stats are mean 0 var 1, gamma 1 beta 0
        CHECK(max_abs_diff(t.value(out), x) < 1e-4);
    }

    SUBCASE("batch of one in training mode falls back to running stats and flags") {
        Matrix x(1, 3, 0.7);
        Tape t;
        bn.forward(t, t.constant(x), true);
        CHECK(bn.state.size_one_fallback);
    }

    SUBCASE("training-mode gradient matches finite differences") {
        Rng rng(6);
        ParamTensor p("x", glorot_uniform(6, 3, rng));
        auto eval = [&]() {
            BatchNormState saved = bn.state;
            Tape t;
            double v = t.value(t.sum(t.square(bn.forward(t, t.param(p), true))))(0, 0);
            bn.state = saved;
            return v;
        };
        BatchNormState saved = bn.state;
        Tape t;
        Tape::Ref loss = t.sum(t.square(bn.forward(t, t.param(p), true)));
        t.backward(loss);
        bn.state = saved;
        auto analytic = snapshot_grads({&p, &bn.gamma, &bn.beta});
        FdReport rep = fd_check_params(eval, {&p, &bn.gamma, &bn.beta}, analytic);
        CHECK(rep.max_rel <= 1e-4);
    }
}

TEST_CASE("adam: zero gradient is a fixed point") {
    ParamTensor p("p", Matrix(2, 2, 1.5));
    Matrix before = p.value;
    adam_step({&p}, 1e-3);
    CHECK(p.value == before);
}

TEST_CASE("adam: bias-corrected first step has magnitude ~lr") {
    ParamTensor p("p", Matrix(1, 1, 0.3));
    p.grad(0, 0) = 1.0;
    adam_step({&p}, 1e-3);
    CHECK(p.value(0, 0) == doctest::Approx(0.3 - 1e-3).epsilon(1e-6));
}

TEST_CASE("adam: descends w^2 from w=1 on every step") {
    ParamTensor p("p", Matrix(1, 1, 1.0));
    double prev = 1.0;
    for (int step = 0; step < 10; ++step) {
        Tape t;
        Tape::Ref loss = t.sum(t.square(t.param(p)));
        t.backward(loss);
        adam_step({&p}, 0.05);
        const double now = p.value(0, 0) * p.value(0, 0);
        CHECK(now < prev);
        prev = now;
    }
}

TEST_CASE("spectral normalize: diagonal matrix") {
    Rng rng(8);
    ParamTensor w("w", Matrix(2, 2));
    w.value(0, 0) = 3.0;
    w.value(1, 1) = 1.0;
    SpectralNorm sn;
    sn.init(2, rng);
    Matrix out = spectral_normalize(w, sn, 20);
    CHECK(out(0, 0) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(out(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("spectral normalize: already-unit matrix is unchanged") {
    Rng rng(9);
    ParamTensor w("w", Matrix::identity(3));
    SpectralNorm sn;
    sn.init(3, rng);
    Matrix out = spectral_normalize(w, sn, 20);
    CHECK(max_abs_diff(out, w.value) < 1e-3);
}

TEST_CASE("spectral normalize: random matrix reaches unit largest singular value") {
    Rng rng(10);
    ParamTensor w("w", glorot_uniform(5, 4, rng));
    for (auto& v : w.value.raw()) v *= 4.0;
    SpectralNorm sn;
    sn.init(4, rng);
    Matrix out = spectral_normalize(w, sn, 30);
    CHECK(brute_largest_singular_value(out) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("spectral normalize: zero matrix flags degenerate and stays put") {
    Rng rng(12);
    ParamTensor w("w", Matrix(3, 3));
    SpectralNorm sn;
    sn.init(3, rng);
    Matrix out = spectral_normalize(w, sn, 5);
    CHECK(sn.degenerate);
    CHECK(out == w.value);
}

TEST_CASE("spectral normalize: scale equivariance in the converged limit") {
    Rng rng(13);
    ParamTensor w("w", glorot_uniform(4, 3, rng));
    ParamTensor w2("w2", scale(w.value, 7.5));
    SpectralNorm sn1, sn2;
    sn1.init(3, rng);
    sn2.u = sn1.u;
    Matrix a = spectral_normalize(w, sn1, 25);
    Matrix b = spectral_normalize(w2, sn2, 25);
    CHECK(max_abs_diff(a, b) < 1e-3);
}

TEST_CASE("rng: derive is independent of parent consumption and normal moments are sane") {
    Rng a(123);
    Rng b(123);
    (void)b.normal();
    (void)b.next_u64();
    CHECK(a.derive("x").next_u64() == b.derive("x").next_u64());

    Rng c(55);
    double mean = 0, var = 0;
    const int n = 20000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = c.normal();
    for (double x : xs) mean += x;
    mean /= n;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= n - 1;
    CHECK(std::abs(mean) < 0.03);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("deterministic forward and no NaN on finite input") {
    Rng rng(21);
    PopulationGraph g = small_random_population(10, 5, 77);
    ParamTensor w("w", glorot_uniform(5, 4, rng));
    Tape t1, t2;
    Tape::Ref o1 = gcn_layer_forward(t1, t1.constant(g.X), t1.constant(g.a_norm), w, Act::elu);
    Tape::Ref o2 = gcn_layer_forward(t2, t2.constant(g.X), t2.constant(g.a_norm), w, Act::elu);
    CHECK(t1.value(o1) == t2.value(o2));
    CHECK(t1.value(o1).all_finite());
}
