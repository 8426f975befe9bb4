#include <doctest.h>

#include <cmath>

#include "wastenet/loss.hpp"
#include "wastenet/rng.hpp"

using namespace wastenet;

TEST_CASE("cross entropy values") {
    // certain correct prediction
    const Tensor sure(Shape{1, 2}, {1000.0, -1000.0});
    const Tensor t0(Shape{1, 2}, {1.0, 0.0});
    CHECK(cross_entropy(sure, t0).value < 1e-12);

    // logits [0,0], target class 0 -> ln 2
    const Tensor even(Shape{1, 2}, {0.0, 0.0});
    CHECK(cross_entropy(even, t0).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(cross_entropy(even, Tensor(Shape{1, 2}, {0.5, 0.5})), ValueError);
    CHECK_THROWS_AS(cross_entropy(even, Tensor(Shape{1, 2}, {1.0, 1.0})), ValueError);
}

TEST_CASE("cross entropy fused gradient matches finite differences") {
    Rng rng(10);
    Tensor logits(Shape{4, 3});
    for (std::int64_t i = 0; i < logits.size(); ++i) logits[i] = 4.0 * rng.next_double() - 2.0;
    Tensor target(Shape{4, 3});
    for (int r = 0; r < 4; ++r) target.at(r, static_cast<int>(rng.next_below(3))) = 1.0;

    const LossValue loss = cross_entropy(logits, target);
    const double err = grad_check(
        [&](const Tensor& z) { return cross_entropy(z, target).value; }, logits, loss.grad);
    CHECK(err < 1e-6);
}

TEST_CASE("binary cross entropy values and stability") {
    const Tensor z0(Shape{1, 1}, {0.0});
    const Tensor t1(Shape{1, 1}, {1.0});
    CHECK(binary_cross_entropy(z0, t1).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    const Tensor big(Shape{1, 1}, {1000.0});
    const LossValue sat = binary_cross_entropy(big, t1);
    CHECK(sat.value < 1e-12);
    CHECK(std::isfinite(sat.value));
    const LossValue wrong = binary_cross_entropy(Tensor(Shape{1, 1}, {-1000.0}), t1);
    CHECK(std::isfinite(wrong.value));
    CHECK(wrong.value > 100.0);

    CHECK_THROWS_AS(binary_cross_entropy(z0, Tensor(Shape{1, 1}, {0.5})), ValueError);
}

TEST_CASE("binary and categorical cross entropy agree on [z, 0] logits") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const double z = 8.0 * rng.next_double() - 4.0;
        const double t = static_cast<double>(rng.next_below(2));
        const LossValue bce =
            binary_cross_entropy(Tensor(Shape{1, 1}, {z}), Tensor(Shape{1, 1}, {t}));

        // class-1 logit z, class-0 logit 0; one-hot of t
        const Tensor logits(Shape{1, 2}, {0.0, z});
        const Tensor onehot(Shape{1, 2}, {1.0 - t, t});
        const LossValue ce = cross_entropy(logits, onehot);
        CHECK(std::abs(bce.value - ce.value) < 1e-10);
        // the BCE logit gradient equals the class-1 CE logit gradient
        CHECK(std::abs(bce.grad[0] - ce.grad[1]) < 1e-10);
    }
}

TEST_CASE("loss non-negativity") {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor logits(Shape{3, 4});
        for (std::int64_t i = 0; i < logits.size(); ++i)
            logits[i] = 20.0 * rng.next_double() - 10.0;
        Tensor target(Shape{3, 4});
        for (int r = 0; r < 3; ++r) target.at(r, static_cast<int>(rng.next_below(4))) = 1.0;
        CHECK(cross_entropy(logits, target).value >= 0.0);

        Tensor z(Shape{3, 1});
        Tensor t(Shape{3, 1});
        for (int r = 0; r < 3; ++r) {
            z[r] = 20.0 * rng.next_double() - 10.0;
            t[r] = static_cast<double>(rng.next_below(2));
        }
        CHECK(binary_cross_entropy(z, t).value >= 0.0);
    }
}

TEST_CASE("sgd step") {
    Tensor p(Shape{1}, {1.0});
    Tensor g(Shape{1}, {1.0});
    std::vector<ParamRef> params{{"p", &p, &g}};

    OptimizerState plain(0.1, 0.0);
    sgd_step(params, plain);
    CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-15));

    // zero gradient is a bitwise fixed point
    Tensor q(Shape{3}, {0.1, -0.2, 0.3});
    Tensor zg(Shape{3}, 0.0);
    std::vector<ParamRef> qparams{{"q", &q, &zg}};
    OptimizerState opt2(0.5, 0.0);
    sgd_step(qparams, opt2);
    CHECK(q[0] == 0.1);
    CHECK(q[1] == -0.2);
    CHECK(q[2] == 0.3);

    // hand iteration with momentum 0.9: 1 -> 0.9 -> 0.71
    Tensor m(Shape{1}, {1.0});
    Tensor mg(Shape{1}, {1.0});
    std::vector<ParamRef> mparams{{"m", &m, &mg}};
    OptimizerState mom(0.1, 0.9);
    sgd_step(mparams, mom);
    CHECK(m[0] == doctest::Approx(0.9).epsilon(1e-15));
    sgd_step(mparams, mom);
    CHECK(m[0] == doctest::Approx(0.71).epsilon(1e-15));
}

TEST_CASE("sgd aborts on non-finite gradients naming the parameter") {
    Tensor p(Shape{1}, {1.0});
    Tensor g(Shape{1}, {std::numeric_limits<double>::quiet_NaN()});
    std::vector<ParamRef> params{{"conv1.weight", &p, &g}};
    OptimizerState opt(0.1, 0.0);
    CHECK_THROWS_WITH_AS(sgd_step(params, opt),
                         "divergence: non-finite gradient for parameter conv1.weight",
                         DivergenceError);
}

TEST_CASE("sgd on a quadratic converges monotonically for lr < 2") {
    for (double lr : {0.1, 0.5, 1.0, 1.9}) {
        Tensor p(Shape{1}, {1.0});
        Tensor g(Shape{1});
        std::vector<ParamRef> params{{"p", &p, &g}};
        OptimizerState opt(lr, 0.0);
        double prev = std::abs(p[0]);
        for (int step = 0; step < 50; ++step) {
            g[0] = p[0];  // d/dp of p^2/2
            sgd_step(params, opt);
            CHECK(std::abs(p[0]) <= prev + 1e-15);
            prev = std::abs(p[0]);
        }
        CHECK(std::abs(p[0]) < 1.0);
    }
}

TEST_CASE("grad_check calibration") {
    // quadratic: exact for central differences up to roundoff
    Tensor x(Shape{4}, {0.3, -0.7, 1.2, 0.05});
    Tensor analytic(Shape{4});
    for (int i = 0; i < 4; ++i) analytic[i] = 2.0 * x[i];
    const auto sum_sq = [](const Tensor& t) {
        double s = 0.0;
        for (std::int64_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
        return s;
    };
    CHECK(grad_check(sum_sq, x, analytic) < 1e-9);

    // linear: exact on central differences
    Tensor lin_grad(Shape{4}, {1.5, -2.0, 0.25, 3.0});
    const auto linear = [&](const Tensor& t) {
        double s = 0.0;
        for (std::int64_t i = 0; i < t.size(); ++i) s += lin_grad[i] * t[i];
        return s;
    };
    CHECK(grad_check(linear, x, lin_grad) < 1e-9);
}
