#include <doctest.h>

#include <cmath>

#include "tsadv/grad_check.hpp"
#include "tsadv/ops.hpp"
#include "tsadv/rng.hpp"

using namespace tsadv;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, RngStream& rng, bool requires_grad = false,
                     double lo = -1.0, double hi = 1.0) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

// Checks one primitive's input gradient against central differences.
void check_grad(const std::function<Tensor(const Tensor&)>& op, const Tensor& x,
                double tol = 1e-6) {
    Tensor analytic;
    {
        Tape tape;
        Tensor probe = x.clone();
        probe.set_requires_grad(true);
        Tensor loss = sum(op(probe));
        analytic = tape.backward(loss).at(probe);
    }
    Tensor numeric =
        finite_difference_gradient([&](const Tensor& t) { return sum(op(t)).value(); }, x);
    CHECK(max_relative_error(analytic, numeric) < tol);
}

}  // namespace

TEST_CASE("primitive forward values") {
    CHECK(sigmoid(Tensor::scalar(0.0)).value() == doctest::Approx(0.5));
    CHECK(relu(Tensor::scalar(-3.2)).value() == 0.0);
    CHECK(mse(Tensor::row_vector({1, 2}), Tensor::row_vector({1, 2})).value() == 0.0);
    CHECK(tanh(Tensor::scalar(0.0)).value() == 0.0);

    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from_data({2, 2}, {5, 6, 7, 8});
    Tensor c = matmul(a, b);
    CHECK(c.at(0, 0) == 19.0);
    CHECK(c.at(0, 1) == 22.0);
    CHECK(c.at(1, 0) == 43.0);
    CHECK(c.at(1, 1) == 50.0);

    Tensor biased = add_bias(a, Tensor::from_data({2}, {10, 20}));
    CHECK(biased.at(0, 0) == 11.0);
    CHECK(biased.at(1, 1) == 24.0);

    CHECK(mean(Tensor::row_vector({1, 2, 3, 4})).value() == doctest::Approx(2.5));
    CHECK(sum(Tensor::row_vector({1, 2, 3, 4})).value() == 10.0);
}

TEST_CASE("shape mismatches name the operation and both shapes") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({2, 2});
    CHECK_THROWS_WITH_AS(add(a, b), "add: shape mismatch {2, 3} vs {2, 2}", Error);
    CHECK_THROWS_WITH_AS(matmul(a, a), "matmul: shape mismatch {2, 3} vs {2, 3}", Error);
    CHECK_THROWS_AS(mse(a, b), Error);
    CHECK_THROWS_AS(add_bias(a, Tensor::zeros({2})), Error);
}

TEST_CASE("backward: square sum and scalar mse examples") {
    Tensor x = Tensor::from_data({3}, {1, 2, 3}, true);
    {
        Tape tape;
        Tensor loss = sum(mul(x, x));
        Gradients g = tape.backward(loss);
        Tensor gx = g.at(x);
        CHECK(gx.at(0) == 2.0);
        CHECK(gx.at(1) == 4.0);
        CHECK(gx.at(2) == 6.0);
    }

    // loss = mse(w*x, y) at w=0, x=1, y=1 -> dJ/dw = -2
    Tensor w = Tensor::from_data({1, 1}, {0.0}, true);
    Tensor in = Tensor::from_data({1, 1}, {1.0});
    Tensor y = Tensor::from_data({1, 1}, {1.0});
    {
        Tape tape;
        Tensor loss = mse(matmul(in, w), y);
        Gradients g = tape.backward(loss);
        CHECK(g.at(w).value() == -2.0);
    }
}

TEST_CASE("backward error paths") {
    Tensor x = Tensor::from_data({2}, {1, 2}, true);
    {
        Tape tape;
        Tensor y = mul(x, x);  // not scalar
        CHECK_THROWS_AS(tape.backward(y), Error);
    }
    {
        Tape tape;
        Tensor loss = sum(mul(x, x));
        tape.backward(loss);
        CHECK(tape.consumed());
        CHECK_THROWS_AS(tape.backward(loss), Error);  // consumed
    }
    {
        Tape tape;
        CHECK_THROWS_AS(tape.backward(Tensor::scalar(1.0)), Error);  // empty tape
    }
}

TEST_CASE("tensors unreachable from the loss get zero gradients") {
    Tensor x = Tensor::from_data({2}, {1, 2}, true);
    Tensor unused = Tensor::from_data({2}, {5, 5}, true);
    Tape tape;
    Tensor side = mul(unused, unused);  // participates on the tape, not in the loss
    (void)side;
    Tensor loss = sum(mul(x, x));
    Gradients g = tape.backward(loss);
    Tensor gu = g.at(unused);
    CHECK(gu.at(0) == 0.0);
    CHECK(gu.at(1) == 0.0);
    CHECK(g.at(x).at(1) == 4.0);
}

TEST_CASE("only one active tape per thread") {
    Tape tape;
    CHECK_THROWS_AS(Tape{}, Error);
}

TEST_CASE("linearity of backward") {
    RngStream rng(7, "linearity");
    Tensor x = random_tensor({4}, rng, true);
    auto grad_of = [&](double a, double b) {
        Tape tape;
        Tensor f = sum(mul(x, x));
        Tensor g = sum(mul(x, sigmoid(x)));
        Tensor loss = add(scale(f, a), scale(g, b));
        return tape.backward(loss).at(x);
    };
    Tensor gf = grad_of(1.0, 0.0);
    Tensor gg = grad_of(0.0, 1.0);
    Tensor combined = grad_of(2.5, -1.25);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(combined.at(i) - (2.5 * gf.at(i) - 1.25 * gg.at(i))) < 1e-12);
}

TEST_CASE("every primitive agrees with central differences") {
    RngStream rng(11, "prim-grad");
    Tensor m23 = random_tensor({2, 3}, rng);
    Tensor m32 = random_tensor({3, 2}, rng);
    Tensor m23b = random_tensor({2, 3}, rng);
    Tensor bias = random_tensor({3}, rng);

    check_grad([&](const Tensor& t) { return matmul(t, m32); }, m23);
    check_grad([&](const Tensor& t) { return matmul(m23, t); }, m32.clone());
    check_grad([&](const Tensor& t) { return add(t, m23b); }, m23);
    check_grad([&](const Tensor& t) { return sub(t, m23b); }, m23);
    check_grad([&](const Tensor& t) { return sub(m23b, t); }, m23);
    check_grad([&](const Tensor& t) { return mul(t, m23b); }, m23);
    check_grad([&](const Tensor& t) { return add_bias(t, bias); }, m23);
    check_grad([&](const Tensor& t) { return add_bias(m23, t); }, bias.clone());
    check_grad([&](const Tensor& t) { return scale(t, -2.5); }, m23);
    check_grad([&](const Tensor& t) { return sigmoid(t); }, m23);
    check_grad([&](const Tensor& t) { return tanh(t); }, m23);
    check_grad([&](const Tensor& t) { return relu(t); }, m23);
    check_grad([&](const Tensor& t) { return row(t, 1); }, m23);
    check_grad([&](const Tensor& t) { return mean(t); }, m23);
    check_grad([&](const Tensor& t) { return mse(t, m23b); }, m23);
    check_grad([&](const Tensor& t) { return mse(m23b, t); }, m23);
    check_grad([&](const Tensor& t) { return concat(t, m23b, 0); }, m23);
    check_grad([&](const Tensor& t) { return concat(m23b, t, 1); }, m23);
}

TEST_CASE("finite difference oracle examples") {
    auto square = [](const Tensor& t) { return t.value() * t.value(); };
    CHECK(finite_difference_gradient(square, Tensor::scalar(3.0)).value() ==
          doctest::Approx(6.0).epsilon(1e-6));
    auto sig = [](const Tensor& t) { return sigmoid(t).value(); };
    CHECK(finite_difference_gradient(sig, Tensor::scalar(0.0)).value() ==
          doctest::Approx(0.25).epsilon(1e-6));
    CHECK_THROWS_AS(finite_difference_gradient(square, Tensor::scalar(1.0), 0.0), Error);
}

TEST_CASE("dropout semantics") {
    Tensor x = Tensor::full({1, 1000}, 1.0);
    RngStream rng(3, "dropout");
    Tensor y = dropout(x, 0.9, rng);
    std::size_t kept = 0;
    for (double v : y.data()) {
        const bool is_kept = std::abs(v - 1.0 / 0.9) < 1e-12;
        CHECK((is_kept || v == 0.0));
        kept += is_kept;
    }
    CHECK(kept > 850);
    CHECK(kept < 950);

    // keep probability 1 is the identity and consumes no randomness
    RngStream before(3, "dropout");
    RngStream after = before;
    Tensor z = dropout(x, 1.0, after);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(z.at(i) == x.at(i));
    CHECK(before.next_u64() == after.next_u64());

    CHECK_THROWS_AS(dropout(x, 0.0, rng), Error);
    CHECK_THROWS_AS(dropout(x, 1.5, rng), Error);

    // identical streams give identical masks
    RngStream r1(9, "mask");
    RngStream r2(9, "mask");
    Tensor m1 = dropout(x, 0.5, r1);
    Tensor m2 = dropout(x, 0.5, r2);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(m1.at(i) == m2.at(i));
}

TEST_CASE("concat layouts") {
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from_data({2, 2}, {5, 6, 7, 8});
    Tensor rows_stacked = concat(a, b, 0);
    CHECK(rows_stacked.shape() == std::vector<std::size_t>{4, 2});
    CHECK(rows_stacked.at(2, 0) == 5.0);
    Tensor cols_stacked = concat(a, b, 1);
    CHECK(cols_stacked.shape() == std::vector<std::size_t>{2, 4});
    CHECK(cols_stacked.at(0, 2) == 5.0);
    CHECK(cols_stacked.at(1, 3) == 8.0);
    Tensor flat = concat(Tensor::from_data({2}, {1, 2}), Tensor::from_data({1}, {3}), 0);
    CHECK(flat.shape() == std::vector<std::size_t>{3});
    CHECK_THROWS_AS(concat(a, Tensor::zeros({3, 3}), 0), Error);
}

TEST_CASE("forward and gradients are deterministic across repeated runs") {
    auto run_once = [](std::uint64_t seed) {
        RngStream rng(seed, "det");
        Tensor w = random_tensor({3, 3}, rng, true);
        Tensor x = random_tensor({1, 3}, rng);
        Tape tape;
        Tensor out = sigmoid(matmul(x, w));
        Tensor loss = mse(out, Tensor::full({1, 3}, 0.25));
        Gradients g = tape.backward(loss);
        std::vector<double> result(out.data().begin(), out.data().end());
        auto gw = g.at(w);
        result.insert(result.end(), gw.data().begin(), gw.data().end());
        return result;
    };
    auto a = run_once(42);
    auto b = run_once(42);
    CHECK(a == b);  // bitwise
    CHECK(run_once(43) != a);
}
