#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "tcco/checkpoint.hpp"
#include "tcco/grad_check.hpp"
#include "tcco/layers.hpp"
#include "tcco/rng.hpp"
#include "tcco/tensor.hpp"

using namespace tcco;
using namespace tcco::nn;

namespace {

Tensor random_tensor(int r, int c, Rng& rng, double scale = 1.0) {
    Tensor t(r, c);
    for (double& x : t.v) x = rng.normal() * scale;
    return t;
}

void fill_random(Param& p, Rng& rng, double scale = 1.0) {
    for (double& x : p.value.v) x = rng.normal() * scale;
}

}  // namespace

TEST_CASE("matmul forward basics") {
    Tensor eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    Tensor x(2, 2, {5, 6, 7, 8});
    const Tensor r = matmul(eye, x);
    CHECK(r.v == x.v);

    Tensor a(2, 2, {1, 2, 3, 4});
    Tensor b(2, 1, {1, 1});
    const Tensor c = matmul(a, b);
    CHECK(c(0, 0) == 3);
    CHECK(c(1, 0) == 7);
}

TEST_CASE("matmul gradient matches finite differences") {
    Rng rng(1);
    Param a("a", 4, 4), b("b", 4, 4);
    fill_random(a, rng);
    fill_random(b, rng);
    const Tensor weight = random_tensor(4, 4, rng);

    auto forward = [&] {
        Tape t;
        Tape::Var c = t.matmul(t.param(a), t.param(b));
        Tape::Var w = t.input(weight);
        return t.value(t.sum_all(t.hadamard(c, w)))(0, 0);
    };
    a.zero_grad();
    b.zero_grad();
    {
        Tape t;
        Tape::Var c = t.matmul(t.param(a), t.param(b));
        Tape::Var w = t.input(weight);
        t.backward(t.sum_all(t.hadamard(c, w)));
    }
    Param* params[] = {&a, &b};
    const auto res = check_gradients(forward, params);
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("softmax behavior") {
    Tape t;
    SUBCASE("symmetry") {
        Tape::Var y = t.softmax_rows(t.input(Tensor(1, 2, {0, 0})));
        CHECK(t.value(y)(0, 0) == doctest::Approx(0.5));
    }
    SUBCASE("no overflow on large logits") {
        Tape::Var y = t.softmax_rows(t.input(Tensor(1, 2, {1000, 0})));
        CHECK(t.value(y)(0, 0) == doctest::Approx(1.0));
        CHECK(t.value(y)(0, 1) == doctest::Approx(0.0));
    }
    SUBCASE("rows sum to one") {
        Rng rng(3);
        Tape::Var y = t.softmax_rows(t.input(random_tensor(8, 16, rng, 5.0)));
        for (int i = 0; i < 8; ++i) {
            double s = 0.0;
            for (int j = 0; j < 16; ++j) s += t.value(y)(i, j);
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("softmax jacobian matches finite differences") {
    Rng rng(4);
    Param x("x", 3, 5);
    fill_random(x, rng);
    const Tensor weight = random_tensor(3, 5, rng);
    auto forward = [&] {
        Tape t;
        Tape::Var y = t.softmax_rows(t.param(x));
        return t.value(t.sum_all(t.hadamard(y, t.input(weight))))(0, 0);
    };
    x.zero_grad();
    {
        Tape t;
        Tape::Var y = t.softmax_rows(t.param(x));
        t.backward(t.sum_all(t.hadamard(y, t.input(weight))));
    }
    Param* params[] = {&x};
    CHECK(check_gradients(forward, params).max_rel_err < 1e-6);
}

TEST_CASE("layer norm forward") {
    Tape t;
    Param g("g", 1, 4), b("b", 1, 4);
    g.value.fill(1.0);
    b.value = Tensor(1, 4, {1, 2, 3, 4});
    SUBCASE("constant vector maps to the bias") {
        Tape::Var y = t.layer_norm_rows(t.input(Tensor(1, 4, {7, 7, 7, 7})),
                                        t.param(g), t.param(b));
        for (int j = 0; j < 4; ++j) CHECK(t.value(y)(0, j) == doctest::Approx(b.value(0, j)));
    }
    SUBCASE("standardizes mean and variance") {
        b.value.fill(0.0);
        Tape::Var y = t.layer_norm_rows(t.input(Tensor(1, 4, {1, 2, 3, 4})),
                                        t.param(g), t.param(b));
        double mean = 0.0, var = 0.0;
        for (int j = 0; j < 4; ++j) mean += t.value(y)(0, j);
        mean /= 4;
        for (int j = 0; j < 4; ++j) {
            const double d = t.value(y)(0, j) - mean;
            var += d * d;
        }
        var /= 4;
        CHECK(std::abs(mean) < 1e-12);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("layer norm gradient matches finite differences") {
    Rng rng(5);
    Param x("x", 4, 6), g("g", 1, 6), b("b", 1, 6);
    fill_random(x, rng);
    fill_random(g, rng, 0.5);
    for (double& v : g.value.v) v += 1.0;
    fill_random(b, rng, 0.2);
    const Tensor weight = random_tensor(4, 6, rng);
    auto forward = [&] {
        Tape t;
        Tape::Var y = t.layer_norm_rows(t.param(x), t.param(g), t.param(b));
        return t.value(t.sum_all(t.hadamard(y, t.input(weight))))(0, 0);
    };
    x.zero_grad();
    g.zero_grad();
    b.zero_grad();
    {
        Tape t;
        Tape::Var y = t.layer_norm_rows(t.param(x), t.param(g), t.param(b));
        t.backward(t.sum_all(t.hadamard(y, t.input(weight))));
    }
    Param* params[] = {&x, &g, &b};
    CHECK(check_gradients(forward, params).max_rel_err < 1e-6);
}

TEST_CASE("attention degenerate cases") {
    Rng rng(6);
    SUBCASE("single position returns V") {
        Tape t;
        Tensor q = random_tensor(1, 4, rng), k = random_tensor(1, 4, rng);
        Tensor v = random_tensor(1, 4, rng);
        Tape::Var y = scaled_dot_attention(t, t.input(q), t.input(k), t.input(v),
                                           t.input(causal_mask(1)));
        for (int j = 0; j < 4; ++j) CHECK(t.value(y)(0, j) == doctest::Approx(v(0, j)));
    }
    SUBCASE("identical V rows make identical outputs") {
        Tape t;
        Tensor q = random_tensor(3, 4, rng), k = random_tensor(3, 4, rng);
        Tensor v(3, 4);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) v(i, j) = static_cast<double>(j) + 1.0;
        Tape::Var y = scaled_dot_attention(t, t.input(q), t.input(k), t.input(v),
                                           t.input(causal_mask(3)));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) CHECK(t.value(y)(i, j) == doctest::Approx(v(0, j)));
    }
    SUBCASE("causal mask blocks the future") {
        Tape t;
        Tensor q = random_tensor(3, 4, rng), k = random_tensor(3, 4, rng);
        Tensor v1 = random_tensor(3, 4, rng);
        Tensor v2 = v1;
        v2(2, 0) += 100.0;  // only the last position differs
        Tape::Var y1 = scaled_dot_attention(t, t.input(q), t.input(k), t.input(v1),
                                            t.input(causal_mask(3)));
        Tape::Var y2 = scaled_dot_attention(t, t.input(q), t.input(k), t.input(v2),
                                            t.input(causal_mask(3)));
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 4; ++j)
                CHECK(t.value(y1)(i, j) == doctest::Approx(t.value(y2)(i, j)));
    }
}

TEST_CASE("attention gradient matches finite differences") {
    Rng rng(7);
    Param q("q", 3, 4), k("k", 3, 4), v("v", 3, 4);
    fill_random(q, rng);
    fill_random(k, rng);
    fill_random(v, rng);
    const Tensor weight = random_tensor(3, 4, rng);
    auto forward = [&] {
        Tape t;
        Tape::Var y = scaled_dot_attention(t, t.param(q), t.param(k), t.param(v),
                                           t.input(causal_mask(3)));
        return t.value(t.sum_all(t.hadamard(y, t.input(weight))))(0, 0);
    };
    q.zero_grad();
    k.zero_grad();
    v.zero_grad();
    {
        Tape t;
        Tape::Var y = scaled_dot_attention(t, t.param(q), t.param(k), t.param(v),
                                           t.input(causal_mask(3)));
        t.backward(t.sum_all(t.hadamard(y, t.input(weight))));
    }
    Param* params[] = {&q, &k, &v};
    CHECK(check_gradients(forward, params).max_rel_err < 1e-5);
}

TEST_CASE("structural ops propagate gradients") {
    Rng rng(8);
    Param x("x", 4, 6);
    fill_random(x, rng);
    const Tensor weight = random_tensor(8, 3, rng);
    auto graph = [&](Tape& t) {
        Tape::Var xv = t.param(x);
        Tape::Var top = t.block(xv, 0, 0, 2, 3);
        Tape::Var bot = t.block(xv, 2, 3, 2, 3);
        std::vector<Tape::Var> parts = {top, bot};
        Tape::Var stacked = t.vstack(parts);           // [4,3]
        Tape::Var tiled = t.tile_rows(stacked, 2);     // [8,3]
        Tape::Var y = t.relu(tiled);
        return t.sum_all(t.hadamard(y, t.input(weight)));
    };
    auto forward = [&] {
        Tape t;
        return t.value(graph(t))(0, 0);
    };
    x.zero_grad();
    {
        Tape t;
        t.backward(graph(t));
    }
    Param* params[] = {&x};
    CHECK(check_gradients(forward, params).max_rel_err < 1e-6);
}

TEST_CASE("select_per_row gradient") {
    Rng rng(9);
    Param x("x", 5, 4);
    fill_random(x, rng);
    const std::vector<int> idx = {0, 3, 1, 1, 2};
    auto forward = [&] {
        Tape t;
        return t.value(t.sum_all(t.select_per_row(t.param(x), idx)))(0, 0);
    };
    x.zero_grad();
    {
        Tape t;
        t.backward(t.sum_all(t.select_per_row(t.param(x), idx)));
    }
    Param* params[] = {&x};
    CHECK(check_gradients(forward, params).max_rel_err < 1e-8);
}

TEST_CASE("linear objective gradients are exact") {
    Param x("x", 3, 3);
    x.value.fill(2.0);
    auto forward = [&] {
        Tape t;
        return t.value(t.sum_all(t.scale(t.param(x), 3.0)))(0, 0);
    };
    x.zero_grad();
    {
        Tape t;
        t.backward(t.sum_all(t.scale(t.param(x), 3.0)));
    }
    Param* params[] = {&x};
    const auto res = check_gradients(forward, params);
    CHECK(res.max_rel_err < 1e-9);
}

TEST_CASE("grad check flags a corrupted gradient") {
    Rng rng(10);
    Param x("x", 3, 3);
    fill_random(x, rng);
    auto forward = [&] {
        Tape t;
        Tape::Var y = t.relu(t.param(x));
        return t.value(t.sum_all(t.hadamard(y, y)))(0, 0);
    };
    x.zero_grad();
    {
        Tape t;
        Tape::Var y = t.relu(t.param(x));
        t.backward(t.sum_all(t.hadamard(y, y)));
    }
    x.grad.v[4] += 0.5;  // sabotage
    Param* params[] = {&x};
    CHECK(check_gradients(forward, params).max_rel_err > 1e-2);
}

TEST_CASE("forward passes are deterministic") {
    Rng rng(11);
    const Tensor a = random_tensor(16, 16, rng);
    const Tensor b = random_tensor(16, 16, rng);
    const Tensor c1 = matmul(a, b);
    const Tensor c2 = matmul(a, b);
    CHECK(c1.v == c2.v);
}

TEST_CASE("adam moves parameters against the gradient") {
    Param x("x", 1, 2);
    x.value = Tensor(1, 2, {1.0, -1.0});
    x.grad = Tensor(1, 2, {0.5, -0.5});
    std::vector<Param*> params = {&x};
    Adam opt;
    opt.step(params, 1e-2);
    CHECK(x.value(0, 0) < 1.0);
    CHECK(x.value(0, 1) > -1.0);
}

TEST_CASE("checkpoint round trip") {
    Rng rng(12);
    Param a("enc.w", 3, 4), b("head.b", 1, 5);
    fill_random(a, rng);
    fill_random(b, rng);
    const std::string path = "ckpt_test.bin";
    {
        Param* params[] = {&a, &b};
        save_checkpoint(path, params);
    }
    Param a2("enc.w", 3, 4), b2("head.b", 1, 5);
    {
        Param* params[] = {&a2, &b2};
        load_checkpoint(path, params);
    }
    CHECK(a2.value.v == a.value.v);
    CHECK(b2.value.v == b.value.v);

    Param wrong("enc.w", 4, 3);
    Param* bad[] = {&wrong};
    CHECK_THROWS(load_checkpoint(path, bad));
    Param missing("nope", 3, 4);
    Param* bad2[] = {&missing};
    CHECK_THROWS(load_checkpoint(path, bad2));
    std::remove(path.c_str());
}
