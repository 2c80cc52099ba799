#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fedhash/dataset.hpp"
#include "fedhash/model.hpp"
#include "fedhash/optim.hpp"
#include "fedhash/prng.hpp"

using namespace fedhash;

namespace {

struct Fixture {
    ModelSpec spec;
    ParameterSchema schema;
    IndexMaps maps;

    Fixture(ModelSpec s, Ratio gamma, uint64_t master_seed) : spec(s) {
        schema = build_schema(spec.layers(), gamma, master_seed);
        maps = build_index_maps(schema);
    }

    template <typename T>
    Params<T> zero_params() const {
        return Params<T>::zeros(schema);
    }

    template <typename T>
    Params<T> random_params(uint64_t seed, double scale = 0.5) const {
        Params<T> p = Params<T>::zeros(schema);
        Xoshiro256ss rng(seed);
        for (auto& layer : p.layers) {
            for (auto& v : layer) v = static_cast<T>((rng.next_double() * 2 - 1) * scale);
        }
        return p;
    }
};

template <typename T>
BatchT<T> random_batch(uint32_t n, uint32_t dim, uint32_t classes, uint64_t seed) {
    BatchT<T> b;
    b.batch_size = n;
    b.input_dim = dim;
    b.features.resize(size_t{n} * dim);
    b.labels.resize(n);
    Xoshiro256ss rng(seed);
    for (auto& v : b.features) v = static_cast<T>(rng.next_double());
    for (auto& y : b.labels) y = static_cast<uint32_t>(rng.bounded(classes));
    return b;
}

// Central finite differences on the real vector, 64-bit, step 1e-5.
double max_grad_rel_error(const Fixture& fx, const Params<double>& params,
                          const BatchT<double>& batch) {
    const auto analytic = forward_loss_grad(fx.spec, fx.schema, params, fx.maps, batch);
    const double h = 1e-5;
    double worst = 0.0;
    for (size_t l = 0; l < params.layers.size(); ++l) {
        for (size_t k = 0; k < params.layers[l].size(); ++k) {
            Params<double> plus = params;
            Params<double> minus = params;
            plus.layers[l][k] += h;
            minus.layers[l][k] -= h;
            const double lp =
                forward_loss_grad(fx.spec, fx.schema, plus, fx.maps, batch).loss;
            const double lm =
                forward_loss_grad(fx.spec, fx.schema, minus, fx.maps, batch).loss;
            const double numeric = (lp - lm) / (2 * h);
            const double a = analytic.grads[l][k];
            const double denom = std::max({1e-6, std::fabs(a), std::fabs(numeric)});
            worst = std::max(worst, std::fabs(a - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("all-zero params give uniform softmax: loss == ln(C)") {
    for (const uint32_t classes : {2u, 4u, 10u}) {
        Fixture fx({ModelKind::LinearSoftmax, 6, 0, classes, true}, {1, 2}, 3);
        const auto batch = random_batch<float>(16, 6, classes, 9);
        const auto out =
            forward_loss_grad(fx.spec, fx.schema, fx.zero_params<float>(), fx.maps, batch);
        CHECK(out.loss == doctest::Approx(std::log(static_cast<double>(classes))).epsilon(1e-6));
    }
}

TEST_CASE("two-class single example at zero logits: probs 0.5, dW rows = +-0.5 x") {
    Fixture fx({ModelKind::LinearSoftmax, 3, 0, 2, true}, kRatioOne, 5);
    BatchT<double> batch;
    batch.batch_size = 1;
    batch.input_dim = 3;
    batch.features = {0.25, -1.5, 2.0};
    batch.labels = {0};

    const auto out =
        forward_loss_grad(fx.spec, fx.schema, fx.zero_params<double>(), fx.maps, batch);
    CHECK(out.loss == doctest::Approx(std::log(2.0)));

    // dlogits = (p - onehot) = (-0.5, +0.5); dW[c,i] = dlogits[c] * x[i],
    // mapped through the g=1 permutation.
    const IndexMap& map = *fx.maps[0];
    for (uint64_t p = 0; p < map.virtual_size; ++p) {
        const size_t c = p / 3;
        const size_t i = p % 3;
        const double want = (c == 0 ? -0.5 : 0.5) * batch.features[i];
        CHECK(out.grads[0][map.indices[p]] == doctest::Approx(want).epsilon(1e-12));
    }
    CHECK(out.grads[1][0] == doctest::Approx(-0.5));
    CHECK(out.grads[1][1] == doctest::Approx(0.5));
}

TEST_CASE("gradients match central finite differences for both presets and all ratios") {
    const std::vector<Ratio> gammas = {{1, 1}, {1, 2}, {1, 4}, {1, 8}};
    for (const Ratio gamma : gammas) {
        Fixture lin({ModelKind::LinearSoftmax, 6, 0, 3, true}, gamma, 21);
        Fixture mlp({ModelKind::Mlp1h, 6, 5, 3, true}, gamma, 22);
        for (uint64_t seed = 0; seed < 3; ++seed) {
            const auto batch = random_batch<double>(8, 6, 3, 100 + seed);
            CHECK(max_grad_rel_error(lin, lin.random_params<double>(seed), batch) <= 1e-4);
            CHECK(max_grad_rel_error(mlp, mlp.random_params<double>(seed), batch) <= 1e-4);
        }
    }
}

TEST_CASE("model errors: digest, shape, labels") {
    Fixture fx({ModelKind::LinearSoftmax, 4, 0, 3, true}, {1, 2}, 8);
    auto params = fx.zero_params<float>();
    auto batch = random_batch<float>(4, 4, 3, 1);

    SUBCASE("digest mismatch") {
        params.schema_digest ^= 0xff;
        CHECK_THROWS_AS(forward_loss_grad(fx.spec, fx.schema, params, fx.maps, batch),
                        IncompatibleParametersError);
    }
    SUBCASE("wrong input dim") {
        batch.input_dim = 5;
        CHECK_THROWS_AS(forward_loss_grad(fx.spec, fx.schema, params, fx.maps, batch),
                        ShapeError);
    }
    SUBCASE("empty batch") {
        batch.batch_size = 0;
        batch.features.clear();
        batch.labels.clear();
        CHECK_THROWS_AS(forward_loss_grad(fx.spec, fx.schema, params, fx.maps, batch),
                        ShapeError);
    }
    SUBCASE("label out of range") {
        batch.labels[0] = 3;
        CHECK_THROWS_AS(forward_loss_grad(fx.spec, fx.schema, params, fx.maps, batch),
                        ShapeError);
    }
    SUBCASE("non-finite loss names a layer") {
        for (auto& v : params.layers[0]) v = 1e30f;
        for (auto& v : batch.features) v = 1e30f;
        CHECK_THROWS_AS(forward_loss_grad(fx.spec, fx.schema, params, fx.maps, batch),
                        NumericError);
    }
}

TEST_CASE("evaluate: separable set reaches 1.0; zero params tie-break to class 0") {
    Fixture fx({ModelKind::LinearSoftmax, 4, 0, 4, true}, kRatioOne, 2);

    SUBCASE("hand-built separating weights") {
        // One-hot features; identity-like weights classify perfectly.
        BatchT<float> batch;
        batch.batch_size = 4;
        batch.input_dim = 4;
        batch.features = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
        batch.labels = {0, 1, 2, 3};
        auto params = fx.zero_params<float>();
        const IndexMap& map = *fx.maps[0];
        // virtual position c*4+i wants weight +1 when c==i
        for (uint64_t p = 0; p < map.virtual_size; ++p) {
            if (p / 4 == p % 4) params.layers[0][map.indices[p]] = 1.0f;
        }
        CHECK(evaluate(fx.spec, fx.schema, params, fx.maps, batch) == 1.0);
    }
    SUBCASE("all-zero params predict class 0 everywhere") {
        BatchT<float> batch = random_batch<float>(400, 4, 4, 77);
        // balanced labels: exactly 100 per class
        for (size_t i = 0; i < batch.labels.size(); ++i) {
            batch.labels[i] = static_cast<uint32_t>(i % 4);
        }
        const double acc = evaluate(fx.spec, fx.schema, fx.zero_params<float>(), fx.maps, batch);
        CHECK(acc == 0.25);
    }
}

TEST_CASE("init_params: zero biases, bounded weights, exempt layers ignore their seed") {
    ModelSpec spec{ModelKind::Mlp1h, 8, 6, 4, true};
    const ParameterSchema schema = build_schema(spec.layers(), {1, 2}, 17);
    RealParams params = RealParams::zeros(schema);
    init_params(schema, params);

    const double s1 = std::sqrt(6.0 / (8 + 6));
    for (float v : params.layers[0]) {
        CHECK(std::fabs(v) <= s1);
    }
    for (float v : params.layers[1]) CHECK(v == 0.0f);
    for (float v : params.layers[3]) CHECK(v == 0.0f);

    // Same master seed, fresh build: identical init.
    RealParams again = RealParams::zeros(schema);
    init_params(schema, again);
    for (size_t l = 0; l < params.layers.size(); ++l) {
        CHECK(std::memcmp(params.layers[l].data(), again.layers[l].data(),
                          params.layers[l].size() * 4) == 0);
    }
}

TEST_CASE("exemption invariant: toggling an exempt layer's seed changes nothing numeric") {
    ModelSpec spec{ModelKind::Mlp1h, 8, 6, 4, true};
    ParameterSchema a = build_schema(spec.layers(), {1, 2}, 17);
    ParameterSchema b = a;
    b.layers[1].seed ^= 0xdeadbeef;  // exempt bias layer
    b.digest = schema_digest(b);
    CHECK(a.digest != b.digest);

    const IndexMaps maps_a = build_index_maps(a);
    const IndexMaps maps_b = build_index_maps(b);

    RealParams pa = RealParams::zeros(a);
    RealParams pb = RealParams::zeros(b);
    init_params(a, pa);
    init_params(b, pb);
    for (size_t l = 0; l < pa.layers.size(); ++l) {
        REQUIRE(std::memcmp(pa.layers[l].data(), pb.layers[l].data(), pa.layers[l].size() * 4) ==
                0);
    }

    const auto batch = random_batch<float>(12, 8, 4, 5);
    const auto ga = forward_loss_grad(spec, a, pa, maps_a, batch);
    const auto gb = forward_loss_grad(spec, b, pb, maps_b, batch);
    CHECK(std::memcmp(&ga.loss, &gb.loss, sizeof(float)) == 0);
    for (size_t l = 0; l < ga.grads.size(); ++l) {
        CHECK(std::memcmp(ga.grads[l].data(), gb.grads[l].data(), ga.grads[l].size() * 4) == 0);
    }
}

TEST_CASE("sgd step and schedule lookup") {
    // single weight layer of one element
    const ParameterSchema schema = build_schema({{"w", {1}, false}}, kRatioOne, 0);
    auto opt = OptState<float>::sgd(schema, 0.1f, LrSchedule::constant());
    Params<float> p = Params<float>::zeros(schema);
    p.layers[0][0] = 1.0f;
    optimizer_step(opt, p, {{2.0f}}, 0);
    CHECK(p.layers[0][0] == doctest::Approx(0.8f));

    SUBCASE("round-keyed multiplier") {
        LrSchedule sched{{{5, 0.1}}};
        CHECK(sched.multiplier(0) == 1.0);
        CHECK(sched.multiplier(4) == 1.0);
        CHECK(sched.multiplier(5) == 0.1);
        CHECK(sched.multiplier(100) == 0.1);

        const LrSchedule stepped = LrSchedule::step_5_30();
        CHECK(stepped.multiplier(4) == 1.0);
        CHECK(stepped.multiplier(5) == 0.1);
        CHECK(stepped.multiplier(29) == 0.1);
        CHECK(stepped.multiplier(30) == 0.01);
    }
    SUBCASE("non-finite gradient rejected") {
        CHECK_THROWS_AS(optimizer_step(opt, p, {{NAN}}, 0), NumericError);
    }
}

TEST_CASE("adadelta first step from zero accumulators") {
    const ParameterSchema schema = build_schema({{"w", {1}, false}}, kRatioOne, 0);
    const double eta = 0.7;
    auto opt = OptState<double>::adadelta(schema, eta, LrSchedule{{{5, 0.1}}});
    Params<double> p = Params<double>::zeros(schema);
    p.layers[0][0] = 1.0;

    // Eg = 0.1*g^2 = 0.1; u = sqrt(eps/(0.1+eps)) * g; p -= eta*mult*u
    const double eps = 1e-6;
    const double expected_delta = -std::sqrt(eps / (0.1 + eps)) * 1.0 * eta * 1.0;
    optimizer_step(opt, p, {{1.0}}, 0);
    CHECK(p.layers[0][0] == doctest::Approx(1.0 + expected_delta).epsilon(1e-12));

    SUBCASE("decayed round scales the step") {
        auto opt2 = OptState<double>::adadelta(schema, eta, LrSchedule{{{5, 0.1}}});
        Params<double> q = Params<double>::zeros(schema);
        q.layers[0][0] = 1.0;
        optimizer_step(opt2, q, {{1.0}}, 5);
        CHECK(q.layers[0][0] == doctest::Approx(1.0 + expected_delta * 0.1).epsilon(1e-12));
    }
}

TEST_CASE("50 sgd steps on a separable batch cut the loss by half or better") {
    Fixture fx({ModelKind::LinearSoftmax, 64, 0, 10, true}, {1, 2}, 33);
    const GlyphDataset data = generate_glyphs(128, 4, 0.0f, 0);
    const Batch batch = data.all();

    auto params = fx.zero_params<float>();
    auto opt = OptState<float>::sgd(fx.schema, 0.5f, LrSchedule::constant());
    const double initial = std::log(10.0);
    double loss = initial;
    for (int step = 0; step < 50; ++step) {
        const auto out = forward_loss_grad(fx.spec, fx.schema, params, fx.maps, batch);
        optimizer_step(opt, params, out.grads, 0);
        loss = out.loss;
    }
    CHECK(loss <= 0.5 * initial);
}
