#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "gradient_check.hpp"
#include "spliceloc/error.hpp"
#include "spliceloc/train/trainer.hpp"

using namespace spliceloc;
using namespace spliceloc::train;
using model::Matrix;

namespace {

std::vector<Example> random_set(const model::ModelConfig& c, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Example> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(testing::random_example(c, rng));
    return out;
}

}  // namespace

TEST_CASE("loss examples") {
    Matrix p(2, 2);
    p << 1.0, 0.0, 0.0, 1.0;
    CHECK(loss(p, {0, 1}) == 0.0);
    p << 0.5, 0.5, 0.5, 0.5;
    CHECK(loss(p, {0, 1}) == doctest::Approx(std::log(2.0)));
    p << 0.9, 0.1, 0.2, 0.8;
    CHECK(loss(p, {0, 1}) == doctest::Approx((-std::log(0.9) - std::log(0.8)) / 2));
    p << 1.0, 0.0, 1.0, 0.0;
    CHECK(loss(p, {1, 1}) == doctest::Approx(-std::log(1e-12)));
    CHECK_THROWS_AS(loss(p, {0}), Error);
}

TEST_CASE("gradients of a duplicated window equal those of the single window") {
    auto c = model::ModelConfig::oracle_reduced();
    c.dropout = 0.0;
    const auto p = model::ModelParameters::initialize(c, 1);
    const auto set = random_set(c, 1, 2);
    const std::vector<Example> twice{set[0], set[0]};
    const auto a = gradients(set, p, 3, model::Mode::eval);
    const auto b = gradients(twice, p, 3, model::Mode::eval);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
    for (std::size_t k = 0; k < a.grads.count(); ++k)
        for (std::size_t i = 0; i < a.grads[k].size(); ++i)
            REQUIRE(std::abs(a.grads[k].data[i] - b.grads[k].data[i]) <= 1e-15 + 1e-12 * std::abs(a.grads[k].data[i]));
    CHECK_THROWS_AS(gradients(std::vector<Example>{}, p, 0), Error);
}

TEST_CASE("saturated correct predictions have vanishing gradient") {
    auto c = model::ModelConfig::oracle_reduced();
    c.dropout = 0.0;
    auto p = model::ModelParameters::initialize(c, 4);
    // drive the head bias so class 1 wins by a huge margin everywhere
    auto& b = p.set[p.idx.head2.b].data;
    b[0] = -60.0;
    b[1] = 60.0;
    auto set = random_set(c, 2, 5);
    for (auto& ex : set) std::fill(ex.labels.begin(), ex.labels.end(), 1);
    const auto g = gradients(set, p, 0, model::Mode::eval);
    CHECK(g.loss < 1e-12);
    for (const auto& t : g.grads)
        for (double v : t.data) REQUIRE(std::abs(v) < 1e-8);
}

TEST_CASE("adam step") {
    const auto c = model::ModelConfig::oracle_reduced();
    TrainConfig tc;
    SUBCASE("zero gradient leaves parameters unchanged") {
        auto p = model::ModelParameters::initialize(c, 6);
        const auto before = p.set;
        auto st = AdamState::for_parameters(p);
        st.m.fill(0.5);
        st.v.fill(0.25);
        adam_step(p, st, p.set.zeros_like(), tc);
        CHECK(st.step == 1);
        CHECK(st.m[0].data[0] == doctest::Approx(0.45));
        CHECK(st.v[0].data[0] == doctest::Approx(0.24975));
        // moments decay but still drive an update; with fresh moments none
        auto q = model::ModelParameters::initialize(c, 6);
        auto fresh = AdamState::for_parameters(q);
        adam_step(q, fresh, q.set.zeros_like(), tc);
        CHECK(q.set == before);
    }
    SUBCASE("first step moves by lr * g / (|g| + eps)") {
        auto p = model::ModelParameters::initialize(c, 7);
        const auto before = p.set;
        auto st = AdamState::for_parameters(p);
        auto g = p.set.zeros_like();
        std::mt19937_64 rng(8);
        std::normal_distribution<double> nd(0.0, 1e-3);
        for (auto& t : g)
            for (auto& v : t.data) v = nd(rng);
        adam_step(p, st, g, tc);
        for (std::size_t k = 0; k < g.count(); ++k)
            for (std::size_t i = 0; i < g[k].size(); ++i) {
                const double gi = g[k].data[i];
                const double expect = before[k].data[i] - tc.learning_rate * gi / (std::abs(gi) + tc.adam_epsilon);
                REQUIRE(p.set[k].data[i] == doctest::Approx(expect).epsilon(1e-12));
            }
    }
    SUBCASE("mismatched shapes throw") {
        auto p = model::ModelParameters::initialize(c, 7);
        auto st = AdamState::for_parameters(model::ModelParameters::initialize(model::ModelConfig::reduced(), 1));
        CHECK_THROWS_AS(adam_step(p, st, p.set.zeros_like(), tc), Error);
    }
}

TEST_CASE("early stopping arithmetic") {
    const auto c = model::ModelConfig::oracle_reduced();
    const auto p = model::ModelParameters::initialize(c, 9);
    const auto set = random_set(c, 3, 10);
    TrainConfig tc;
    tc.batch_size = 2;
    SUBCASE("constant validation score stops after 1 + patience epochs") {
        const auto r = train::train(p, set, {}, tc, [](const model::ModelParameters&, std::size_t) { return 50.0; });
        CHECK(r.history.size() == 21);
        CHECK(r.stopped_by_patience);
        CHECK(r.best_epoch == 1);
    }
    SUBCASE("ever-improving score runs to the epoch cap") {
        tc.epoch_cap = 30;
        const auto r = train::train(p, set, {}, tc, [](const model::ModelParameters&, std::size_t e) { return double(e); });
        CHECK(r.history.size() == 30);
        CHECK(!r.stopped_by_patience);
        CHECK(r.best_epoch == 30);
    }
    SUBCASE("best snapshot is returned") {
        tc.patience = 3;
        std::vector<model::ParameterSet> seen;
        const auto r = train::train(p, set, {}, tc, [&](const model::ModelParameters& q, std::size_t e) {
            seen.push_back(q.set);
            return e == 2 ? 90.0 : 10.0;
        });
        CHECK(r.history.size() == 5);
        CHECK(r.best_epoch == 2);
        CHECK(r.best.set == seen[1]);
    }
    SUBCASE("target score stops early") {
        tc.target_score = 30.0;
        const auto r = train::train(p, set, {}, tc, [](const model::ModelParameters&, std::size_t e) { return 10.0 * e; });
        CHECK(r.history.size() == 3);
        CHECK(r.best_epoch == 3);
        CHECK(!r.stopped_by_patience);
    }
    SUBCASE("empty data") {
        CHECK_THROWS_AS(train::train(p, {}, set, tc), Error);
        CHECK_THROWS_AS(train::train(p, set, {}, tc), Error);
    }
    SUBCASE("invalid config") {
        tc.patience = 0;
        CHECK_THROWS_AS(train::train(p, set, set, tc), Error);
    }
}

TEST_CASE("training is deterministic and the snapshot reproduces its score") {
    const auto c = model::ModelConfig::oracle_reduced();
    const auto p = model::ModelParameters::initialize(c, 11);
    const auto set = random_set(c, 6, 12);
    TrainConfig tc;
    tc.batch_size = 4;
    tc.epoch_cap = 8;
    tc.learning_rate = 1e-2;
    tc.seed = 77;
    const auto dir = std::filesystem::temp_directory_path() / "spliceloc_ckpt_test";
    std::filesystem::remove_all(dir);
    tc.checkpoint_dir = dir.string();
    tc.checkpoint_every = 4;
    std::vector<std::string> lines;
    const auto a = train::train(p, set, set, tc, {}, [&](const EpochRecord& r) { lines.push_back(r.to_json()); });
    tc.checkpoint_dir.clear();
    const auto b = train::train(p, set, set, tc);
    CHECK(a.best.set == b.best.set);
    CHECK(a.history.size() == b.history.size());
    CHECK(validation_balanced_accuracy(a.best, set) == a.best_val_balanced_accuracy);
    CHECK(lines.size() == a.history.size());
    CHECK(lines[0].find("\"val_balanced_accuracy\"") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "best.weights"));
    CHECK(std::filesystem::exists(dir / "epoch_0004.weights"));
    CHECK(model::ModelParameters::load((dir / "best.weights").string()).set == a.best.set);
    std::filesystem::remove_all(dir);
}

TEST_CASE("tiny model fits a tiny set") {
    auto c = model::ModelConfig::oracle_reduced();
    const auto p = model::ModelParameters::initialize(c, 13);
    const auto set = random_set(c, 4, 14);
    TrainConfig tc;
    tc.dropout = 0.0;
    tc.batch_size = 4;
    tc.learning_rate = 1e-2;
    tc.epoch_cap = 150;
    tc.patience = 150;
    const auto r = train::train(p, set, set, tc);
    CHECK(r.history.back().train_loss < r.history.front().train_loss * 0.5);
    CHECK(frame_accuracy(r.best, set) >= 90.0);
}
