#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "falsify/policy.hpp"
#include "falsify/rng.hpp"

using namespace falsify;

namespace {

PolicyConfig small_cfg() {
    PolicyConfig cfg;
    cfg.hidden = 12;
    cfg.embed = 6;
    return cfg;
}

void randomize_weights(Policy& policy, std::uint64_t seed, double scale) {
    Rng rng(seed);
    for (double& w : policy.parameters()) w = rng.uniform(-scale, scale);
}

// Objective whose gradient reinforce estimates:
// (1/N) sum_tau R(tau) sum_i log pi(a_i | state_tau)
double reinforce_objective(const Policy& policy,
                           std::span<const EpisodeRecord> batch) {
    double obj = 0.0;
    for (const EpisodeRecord& rec : batch) {
        const auto probs = policy.forward(rec.state);
        double lp = 0.0;
        for (std::size_t i = 0; i < rec.action.size(); ++i)
            lp += std::log(probs[i][rec.action[i]]);
        obj += rec.episode_return * lp;
    }
    return obj / static_cast<double>(batch.size());
}

std::vector<EpisodeRecord> synthetic_batch(Policy& policy, int n,
                                           std::uint64_t seed) {
    ExplorationSchedule sched;
    sched.epsilon = 0.3;
    Rng rng(seed);
    std::vector<EpisodeRecord> batch;
    std::vector<int> state;
    for (int i = 0; i < n; ++i) {
        EpisodeRecord rec = policy.sample(state, sched, rng);
        rec.episode_return = rng.uniform(-1.0, 1.0);
        rec.cache = ForwardCache{};  // force the update to recompute
        state = rec.action;
        batch.push_back(std::move(rec));
    }
    return batch;
}

}  // namespace

TEST_CASE("zero-initialized heads give exactly uniform distributions") {
    const Policy policy({10, 25, 4}, small_cfg(), 3);
    const auto probs = policy.forward({});
    REQUIRE(probs.size() == 3);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double expected = 1.0 / static_cast<double>(probs[i].size());
        for (double p : probs[i])
            CHECK(p == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("probability vectors are normalized for arbitrary weights") {
    Policy policy({10, 25, 4, 10}, small_cfg(), 3);
    randomize_weights(policy, 99, 0.7);
    for (const std::vector<int>& state :
         {std::vector<int>{}, std::vector<int>{9, 24, 3, 0}}) {
        const auto probs = policy.forward(state);
        for (const auto& head : probs) {
            double sum = 0.0;
            for (double p : head) {
                CHECK(p > 0.0);
                sum += p;
            }
            CHECK(std::fabs(sum - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("forward is deterministic and validates its state") {
    Policy policy({5, 5}, small_cfg(), 11);
    randomize_weights(policy, 5, 0.3);
    CHECK(policy.forward({2, 4}) == policy.forward({2, 4}));
    CHECK_THROWS_AS(policy.forward({1}), std::invalid_argument);
    CHECK_THROWS_AS(policy.forward({1, 5}), std::invalid_argument);
}

TEST_CASE("forced exploration draws uniformly") {
    const Policy policy({4}, small_cfg(), 1);
    ExplorationSchedule sched;
    sched.epsilon = 1.0;
    sched.decay = 1.0;  // hold epsilon for the whole census
    sched.epsilon_min = 1.0;
    Rng rng(2024);
    int counts[4] = {0, 0, 0, 0};
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto rec = policy.sample({}, sched, rng);
        CHECK(rec.explored);
        ++counts[rec.action[0]];
    }
    // chi-square against uniform, df = 3, p = 0.01 critical value
    double chi2 = 0.0;
    for (int c : counts) {
        const double expected = n / 4.0;
        chi2 += (c - expected) * (c - expected) / expected;
    }
    CHECK(chi2 < 11.345);
}

TEST_CASE("sampling records one bounded log-probability per parameter") {
    Policy policy({10, 25, 4}, small_cfg(), 2);
    ExplorationSchedule sched;
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto rec = policy.sample({}, sched, rng);
        REQUIRE(rec.log_prob_per_param.size() == 3);
        REQUIRE(rec.action.size() == 3);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(rec.log_prob_per_param[j] <= 0.0);
            CHECK(rec.action[j] >= 0);
            CHECK(rec.action[j] < policy.head_sizes()[j]);
        }
    }
}

TEST_CASE("explored episodes can be excluded from the update") {
    PolicyConfig cfg = small_cfg();
    cfg.include_explored = false;
    Policy policy({4, 4}, cfg, 9);
    ExplorationSchedule sched;  // epsilon 1: everything explored
    sched.epsilon_min = 1.0;
    sched.decay = 1.0;
    Rng rng(77);
    std::vector<EpisodeRecord> batch;
    for (int i = 0; i < 6; ++i) {
        EpisodeRecord rec = policy.sample({}, sched, rng);
        rec.episode_return = 1.0;
        batch.push_back(std::move(rec));
    }
    const auto before = policy.parameters();
    policy.reinforce_update(batch);
    CHECK(policy.parameters() == before);  // every episode was skipped
}

TEST_CASE("the moving-average baseline tracks batch returns when enabled") {
    PolicyConfig cfg = small_cfg();
    cfg.use_baseline = true;
    cfg.normalize_returns = false;
    Policy policy({3}, cfg, 5);
    ExplorationSchedule sched;
    Rng rng(4);
    std::vector<EpisodeRecord> batch;
    for (int i = 0; i < 4; ++i) {
        EpisodeRecord rec = policy.sample({}, sched, rng);
        rec.episode_return = 0.2;
        batch.push_back(std::move(rec));
    }
    CHECK(policy.baseline() == 0.0);
    policy.reinforce_update(batch);
    CHECK(policy.baseline() ==
          doctest::Approx(0.1 * 0.2).epsilon(1e-12));  // (1-decay)*mean
}

TEST_CASE("a degenerate head is followed deterministically") {
    Policy policy({4}, small_cfg(), 1);
    policy.parameters()[policy.head_bias_offset(0) + 2] = 50.0;
    ExplorationSchedule sched;
    sched.epsilon = 0.0;
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        const auto rec = policy.sample({}, sched, rng);
        CHECK(rec.action[0] == 2);
        CHECK(rec.log_prob_per_param[0] <= 0.0);
    }
}

TEST_CASE("epsilon decays per episode down to its floor") {
    const Policy policy({3}, small_cfg(), 1);
    ExplorationSchedule sched;
    Rng rng(1);
    for (int i = 0; i < 919; ++i) policy.sample({}, sched, rng);
    // 0.995^919 = 0.009985... already below the floor
    CHECK(sched.epsilon == 0.01);
    policy.sample({}, sched, rng);
    CHECK(sched.epsilon == 0.01);
}

TEST_CASE("zero returns leave the weights untouched") {
    Policy policy({4, 4}, small_cfg(), 9);
    randomize_weights(policy, 7, 0.2);
    auto batch = synthetic_batch(policy, 8, 21);
    for (auto& rec : batch) rec.episode_return = 0.0;
    const std::vector<double> before = policy.parameters();
    const auto steps_before = policy.update_steps();
    policy.reinforce_update(batch);
    CHECK(policy.parameters() == before);
    CHECK(policy.update_steps() == steps_before + 1);
}

TEST_CASE("single-episode softmax gradient has the log-likelihood form") {
    // one parameter, K = 2: d/dlogit_k of log pi(a) is (1[k==a] - p_k),
    // visible directly on the head bias entries
    PolicyConfig cfg = small_cfg();
    Policy policy({2}, cfg, 17);
    randomize_weights(policy, 31, 0.4);

    EpisodeRecord rec;
    rec.state = {};
    rec.action = {1};
    rec.episode_return = 0.7;
    const auto probs = policy.forward({});

    const auto grad = policy.batch_gradient(std::span(&rec, 1));
    const auto b0 = policy.head_bias_offset(0);
    CHECK(grad[b0 + 1] ==
          doctest::Approx(0.7 * (1.0 - probs[0][1])).epsilon(1e-12));
    CHECK(grad[b0 + 0] ==
          doctest::Approx(0.7 * (0.0 - probs[0][0])).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
    for (std::uint64_t seed : {1ull, 2ull}) {
        PolicyConfig cfg = small_cfg();
        cfg.normalize_returns = false;  // oracle uses raw returns
        Policy policy({6, 4, 3}, cfg, seed);
        randomize_weights(policy, seed * 13 + 1, 0.3);
        const auto batch = synthetic_batch(policy, 4, seed * 7 + 3);

        const auto analytic = policy.batch_gradient(batch);

        const double h = 1e-5;
        std::vector<double> fd(analytic.size());
        for (std::size_t k = 0; k < fd.size(); ++k) {
            const double orig = policy.parameters()[k];
            policy.parameters()[k] = orig + h;
            const double up = reinforce_objective(policy, batch);
            policy.parameters()[k] = orig - h;
            const double down = reinforce_objective(policy, batch);
            policy.parameters()[k] = orig;
            fd[k] = (up - down) / (2 * h);
        }

        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < fd.size(); ++k) {
            num += (analytic[k] - fd[k]) * (analytic[k] - fd[k]);
            den += fd[k] * fd[k];
        }
        CHECK(std::sqrt(num) <= 1e-4 * std::sqrt(den));
    }
}

TEST_CASE("weights stay on the simplex after many updates") {
    Policy policy({5, 3}, small_cfg(), 4);
    Rng rng(88);
    ExplorationSchedule sched;
    std::vector<int> state;
    for (int update = 0; update < 60; ++update) {
        std::vector<EpisodeRecord> batch;
        for (int i = 0; i < 5; ++i) {
            EpisodeRecord rec = policy.sample(state, sched, rng);
            rec.episode_return = rng.uniform(-0.02, 0.27);
            state = rec.action;
            batch.push_back(std::move(rec));
        }
        policy.reinforce_update(batch, 0.05);
    }
    for (const std::vector<int>& s :
         {std::vector<int>{}, std::vector<int>{4, 2}}) {
        for (const auto& head : policy.forward(s)) {
            double sum = 0.0;
            for (double p : head) sum += p;
            CHECK(std::fabs(sum - 1.0) < 1e-9);
        }
    }
    for (double w : policy.parameters()) CHECK(std::isfinite(w));
}

TEST_CASE("training trajectory is reproducible from the seed") {
    auto run = [] {
        Policy policy({4, 4}, small_cfg(), 55);
        Rng rng(777);
        ExplorationSchedule sched;
        std::vector<int> state;
        for (int update = 0; update < 10; ++update) {
            std::vector<EpisodeRecord> batch;
            for (int i = 0; i < 6; ++i) {
                EpisodeRecord rec = policy.sample(state, sched, rng);
                rec.episode_return = (rec.action[0] == 1) ? 1.0 : 0.0;
                state = rec.action;
                batch.push_back(std::move(rec));
            }
            policy.reinforce_update(batch);
        }
        return policy.parameters();
    };
    CHECK(run() == run());
}

TEST_CASE("policy learns a toy bandit quickly") {
    PolicyConfig cfg = small_cfg();
    Policy policy({3, 3}, cfg, 12);
    Rng rng(100);
    ExplorationSchedule sched;
    const std::vector<int> target = {1, 2};
    std::vector<int> state;
    for (int update = 0; update < 300; ++update) {
        std::vector<EpisodeRecord> batch;
        for (int i = 0; i < 10; ++i) {
            EpisodeRecord rec = policy.sample(state, sched, rng);
            rec.episode_return = rec.action == target ? 1.0 : 0.0;
            state = rec.action;
            batch.push_back(std::move(rec));
        }
        policy.reinforce_update(batch, 0.05);
    }
    const auto probs = policy.forward(target);
    CHECK(probs[0][1] * probs[1][2] > 0.5);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    Policy policy({10, 25, 4}, small_cfg(), 6);
    Rng rng(9);
    ExplorationSchedule sched;
    std::vector<int> state;
    std::vector<EpisodeRecord> batch;
    for (int i = 0; i < 5; ++i) {
        EpisodeRecord rec = policy.sample(state, sched, rng);
        rec.episode_return = rng.uniform01();
        state = rec.action;
        batch.push_back(std::move(rec));
    }
    policy.reinforce_update(batch);

    std::stringstream ss;
    policy.save(ss);
    const Policy loaded = Policy::load(ss);

    CHECK(loaded.parameters() == policy.parameters());
    CHECK(loaded.update_steps() == policy.update_steps());
    CHECK(loaded.head_sizes() == policy.head_sizes());
    CHECK(loaded.forward({3, 20, 2}) == policy.forward({3, 20, 2}));

    std::stringstream again;
    loaded.save(again);
    CHECK(again.str() == ss.str());
}
