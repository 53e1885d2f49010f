#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "falsify/errors.hpp"
#include "falsify/search.hpp"
#include "test_spaces.hpp"

using namespace falsify;

namespace {

SearchSpace tiny_space(std::vector<std::size_t> ks) {
    std::vector<ParameterDef> params;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        ParameterDef p;
        p.name = "p" + std::to_string(i);
        for (std::size_t v = 0; v < ks[i]; ++v)
            p.values.push_back(static_cast<double>(v));
        params.push_back(p);
    }
    return SearchSpace(std::move(params), 0);
}

// Synthetic landscape: full reward for one combination, nothing anywhere
// else.
class BanditEvaluator final : public EpisodeEvaluator {
public:
    explicit BanditEvaluator(std::vector<int> target)
        : target_(std::move(target)) {}

    Outcome evaluate(const ScenarioAction& action) const override {
        Outcome out;
        out.reward.total_timesteps = 1;
        const bool hit = action.indices == target_;
        out.reward.total = hit ? 1.0 : 0.0;
        out.verdict.challenging = hit;
        out.verdict.collision = false;
        return out;
    }

private:
    std::vector<int> target_;
};

// A fixed fraction of actions (by rank prefix) counts as challenging.
class DensityEvaluator final : public EpisodeEvaluator {
public:
    DensityEvaluator(const SearchSpace& space, std::uint64_t challenging)
        : space_(&space), challenging_(challenging) {}

    Outcome evaluate(const ScenarioAction& action) const override {
        Outcome out;
        out.reward.total_timesteps = 1;
        const bool hit = space_->rank_of(action.indices) < challenging_;
        out.reward.total = hit ? 1.0 : 0.0;
        out.verdict.challenging = hit;
        return out;
    }

private:
    const SearchSpace* space_;
    std::uint64_t challenging_;
};

bool rows_equal(const SearchReport& a, const SearchReport& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const EpisodeRow& x = a.rows[i];
        const EpisodeRow& y = b.rows[i];
        if (x.action_id != y.action_id || x.reward.total != y.reward.total ||
            x.challenging != y.challenging || x.epsilon != y.epsilon ||
            x.explored != y.explored)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("brute force covers a toy space exactly once") {
    const SearchSpace space = tiny_space({2, 2});
    SearchConfig cfg;
    cfg.mode = SearchMode::Brute;
    const BanditEvaluator eval({1, 0});
    const SearchReport report = run_brute(space, cfg, eval);
    REQUIRE(report.rows.size() == 4);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(report.rows[i].action_id == i);
    CHECK(report.best_reward() == 1.0);
    CHECK(report.rows[report.best_episode].action_id ==
          space.rank_of({1, 0}));
    CHECK(report.challenging_count == 1);
    REQUIRE(report.first_challenging.has_value());
    CHECK(*report.first_challenging == 2);
}

TEST_CASE("rl mode needs at least one full batch") {
    const SearchSpace space = tiny_space({2, 2});
    SearchConfig cfg;
    cfg.max_episodes = 10;
    cfg.batch_size = 25;
    const BanditEvaluator eval({0, 0});
    CHECK_THROWS_AS(run_search(space, cfg, eval), ConfigError);
}

TEST_CASE("brute force refuses to exceed its budget") {
    const SearchSpace space = tiny_space({10, 10, 10});
    SearchConfig cfg;
    cfg.brute_budget = 999;
    const BanditEvaluator eval({0, 0, 0});
    CHECK_THROWS_AS(run_brute(space, cfg, eval), ConfigError);
    cfg.brute_budget = 1000;  // boundary is inclusive
    CHECK(run_brute(space, cfg, eval).rows.size() == 1000);
}

TEST_CASE("rl search is deterministic per seed") {
    const SearchSpace space = tiny_space({3, 3});
    SearchConfig cfg;
    cfg.max_episodes = 200;
    cfg.seed = 42;
    const BanditEvaluator eval({2, 1});
    const SearchReport a = run_search(space, cfg, eval);
    const SearchReport b = run_search(space, cfg, eval);
    CHECK(rows_equal(a, b));
    CHECK(a.best_episode == b.best_episode);

    cfg.seed = 43;
    const SearchReport c = run_search(space, cfg, eval);
    CHECK(!rows_equal(a, c));
}

TEST_CASE("rl search masters a bandit landscape") {
    const SearchSpace space = tiny_space({3, 3});
    SearchConfig cfg;
    cfg.max_episodes = 2000;
    cfg.seed = 7;
    const BanditEvaluator eval({0, 2});
    const SearchReport report = run_search(space, cfg, eval);

    CHECK(report.best_reward() == 1.0);
    // converged: the trailing moving-average window is within 5% of the max
    CHECK(report.moving_avg.back() > 0.95);
}

TEST_CASE("rl never beats the brute-force global maximum") {
    const SearchSpace space = tiny_space({4, 4});
    const BanditEvaluator eval({3, 3});
    SearchConfig cfg;
    cfg.max_episodes = 500;
    cfg.seed = 3;
    const SearchReport rl = run_search(space, cfg, eval);
    const SearchReport brute = run_brute(space, cfg, eval);
    CHECK(brute.best_reward() >= rl.best_reward());
}

TEST_CASE("random search draws uniform marginals") {
    const SearchSpace space = build_paper_preset();
    SearchConfig cfg;
    cfg.mode = SearchMode::Random;
    cfg.max_episodes = 10000;
    cfg.seed = 11;
    const BanditEvaluator eval(std::vector<int>(5, 0));
    const SearchReport report = run_random(space, cfg, eval);

    // p = 0.01 chi-square critical values by degrees of freedom
    const auto critical = [](std::size_t df) {
        switch (df) {
            case 3: return 11.345;
            case 9: return 21.666;
            case 24: return 42.980;
        }
        REQUIRE(false);
        return 0.0;
    };

    for (std::size_t j = 0; j < space.size(); ++j) {
        const std::size_t k = space.param(j).values.size();
        std::vector<int> counts(k, 0);
        for (const auto& row : report.rows)
            ++counts[space.action_at(row.action_id).indices[j]];
        double chi2 = 0.0;
        const double expected =
            static_cast<double>(report.rows.size()) / static_cast<double>(k);
        for (int c : counts)
            chi2 += (c - expected) * (c - expected) / expected;
        CHECK(chi2 < critical(k - 1));
    }
}

TEST_CASE("random search is deterministic per seed") {
    const SearchSpace space = tiny_space({5, 5});
    SearchConfig cfg;
    cfg.mode = SearchMode::Random;
    cfg.max_episodes = 300;
    cfg.seed = 19;
    const BanditEvaluator eval({0, 0});
    CHECK(rows_equal(run_random(space, cfg, eval),
                     run_random(space, cfg, eval)));
}

TEST_CASE("first-challenging on a 1% landscape matches the geometric law") {
    const SearchSpace space = tiny_space({10, 10});
    const DensityEvaluator eval(space, 1);  // exactly 1 of 100 actions
    SearchConfig cfg;
    cfg.mode = SearchMode::Random;
    cfg.max_episodes = 3000;

    std::vector<double> firsts;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.seed = seed;
        const SearchReport report = run_random(space, cfg, eval);
        REQUIRE(report.first_challenging.has_value());
        firsts.push_back(static_cast<double>(*report.first_challenging));
    }
    std::sort(firsts.begin(), firsts.end());
    const double median = 0.5 * (firsts[9] + firsts[10]);
    // E[first] = 100, median of Geometric(0.01) = 69
    CHECK(median >= 30.0);
    CHECK(median <= 300.0);
}

TEST_CASE("parallel and serial baselines produce identical reports") {
    const SearchSpace space = falsify::testing::make_reduced_space();
    const SimEvaluator eval(space, WorldConfig{}, RssConfig{},
                            RewardConfig{});
    SearchConfig cfg;
    cfg.seed = 5;

    cfg.execution = Execution::Serial;
    const SearchReport brute_serial = run_brute(space, cfg, eval);
    cfg.execution = Execution::Parallel;
    const SearchReport brute_parallel = run_brute(space, cfg, eval);
    CHECK(rows_equal(brute_serial, brute_parallel));
    CHECK(brute_serial.best_episode == brute_parallel.best_episode);

    cfg.max_episodes = 400;
    cfg.execution = Execution::Serial;
    const SearchReport rand_serial = run_random(space, cfg, eval);
    cfg.execution = Execution::Parallel;
    const SearchReport rand_parallel = run_random(space, cfg, eval);
    CHECK(rows_equal(rand_serial, rand_parallel));

    std::ostringstream a, b;
    write_episodes_csv(a, brute_serial, space);
    write_episodes_csv(b, brute_parallel, space);
    CHECK(a.str() == b.str());
}

TEST_CASE("the search engine runs unchanged against a substitute SUT") {
    struct NeverBrake final : Sut {
        SpeedCommand control(const SutObservation&) const override {
            return SpeedCommand::Accelerate;
        }
    };
    const NeverBrake stub;
    const SearchSpace space = falsify::testing::make_reduced_space();
    const SimEvaluator eval(space, WorldConfig{}, RssConfig{},
                            RewardConfig{}, stub);
    SearchConfig cfg;
    cfg.seed = 9;
    const SearchReport report = run_brute(space, cfg, eval);
    REQUIRE(report.rows.size() == 80);
    // with no braking at all, interleaved arrivals collide strictly more
    // often than under the stock CAS
    const SimEvaluator cas_eval(space, WorldConfig{}, RssConfig{},
                                RewardConfig{});
    const SearchReport cas_report = run_brute(space, cfg, cas_eval);
    CHECK(report.collision_count >= cas_report.collision_count);
}

TEST_CASE("best-reward bookkeeping is a running maximum") {
    const SearchSpace space = build_paper_preset();
    const SimEvaluator eval(space, WorldConfig{}, RssConfig{},
                            RewardConfig{});
    SearchConfig cfg;
    cfg.mode = SearchMode::Random;
    cfg.max_episodes = 500;
    cfg.seed = 23;
    const SearchReport report = run_random(space, cfg, eval);

    double best = -1e30;
    std::int64_t best_idx = -1;
    for (const auto& row : report.rows) {
        if (row.reward.total > best) {
            best = row.reward.total;
            best_idx = row.episode;
        }
    }
    CHECK(report.best_episode == best_idx);
    CHECK(report.best_reward() == best);
}

TEST_CASE("moving average starts once the window fills") {
    const SearchSpace space = tiny_space({2, 2});
    const BanditEvaluator eval({0, 1});
    SearchConfig cfg;
    cfg.mode = SearchMode::Random;
    cfg.max_episodes = 150;
    cfg.seed = 2;
    const SearchReport report = run_random(space, cfg, eval);
    REQUIRE(report.moving_avg.size() == 150);
    for (int i = 0; i < 99; ++i) CHECK(std::isnan(report.moving_avg[i]));
    for (int i = 99; i < 150; ++i) {
        double sum = 0.0;
        for (int j = i - 99; j <= i; ++j) sum += report.rows[j].reward.total;
        CHECK(report.moving_avg[i] == doctest::Approx(sum / 100.0));
    }
}

TEST_CASE("episode csv carries the declared schema") {
    const SearchSpace space = falsify::testing::make_reduced_space();
    const SimEvaluator eval(space, WorldConfig{}, RssConfig{},
                            RewardConfig{});
    SearchConfig cfg;
    cfg.seed = 1;
    const SearchReport report = run_brute(space, cfg, eval);
    std::ostringstream os;
    write_episodes_csv(os, report, space);
    std::istringstream in(os.str());
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "episode,idx_ego-long-pos,idx_ped-accel,idx_ped-vel,"
          "idx_ped-long-pos,idx_weather,val_ego-long-pos,val_ped-accel,"
          "val_ped-vel,val_ped-long-pos,val_weather,r_highrisk,r_distance,"
          "r_collision,total,highrisk_count,total_timesteps,final_distance,"
          "collision,challenging,epsilon,explored,moving_avg100");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 80);

    std::ostringstream sum;
    write_summary(sum, report, space);
    CHECK(sum.str().find("best_reward:") != std::string::npos);
    CHECK(sum.str().find("first_challenging_episode:") != std::string::npos);
}
