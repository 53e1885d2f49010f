#include "falsify/search.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "falsify/csv.hpp"
#include "falsify/errors.hpp"
#include "falsify/rng.hpp"

namespace falsify {

std::string to_string(SearchMode m) {
    switch (m) {
        case SearchMode::Rl: return "rl";
        case SearchMode::Random: return "random";
        case SearchMode::Brute: return "brute";
    }
    return "unknown";
}

SimEvaluator::SimEvaluator(const SearchSpace& space, WorldConfig world,
                           RssConfig rss, RewardConfig reward)
    : space_(&space),
      world_(world),
      rss_(rss),
      reward_(reward),
      owned_sut_(make_default_cas()),
      sut_(owned_sut_.get()) {}

SimEvaluator::SimEvaluator(const SearchSpace& space, WorldConfig world,
                           RssConfig rss, RewardConfig reward, const Sut& sut)
    : space_(&space), world_(world), rss_(rss), reward_(reward), sut_(&sut) {}

EpisodeTrace SimEvaluator::trace(const ScenarioAction& action) const {
    return run_episode(action, *space_, world_, rss_, *sut_);
}

EpisodeEvaluator::Outcome SimEvaluator::evaluate(
    const ScenarioAction& action) const {
    const EpisodeTrace t = trace(action);
    return {total_reward(t, reward_), classify_scenario(t, reward_)};
}

double SearchReport::best_reward() const {
    return best_episode < 0 ? -std::numeric_limits<double>::infinity()
                            : rows[best_episode].reward.total;
}

namespace {

EpisodeRow make_row(std::int64_t episode, std::uint64_t action_id,
                    const EpisodeEvaluator::Outcome& out) {
    EpisodeRow row;
    row.episode = episode;
    row.action_id = action_id;
    row.reward = out.reward;
    row.challenging = out.verdict.challenging;
    row.collision = out.verdict.collision;
    return row;
}

// Moving average, best row, first challenging, and census; shared by all
// three modes so reports stay structurally identical.
void finalize(SearchReport& report) {
    constexpr int kWindow = 100;
    const auto n = static_cast<std::int64_t>(report.rows.size());
    report.moving_avg.assign(n, std::numeric_limits<double>::quiet_NaN());
    double window_sum = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < n; ++i) {
        const EpisodeRow& row = report.rows[i];
        window_sum += row.reward.total;
        if (i >= kWindow) window_sum -= report.rows[i - kWindow].reward.total;
        if (i >= kWindow - 1) report.moving_avg[i] = window_sum / kWindow;
        if (row.reward.total > best) {
            best = row.reward.total;
            report.best_episode = i;
        }
        if (row.challenging) {
            ++report.challenging_count;
            if (!report.first_challenging) report.first_challenging = i;
        }
        if (row.collision) ++report.collision_count;
    }
}

}  // namespace

SearchReport run_search(const SearchSpace& space, const SearchConfig& cfg,
                        const EpisodeEvaluator& evaluator,
                        Policy* out_policy) {
    if (cfg.max_episodes < cfg.batch_size)
        throw ConfigError("rl mode needs max_episodes >= batch_size");

    std::vector<int> head_sizes;
    for (const auto& p : space.params())
        head_sizes.push_back(static_cast<int>(p.values.size()));

    Policy policy(head_sizes, cfg.policy,
                  substream_seed(cfg.seed, "policy_init"));
    Rng rng(substream_seed(cfg.seed, "search"));
    ExplorationSchedule schedule = cfg.exploration;

    SearchReport report;
    report.mode = SearchMode::Rl;
    report.seed = cfg.seed;
    report.rows.reserve(cfg.max_episodes);

    std::vector<int> state;  // empty: designated start state
    std::vector<EpisodeRecord> batch;
    batch.reserve(cfg.batch_size);

    for (std::int64_t episode = 0; episode < cfg.max_episodes; ++episode) {
        const double eps_now = schedule.epsilon;
        EpisodeRecord rec = policy.sample(state, schedule, rng);
        const ScenarioAction action = space.resolve(rec.action);
        const auto outcome = evaluator.evaluate(action);
        rec.episode_return = outcome.reward.total;

        EpisodeRow row = make_row(episode, space.rank_of(rec.action), outcome);
        row.epsilon = eps_now;
        row.explored = rec.explored;
        report.rows.push_back(row);

        state = rec.action;
        batch.push_back(std::move(rec));
        if (static_cast<int>(batch.size()) == cfg.batch_size) {
            policy.reinforce_update(batch);
            batch.clear();
        }
    }

    finalize(report);
    if (out_policy) *out_policy = policy;
    return report;
}

SearchReport run_random(const SearchSpace& space, const SearchConfig& cfg,
                        const EpisodeEvaluator& evaluator) {
    Rng rng(substream_seed(cfg.seed, "search"));

    // actions are drawn serially so results do not depend on scheduling;
    // the episodes themselves are pure and fan out to the worker pool
    const auto n = cfg.max_episodes;
    std::vector<std::uint64_t> action_ids(n);
    for (std::int64_t i = 0; i < n; ++i) {
        std::vector<int> idx(space.size());
        for (std::size_t j = 0; j < space.size(); ++j)
            idx[j] = static_cast<int>(
                rng.uniform_int(space.param(j).values.size()));
        action_ids[i] = space.rank_of(idx);
    }

    SearchReport report;
    report.mode = SearchMode::Random;
    report.seed = cfg.seed;
    report.rows.assign(n, EpisodeRow{});

    if (cfg.execution == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 64)
        for (std::int64_t i = 0; i < n; ++i) {
            report.rows[i] =
                make_row(i, action_ids[i],
                         evaluator.evaluate(space.action_at(action_ids[i])));
        }
    } else {
        for (std::int64_t i = 0; i < n; ++i) {
            report.rows[i] =
                make_row(i, action_ids[i],
                         evaluator.evaluate(space.action_at(action_ids[i])));
        }
    }

    finalize(report);
    return report;
}

SearchReport run_brute(const SearchSpace& space, const SearchConfig& cfg,
                       const EpisodeEvaluator& evaluator) {
    const std::uint64_t card = space.cardinality();
    if (card > cfg.brute_budget)
        throw ConfigError("brute mode refused: cardinality " +
                          std::to_string(card) + " exceeds budget " +
                          std::to_string(cfg.brute_budget));

    SearchReport report;
    report.mode = SearchMode::Brute;
    report.seed = cfg.seed;
    const auto n = static_cast<std::int64_t>(card);
    report.rows.assign(n, EpisodeRow{});

    if (cfg.execution == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 256)
        for (std::int64_t i = 0; i < n; ++i) {
            report.rows[i] = make_row(
                i, static_cast<std::uint64_t>(i),
                evaluator.evaluate(space.action_at(i)));
        }
    } else {
        for (std::int64_t i = 0; i < n; ++i) {
            report.rows[i] = make_row(
                i, static_cast<std::uint64_t>(i),
                evaluator.evaluate(space.action_at(i)));
        }
    }

    finalize(report);
    return report;
}

void write_episodes_csv(std::ostream& os, const SearchReport& report,
                        const SearchSpace& space) {
    os << "episode";
    for (const auto& p : space.params()) os << ",idx_" << p.name;
    for (const auto& p : space.params()) os << ",val_" << p.name;
    os << ",r_highrisk,r_distance,r_collision,total,highrisk_count,"
          "total_timesteps,final_distance,collision,challenging,epsilon,"
          "explored,moving_avg100\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const EpisodeRow& row = report.rows[i];
        const ScenarioAction action = space.action_at(row.action_id);
        os << row.episode;
        for (int idx : action.indices) os << ',' << idx;
        for (double v : action.values) os << ',' << g17(v);
        os << ',' << g17(row.reward.r_highrisk) << ','
           << g17(row.reward.r_distance) << ',' << g17(row.reward.r_collision)
           << ',' << g17(row.reward.total) << ',' << row.reward.highrisk_count
           << ',' << row.reward.total_timesteps << ','
           << g17(row.reward.final_distance) << ',' << (row.collision ? 1 : 0)
           << ',' << (row.challenging ? 1 : 0) << ',' << g17(row.epsilon)
           << ',' << (row.explored ? 1 : 0) << ',';
        if (!std::isnan(report.moving_avg[i])) os << g17(report.moving_avg[i]);
        os << '\n';
    }
}

void write_summary(std::ostream& os, const SearchReport& report,
                   const SearchSpace& space) {
    os << "mode: " << to_string(report.mode) << '\n';
    os << "seed: " << report.seed << '\n';
    os << "episodes: " << report.rows.size() << '\n';
    if (report.best_episode >= 0) {
        const EpisodeRow& best = report.rows[report.best_episode];
        const ScenarioAction action = space.action_at(best.action_id);
        os << "best_episode: " << best.episode << '\n';
        os << "best_reward: " << g17(best.reward.total) << '\n';
        os << "best_action:\n";
        for (std::size_t j = 0; j < space.size(); ++j)
            os << "  " << space.param(j).name << ": "
               << g17(action.values[j]) << " (index " << action.indices[j]
               << ")\n";
    }
    os << "first_challenging_episode: ";
    if (report.first_challenging)
        os << *report.first_challenging << '\n';
    else
        os << "none\n";
    os << "challenging_count: " << report.challenging_count << '\n';
    os << "non_challenging_count: "
       << (static_cast<std::int64_t>(report.rows.size()) -
           report.challenging_count)
       << '\n';
    os << "collision_count: " << report.collision_count << '\n';
}

}  // namespace falsify
