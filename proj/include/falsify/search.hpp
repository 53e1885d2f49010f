#ifndef FALSIFY_SEARCH_HPP
#define FALSIFY_SEARCH_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "falsify/param_space.hpp"
#include "falsify/policy.hpp"
#include "falsify/reward.hpp"
#include "falsify/sim.hpp"

namespace falsify {

// How the search loop scores one concrete scenario. Implementations must
// be pure and thread-safe: the random and brute baselines evaluate
// episodes from a parallel worker pool.
class EpisodeEvaluator {
public:
    struct Outcome {
        RewardBreakdown reward;
        ScenarioVerdict verdict;
    };

    virtual ~EpisodeEvaluator() = default;
    virtual Outcome evaluate(const ScenarioAction& action) const = 0;
};

// Production evaluator: simulate, score, classify.
class SimEvaluator final : public EpisodeEvaluator {
public:
    SimEvaluator(const SearchSpace& space, WorldConfig world, RssConfig rss,
                 RewardConfig reward);
    SimEvaluator(const SearchSpace& space, WorldConfig world, RssConfig rss,
                 RewardConfig reward, const Sut& sut);

    Outcome evaluate(const ScenarioAction& action) const override;
    EpisodeTrace trace(const ScenarioAction& action) const;

private:
    const SearchSpace* space_;
    WorldConfig world_;
    RssConfig rss_;
    RewardConfig reward_;
    std::unique_ptr<Sut> owned_sut_;
    const Sut* sut_;
};

enum class SearchMode { Rl, Random, Brute };
enum class Execution { Serial, Parallel };

std::string to_string(SearchMode m);

struct SearchConfig {
    SearchMode mode = SearchMode::Rl;
    std::int64_t max_episodes = 4000;
    int batch_size = 25;
    std::uint64_t seed = 0;
    std::uint64_t brute_budget = 2'000'000;
    Execution execution = Execution::Parallel;  // random/brute modes only
    PolicyConfig policy;
    ExplorationSchedule exploration;
};

struct EpisodeRow {
    std::int64_t episode = 0;
    std::uint64_t action_id = 0;  // lexicographic rank within the space
    RewardBreakdown reward;
    bool challenging = false;
    bool collision = false;
    double epsilon = 0.0;  // exploration rate when sampled; 0 outside rl
    bool explored = false;
};

struct SearchReport {
    SearchMode mode = SearchMode::Rl;
    std::uint64_t seed = 0;
    std::vector<EpisodeRow> rows;
    // reward moving average, window 100; NaN until the window fills
    std::vector<double> moving_avg;
    std::int64_t best_episode = -1;
    std::optional<std::int64_t> first_challenging;
    std::int64_t challenging_count = 0;
    std::int64_t collision_count = 0;

    double best_reward() const;
};

// REINFORCE-driven falsification loop: the controller proposes an action
// conditioned on the previous one, the evaluator scores it, and the
// policy updates every batch_size episodes. Sequential by nature.
// Deterministic per cfg.seed. The trained policy is copied to out_policy
// when given.
SearchReport run_search(const SearchSpace& space, const SearchConfig& cfg,
                        const EpisodeEvaluator& evaluator,
                        Policy* out_policy = nullptr);

// Uniform-random baseline over the same space and report schema.
SearchReport run_random(const SearchSpace& space, const SearchConfig& cfg,
                        const EpisodeEvaluator& evaluator);

// Exhaustive baseline: every action exactly once, in enumeration order.
// Refuses (ConfigError) when the space cardinality exceeds
// cfg.brute_budget.
SearchReport run_brute(const SearchSpace& space, const SearchConfig& cfg,
                       const EpisodeEvaluator& evaluator);

// episodes.csv: one row per episode in the schema documented in the
// README; actions resolved through the space. 17-digit floats.
void write_episodes_csv(std::ostream& os, const SearchReport& report,
                        const SearchSpace& space);

// Human-readable run summary: best action, best reward, first
// challenging episode, verdict census.
void write_summary(std::ostream& os, const SearchReport& report,
                   const SearchSpace& space);

}  // namespace falsify

#endif
