// Times the parallel episode-evaluation kernel against the serial
// reference on the same workload, then reports per-episode cost of the
// rl loop on both presets.

#include <chrono>
#include <cstdio>

#include "falsify/param_space.hpp"
#include "falsify/search.hpp"

using namespace falsify;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

SearchConfig base_config(SearchMode mode, Execution exec) {
    SearchConfig cfg;
    cfg.mode = mode;
    cfg.execution = exec;
    cfg.seed = 1;
    return cfg;
}

}  // namespace

int main() {
    const SearchSpace paper5 = build_paper_preset();
    const SearchSpace paper7 = build_scalability_preset();
    const WorldConfig world;
    const RssConfig rss;
    const RewardConfig reward;

    {
        const SimEvaluator evaluator(paper5, world, rss, reward);
        SearchConfig cfg = base_config(SearchMode::Brute, Execution::Serial);

        auto t0 = Clock::now();
        const SearchReport serial = run_brute(paper5, cfg, evaluator);
        const double t_serial = seconds_since(t0);

        cfg.execution = Execution::Parallel;
        t0 = Clock::now();
        const SearchReport parallel = run_brute(paper5, cfg, evaluator);
        const double t_parallel = seconds_since(t0);

        bool identical = serial.rows.size() == parallel.rows.size();
        for (std::size_t i = 0; identical && i < serial.rows.size(); ++i)
            identical = serial.rows[i].action_id == parallel.rows[i].action_id &&
                        serial.rows[i].reward.total ==
                            parallel.rows[i].reward.total;

        std::printf("brute paper5 (%zu episodes)\n", serial.rows.size());
        std::printf("  serial:   %8.3f s  (%6.2f us/episode)\n", t_serial,
                    1e6 * t_serial / serial.rows.size());
        std::printf("  parallel: %8.3f s  (%6.2f us/episode)\n", t_parallel,
                    1e6 * t_parallel / parallel.rows.size());
        std::printf("  speedup:  %8.2fx   results identical: %s\n",
                    t_serial / t_parallel, identical ? "yes" : "NO");
    }

    for (const auto* entry : {&paper5, &paper7}) {
        const SearchSpace& space = *entry;
        const SimEvaluator evaluator(space, world, rss, reward);
        SearchConfig cfg = base_config(SearchMode::Rl, Execution::Serial);
        cfg.max_episodes = 4000;

        const auto t0 = Clock::now();
        const SearchReport report = run_search(space, cfg, evaluator);
        const double dt = seconds_since(t0);
        std::printf("rl %zu-parameter preset: %.3f s (%6.2f us/episode)\n",
                    space.size(), dt, 1e6 * dt / report.rows.size());
    }
    return 0;
}
