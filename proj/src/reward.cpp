#include "falsify/reward.hpp"

#include <algorithm>
#include <stdexcept>

#include "falsify/errors.hpp"

namespace falsify {

double normalize_affine(double x, double lo, double hi, double a, double b) {
    if (hi == lo)
        throw ConfigError("normalize_affine: degenerate range (hi == lo)");
    return (b - a) * (x - lo) / (hi - lo) + a;
}

double reward_highrisk(int highrisk_count, int total_timesteps) {
    return normalize_affine(static_cast<double>(highrisk_count), 0.0,
                            static_cast<double>(total_timesteps), -0.01, 0.01);
}

double reward_distance(double final_distance, double d_max) {
    if (d_max <= 0) throw ConfigError("reward: d_max must be > 0");
    const double u = std::clamp(final_distance / d_max, 0.0, 1.0);
    return normalize_affine(1.0 - u, 0.0, 1.0, -0.01, 0.01);
}

RewardBreakdown total_reward(const EpisodeTrace& trace,
                             const RewardConfig& cfg) {
    if (trace.records.empty())
        throw std::invalid_argument("total_reward: empty trace");
    RewardBreakdown r;
    r.highrisk_count = trace.highrisk_count();
    r.total_timesteps = static_cast<int>(trace.records.size());
    r.final_distance = trace.back().euclid_dist;
    r.r_highrisk = reward_highrisk(r.highrisk_count, r.total_timesteps);
    r.r_distance = reward_distance(r.final_distance, cfg.d_max);
    r.r_collision = trace.collision ? cfg.collision_bonus : 0.0;
    r.total = r.r_highrisk + r.r_distance + r.r_collision;
    return r;
}

ScenarioVerdict classify_scenario(const EpisodeTrace& trace,
                                  const RewardConfig& cfg) {
    if (trace.records.empty())
        throw std::invalid_argument("classify_scenario: empty trace");
    ScenarioVerdict v;
    v.collision = trace.collision;
    v.highrisk_fraction = static_cast<double>(trace.highrisk_count()) /
                          static_cast<double>(trace.records.size());
    v.challenging =
        v.highrisk_fraction >= cfg.challenging_threshold || v.collision;
    return v;
}

}  // namespace falsify
