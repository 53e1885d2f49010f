#ifndef FALSIFY_REWARD_HPP
#define FALSIFY_REWARD_HPP

#include "falsify/sim.hpp"

namespace falsify {

struct RewardConfig {
    double d_max = 50.0;            // m, distance normalization bound
    double collision_bonus = 0.25;
    double challenging_threshold = 0.5;  // high-risk fraction
};

struct RewardBreakdown {
    double r_highrisk = 0.0;   // in [-0.01, 0.01]
    double r_distance = 0.0;   // in [-0.01, 0.01]
    double r_collision = 0.0;  // 0 or collision_bonus
    double total = 0.0;
    int highrisk_count = 0;
    int total_timesteps = 0;
    double final_distance = 0.0;  // m
};

struct ScenarioVerdict {
    bool challenging = false;
    double highrisk_fraction = 0.0;
    bool collision = false;
};

// Affine rescale of x from [lo, hi] onto [a, b]. Throws ConfigError when
// hi == lo (degenerate range).
double normalize_affine(double x, double lo, double hi, double a, double b);

// High-risk timestep count rescaled onto [-0.01, 0.01].
double reward_highrisk(int highrisk_count, int total_timesteps);

// Final pedestrian distance, clamped to [0, d_max], reversed, rescaled
// onto [-0.01, 0.01]; closer endings score higher.
double reward_distance(double final_distance, double d_max);

RewardBreakdown total_reward(const EpisodeTrace& trace,
                             const RewardConfig& cfg);

ScenarioVerdict classify_scenario(const EpisodeTrace& trace,
                                  const RewardConfig& cfg);

}  // namespace falsify

#endif
