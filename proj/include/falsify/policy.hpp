#ifndef FALSIFY_POLICY_HPP
#define FALSIFY_POLICY_HPP

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "falsify/rng.hpp"

namespace falsify {

struct PolicyConfig {
    int hidden = 16;            // recurrent state width
    int embed = 8;              // input token embedding width
    double learning_rate = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double init_scale = 0.08;   // uniform init bound; heads start at zero
    bool include_explored = true;  // epsilon-random episodes still train
    bool use_baseline = false;     // moving-average return baseline
    double baseline_decay = 0.9;
    // standardize returns within each batch before the gradient; makes
    // the small shaped rewards steer the search long before the first
    // full-reward episode shows up
    bool normalize_returns = true;
};

struct ExplorationSchedule {
    double epsilon = 1.0;
    double decay = 0.995;
    double epsilon_min = 0.01;

    void step() { epsilon = std::max(epsilon * decay, epsilon_min); }
};

// Activations captured while sampling, reused by the update so the batch
// gradient needs no second forward pass. hidden is P x H row-major;
// probs stores the P distributions back to back.
struct ForwardCache {
    std::vector<int> tokens;
    std::vector<double> hidden;
    std::vector<double> probs;
};

// One trajectory: the conditioning state (previous action; empty means
// the start-of-search state), the sampled action, and its return.
struct EpisodeRecord {
    std::vector<int> state;
    std::vector<int> action;
    std::vector<double> log_prob_per_param;  // each <= 0
    double episode_return = 0.0;
    bool explored = false;
    ForwardCache cache;
};

// Recurrent stochastic policy over a discrete parameter grid: a shared
// tanh cell unrolled once per parameter, with a softmax head per
// parameter sized to that parameter's value count. Trained by REINFORCE
// with an Adam ascent step.
class Policy {
public:
    Policy(std::vector<int> head_sizes, const PolicyConfig& cfg,
           std::uint64_t init_seed);

    const PolicyConfig& config() const { return cfg_; }
    const std::vector<int>& head_sizes() const { return heads_; }
    std::size_t parameter_count() const { return theta_.size(); }

    // One probability vector per parameter, conditioned on the previous
    // action (empty = start state). Each vector sums to 1 within 1e-9.
    std::vector<std::vector<double>> forward(
        const std::vector<int>& state) const;

    // Draws an action: uniform over every head with probability epsilon,
    // otherwise from the forward distributions. Log-probabilities always
    // come from the forward distributions so the update target is
    // well-defined for explored episodes too. Decays epsilon.
    EpisodeRecord sample(const std::vector<int>& state,
                         ExplorationSchedule& schedule, Rng& rng) const;

    // One REINFORCE step over the batch: ascends the mean of
    // return-weighted log-probability gradients. Throws on an empty
    // batch and on non-finite weights after the step.
    void reinforce_update(std::span<const EpisodeRecord> batch,
                          double learning_rate);
    void reinforce_update(std::span<const EpisodeRecord> batch) {
        reinforce_update(batch, cfg_.learning_rate);
    }

    // The REINFORCE estimate itself: mean over the batch of
    // return-weighted log-probability gradients with respect to every
    // weight. reinforce_update feeds this to Adam; tests compare it
    // against finite differences.
    std::vector<double> batch_gradient(
        std::span<const EpisodeRecord> batch) const;

    // Raw flat weight storage (embeddings, cell, heads); exposed for the
    // finite-difference oracle and checkpointing.
    std::vector<double>& parameters() { return theta_; }
    const std::vector<double>& parameters() const { return theta_; }

    // Offsets of head i's weight matrix (K_i x hidden) and bias within
    // the flat parameter vector.
    std::size_t head_weight_offset(std::size_t i) const {
        return layout_.head_w_off[i];
    }
    std::size_t head_bias_offset(std::size_t i) const {
        return layout_.head_b_off[i];
    }

    std::uint64_t update_steps() const { return adam_step_; }
    double baseline() const { return baseline_; }

    void save(std::ostream& os) const;
    static Policy load(std::istream& is);

private:
    struct Layout {
        std::size_t embed_rows = 0;
        std::size_t embed_off = 0;
        std::size_t wxh_off = 0;
        std::size_t whh_off = 0;
        std::size_t bh_off = 0;
        std::vector<std::size_t> head_w_off;
        std::vector<std::size_t> head_b_off;
        std::vector<std::size_t> prob_off;  // start of head i in ForwardCache::probs
        std::vector<int> token_base;        // embed row of (param i, value 0)
        std::size_t total = 0;
        std::size_t probs_total = 0;
    };

    Policy(std::vector<int> head_sizes, const PolicyConfig& cfg);

    Layout make_layout() const;
    ForwardCache run_forward(const std::vector<int>& state) const;
    void accumulate_gradient(const EpisodeRecord& rec, double coef,
                             std::vector<double>& grad) const;
    void check_finite() const;

    std::vector<int> heads_;
    PolicyConfig cfg_;
    Layout layout_;
    std::vector<double> theta_;
    std::vector<double> adam_m_;
    std::vector<double> adam_v_;
    std::uint64_t adam_step_ = 0;
    double baseline_ = 0.0;
};

}  // namespace falsify

#endif
