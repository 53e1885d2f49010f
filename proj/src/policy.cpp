#include "falsify/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace falsify {

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x46504f4c;  // "FPOL"
constexpr std::uint32_t kCheckpointVersion = 1;

void softmax_inplace(double* logits, int n) {
    const double m = *std::max_element(logits, logits + n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        logits[i] = std::exp(logits[i] - m);
        sum += logits[i];
    }
    for (int i = 0; i < n; ++i) logits[i] /= sum;
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("policy checkpoint: truncated stream");
    return v;
}

void write_vec(std::ostream& os, const std::vector<double>& v) {
    write_pod<std::uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_vec(std::istream& is) {
    const auto n = read_pod<std::uint64_t>(is);
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("policy checkpoint: truncated stream");
    return v;
}

}  // namespace

Policy::Policy(std::vector<int> head_sizes, const PolicyConfig& cfg)
    : heads_(std::move(head_sizes)), cfg_(cfg) {
    if (heads_.empty())
        throw std::invalid_argument("policy needs at least one head");
    for (int k : heads_)
        if (k < 1) throw std::invalid_argument("head size must be >= 1");
    layout_ = make_layout();
    theta_.assign(layout_.total, 0.0);
    adam_m_.assign(layout_.total, 0.0);
    adam_v_.assign(layout_.total, 0.0);
}

Policy::Policy(std::vector<int> head_sizes, const PolicyConfig& cfg,
               std::uint64_t init_seed)
    : Policy(std::move(head_sizes), cfg) {
    Rng rng(init_seed);
    // embeddings and cell get small uniform noise; heads stay zero so the
    // initial policy is exactly uniform
    const std::size_t cell_end = layout_.bh_off + cfg_.hidden;
    for (std::size_t i = 0; i < cell_end; ++i)
        theta_[i] = rng.uniform(-cfg_.init_scale, cfg_.init_scale);
}

Policy::Layout Policy::make_layout() const {
    Layout L;
    const std::size_t H = cfg_.hidden;
    const std::size_t E = cfg_.embed;
    L.embed_rows = 1;  // start token
    L.token_base.reserve(heads_.size());
    for (int k : heads_) {
        L.token_base.push_back(static_cast<int>(L.embed_rows));
        L.embed_rows += static_cast<std::size_t>(k);
    }
    L.embed_off = 0;
    L.wxh_off = L.embed_rows * E;
    L.whh_off = L.wxh_off + H * E;
    L.bh_off = L.whh_off + H * H;
    std::size_t off = L.bh_off + H;
    std::size_t poff = 0;
    for (int k : heads_) {
        L.head_w_off.push_back(off);
        off += static_cast<std::size_t>(k) * H;
        L.head_b_off.push_back(off);
        off += static_cast<std::size_t>(k);
        L.prob_off.push_back(poff);
        poff += static_cast<std::size_t>(k);
    }
    L.total = off;
    L.probs_total = poff;
    return L;
}

ForwardCache Policy::run_forward(const std::vector<int>& state) const {
    if (!state.empty() && state.size() != heads_.size())
        throw std::invalid_argument("state length does not match head count");
    const int H = cfg_.hidden;
    const int E = cfg_.embed;
    const std::size_t P = heads_.size();
    const double* th = theta_.data();

    ForwardCache cache;
    cache.tokens.resize(P);
    cache.hidden.assign(P * H, 0.0);
    cache.probs.assign(layout_.probs_total, 0.0);

    const double* h_prev = nullptr;  // null on the first step (zero state)
    for (std::size_t i = 0; i < P; ++i) {
        int token = 0;
        if (!state.empty()) {
            const int v = state[i];
            if (v < 0 || v >= heads_[i])
                throw std::invalid_argument(
                    "state index out of range for its parameter");
            token = layout_.token_base[i] + v;
        }
        cache.tokens[i] = token;
        const double* x = th + layout_.embed_off +
                          static_cast<std::size_t>(token) * E;

        double* h = cache.hidden.data() + i * H;
        const double* wxh = th + layout_.wxh_off;
        const double* whh = th + layout_.whh_off;
        const double* bh = th + layout_.bh_off;
        for (int r = 0; r < H; ++r) {
            double a = bh[r];
            const double* wx = wxh + static_cast<std::size_t>(r) * E;
#pragma omp simd reduction(+ : a)
            for (int c = 0; c < E; ++c) a += wx[c] * x[c];
            if (h_prev) {
                const double* wh = whh + static_cast<std::size_t>(r) * H;
#pragma omp simd reduction(+ : a)
                for (int c = 0; c < H; ++c) a += wh[c] * h_prev[c];
            }
            h[r] = std::tanh(a);
        }

        const int K = heads_[i];
        double* logits = cache.probs.data() + layout_.prob_off[i];
        const double* wo = th + layout_.head_w_off[i];
        const double* bo = th + layout_.head_b_off[i];
        for (int k = 0; k < K; ++k) {
            double a = bo[k];
            const double* w = wo + static_cast<std::size_t>(k) * H;
#pragma omp simd reduction(+ : a)
            for (int c = 0; c < H; ++c) a += w[c] * h[c];
            logits[k] = a;
        }
        softmax_inplace(logits, K);
        h_prev = h;
    }
    return cache;
}

std::vector<std::vector<double>> Policy::forward(
    const std::vector<int>& state) const {
    const ForwardCache cache = run_forward(state);
    std::vector<std::vector<double>> probs(heads_.size());
    for (std::size_t i = 0; i < heads_.size(); ++i) {
        const double* p = cache.probs.data() + layout_.prob_off[i];
        probs[i].assign(p, p + heads_[i]);
    }
    return probs;
}

EpisodeRecord Policy::sample(const std::vector<int>& state,
                             ExplorationSchedule& schedule, Rng& rng) const {
    EpisodeRecord rec;
    rec.state = state;
    rec.cache = run_forward(state);
    rec.explored = rng.uniform01() < schedule.epsilon;

    const std::size_t P = heads_.size();
    rec.action.resize(P);
    rec.log_prob_per_param.resize(P);
    for (std::size_t i = 0; i < P; ++i) {
        const int K = heads_[i];
        const double* probs = rec.cache.probs.data() + layout_.prob_off[i];
        int choice;
        if (rec.explored) {
            choice = static_cast<int>(rng.uniform_int(K));
        } else {
            const double u = rng.uniform01();
            double acc = 0.0;
            choice = K - 1;
            for (int k = 0; k < K; ++k) {
                acc += probs[k];
                if (u < acc) {
                    choice = k;
                    break;
                }
            }
        }
        rec.action[i] = choice;
        rec.log_prob_per_param[i] = std::log(probs[choice]);
    }
    schedule.step();
    return rec;
}

void Policy::accumulate_gradient(const EpisodeRecord& rec, double coef,
                                 std::vector<double>& grad) const {
    const int H = cfg_.hidden;
    const int E = cfg_.embed;
    const std::size_t P = heads_.size();
    ForwardCache recomputed;
    const ForwardCache* cached = &rec.cache;
    if (cached->tokens.empty()) {
        recomputed = run_forward(rec.state);
        cached = &recomputed;
    }
    const ForwardCache& fc = *cached;

    const double* th = theta_.data();
    double* g = grad.data();

    std::vector<double> dh(H, 0.0);        // gradient flowing into h_i
    std::vector<double> dh_carry(H, 0.0);  // recurrence term from step i+1
    std::vector<double> da(H);
    for (std::size_t i = P; i-- > 0;) {
        const int K = heads_[i];
        const double* h = fc.hidden.data() + i * static_cast<std::size_t>(H);
        const double* probs = fc.probs.data() + layout_.prob_off[i];

        for (int c = 0; c < H; ++c) dh[c] = dh_carry[c];
        const double* wo = th + layout_.head_w_off[i];
        double* gwo = g + layout_.head_w_off[i];
        double* gbo = g + layout_.head_b_off[i];
        for (int k = 0; k < K; ++k) {
            const double dlogit =
                coef * ((k == rec.action[i] ? 1.0 : 0.0) - probs[k]);
            gbo[k] += dlogit;
            const double* w = wo + static_cast<std::size_t>(k) * H;
            double* gw = gwo + static_cast<std::size_t>(k) * H;
#pragma omp simd
            for (int c = 0; c < H; ++c) gw[c] += dlogit * h[c];
#pragma omp simd
            for (int c = 0; c < H; ++c) dh[c] += dlogit * w[c];
        }

        for (int r = 0; r < H; ++r) da[r] = dh[r] * (1.0 - h[r] * h[r]);

        const double* x = th + layout_.embed_off +
                          static_cast<std::size_t>(fc.tokens[i]) * E;
        double* gx = g + layout_.embed_off +
                     static_cast<std::size_t>(fc.tokens[i]) * E;
        const double* wxh = th + layout_.wxh_off;
        double* gwxh = g + layout_.wxh_off;
        double* gbh = g + layout_.bh_off;
        for (int r = 0; r < H; ++r) {
            gbh[r] += da[r];
            const double* wx = wxh + static_cast<std::size_t>(r) * E;
            double* gwx = gwxh + static_cast<std::size_t>(r) * E;
#pragma omp simd
            for (int c = 0; c < E; ++c) gwx[c] += da[r] * x[c];
#pragma omp simd
            for (int c = 0; c < E; ++c) gx[c] += da[r] * wx[c];
        }

        const double* whh = th + layout_.whh_off;
        double* gwhh = g + layout_.whh_off;
        if (i > 0) {
            const double* h_prev =
                fc.hidden.data() + (i - 1) * static_cast<std::size_t>(H);
            std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
            for (int r = 0; r < H; ++r) {
                double* gwh = gwhh + static_cast<std::size_t>(r) * H;
                const double* wh = whh + static_cast<std::size_t>(r) * H;
#pragma omp simd
                for (int c = 0; c < H; ++c) gwh[c] += da[r] * h_prev[c];
#pragma omp simd
                for (int c = 0; c < H; ++c) dh_carry[c] += da[r] * wh[c];
            }
        }
        // h_{-1} is the zero vector, so step 0 adds nothing to W_hh
    }
}

std::vector<double> Policy::batch_gradient(
    std::span<const EpisodeRecord> batch) const {
    if (batch.empty())
        throw std::invalid_argument("batch_gradient: empty batch");
    const double n = static_cast<double>(batch.size());

    double shift = cfg_.use_baseline ? baseline_ : 0.0;
    double scale = 1.0;
    if (cfg_.normalize_returns && batch.size() > 1) {
        double mean = 0.0;
        for (const EpisodeRecord& rec : batch) mean += rec.episode_return;
        mean /= n;
        double var = 0.0;
        for (const EpisodeRecord& rec : batch) {
            const double d = rec.episode_return - mean;
            var += d * d;
        }
        const double sd = std::sqrt(var / n);
        shift = mean;
        if (sd > 1e-12) scale = 1.0 / sd;
    }

    std::vector<double> grad(theta_.size(), 0.0);
    for (const EpisodeRecord& rec : batch) {
        if (rec.explored && !cfg_.include_explored) continue;
        accumulate_gradient(
            rec, (rec.episode_return - shift) * scale / n, grad);
    }
    return grad;
}

void Policy::reinforce_update(std::span<const EpisodeRecord> batch,
                              double learning_rate) {
    const std::vector<double> grad = batch_gradient(batch);

    ++adam_step_;
    const double bc1 = 1.0 - std::pow(cfg_.adam_beta1,
                                      static_cast<double>(adam_step_));
    const double bc2 = 1.0 - std::pow(cfg_.adam_beta2,
                                      static_cast<double>(adam_step_));
    for (std::size_t i = 0; i < theta_.size(); ++i) {
        adam_m_[i] = cfg_.adam_beta1 * adam_m_[i] +
                     (1.0 - cfg_.adam_beta1) * grad[i];
        adam_v_[i] = cfg_.adam_beta2 * adam_v_[i] +
                     (1.0 - cfg_.adam_beta2) * grad[i] * grad[i];
        const double m_hat = adam_m_[i] / bc1;
        const double v_hat = adam_v_[i] / bc2;
        theta_[i] += learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.adam_eps);
    }

    if (cfg_.use_baseline) {
        double mean = 0.0;
        for (const EpisodeRecord& rec : batch) mean += rec.episode_return;
        mean /= static_cast<double>(batch.size());
        baseline_ = cfg_.baseline_decay * baseline_ +
                    (1.0 - cfg_.baseline_decay) * mean;
    }

    check_finite();
}

void Policy::check_finite() const {
    for (double v : theta_)
        if (!std::isfinite(v))
            throw std::runtime_error("policy weights became non-finite");
}

void Policy::save(std::ostream& os) const {
    write_pod(os, kCheckpointMagic);
    write_pod(os, kCheckpointVersion);
    write_pod<std::int32_t>(os, cfg_.hidden);
    write_pod<std::int32_t>(os, cfg_.embed);
    write_pod(os, cfg_.learning_rate);
    write_pod(os, cfg_.adam_beta1);
    write_pod(os, cfg_.adam_beta2);
    write_pod(os, cfg_.adam_eps);
    write_pod(os, cfg_.init_scale);
    write_pod<std::uint8_t>(os, cfg_.include_explored ? 1 : 0);
    write_pod<std::uint8_t>(os, cfg_.use_baseline ? 1 : 0);
    write_pod(os, cfg_.baseline_decay);
    write_pod<std::uint64_t>(os, heads_.size());
    for (int k : heads_) write_pod<std::int32_t>(os, k);
    write_vec(os, theta_);
    write_vec(os, adam_m_);
    write_vec(os, adam_v_);
    write_pod<std::uint64_t>(os, adam_step_);
    write_pod(os, baseline_);
}

Policy Policy::load(std::istream& is) {
    if (read_pod<std::uint32_t>(is) != kCheckpointMagic)
        throw std::runtime_error("policy checkpoint: bad magic");
    if (read_pod<std::uint32_t>(is) != kCheckpointVersion)
        throw std::runtime_error("policy checkpoint: unsupported version");
    PolicyConfig cfg;
    cfg.hidden = read_pod<std::int32_t>(is);
    cfg.embed = read_pod<std::int32_t>(is);
    cfg.learning_rate = read_pod<double>(is);
    cfg.adam_beta1 = read_pod<double>(is);
    cfg.adam_beta2 = read_pod<double>(is);
    cfg.adam_eps = read_pod<double>(is);
    cfg.init_scale = read_pod<double>(is);
    cfg.include_explored = read_pod<std::uint8_t>(is) != 0;
    cfg.use_baseline = read_pod<std::uint8_t>(is) != 0;
    cfg.baseline_decay = read_pod<double>(is);
    const auto p = read_pod<std::uint64_t>(is);
    std::vector<int> heads(p);
    for (auto& k : heads) k = read_pod<std::int32_t>(is);

    Policy policy(std::move(heads), cfg);
    policy.theta_ = read_vec(is);
    policy.adam_m_ = read_vec(is);
    policy.adam_v_ = read_vec(is);
    if (policy.theta_.size() != policy.layout_.total ||
        policy.adam_m_.size() != policy.layout_.total ||
        policy.adam_v_.size() != policy.layout_.total)
        throw std::runtime_error("policy checkpoint: shape mismatch");
    policy.adam_step_ = read_pod<std::uint64_t>(is);
    policy.baseline_ = read_pod<double>(is);
    return policy;
}

}  // namespace falsify
