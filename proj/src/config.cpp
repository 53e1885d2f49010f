#include "falsify/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "falsify/errors.hpp"

namespace falsify {

using nlohmann::json;

namespace {

// Wraps a json object so every access is validated and unknown keys are
// reported by their full dotted path.
class Section {
public:
    Section(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
        if (!j.is_object())
            throw ConfigError("'" + path_ + "' must be an object");
    }

    bool has(const std::string& key) const {
        seen_.insert(key);
        return j_->contains(key);
    }

    template <typename T>
    void get_to(const std::string& key, T& out) const {
        if (!has(key)) return;
        const json& v = (*j_)[key];
        try {
            out = v.get<T>();
        } catch (const json::exception&) {
            throw ConfigError("bad value for key '" + dotted(key) + "'");
        }
    }

    json require(const std::string& key) const {
        if (!has(key))
            throw ConfigError("missing key '" + dotted(key) + "'");
        return (*j_)[key];
    }

    std::string dotted(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    void reject_unknown() const {
        for (auto it = j_->begin(); it != j_->end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError("unknown key '" + dotted(it.key()) + "'");
    }

    const json& raw() const { return *j_; }

private:
    const json* j_;
    std::string path_;
    mutable std::set<std::string> seen_;
};

WorldConfig parse_world(const json& j) {
    WorldConfig w;
    Section s(j, "world");
    s.get_to("dt", w.dt);
    s.get_to("max_timesteps", w.max_timesteps);
    s.get_to("crossing_x", w.crossing_x);
    s.get_to("lane_half_width", w.lane_half_width);
    s.get_to("ego_target_speed", w.ego_target_speed);
    s.get_to("ego_accel", w.ego_accel);
    s.get_to("cas_brake_decel", w.cas_brake_decel);
    s.get_to("cas_base_range", w.cas_base_range);
    s.get_to("weather_range_factor", w.weather_range_factor);
    s.get_to("car_half_length", w.car_half_length);
    s.get_to("car_half_width", w.car_half_width);
    s.get_to("ped_speed_cap", w.ped_speed_cap);
    s.get_to("end_margin", w.end_margin);
    s.reject_unknown();
    if (w.dt <= 0) throw ConfigError("'world.dt' must be > 0");
    if (w.max_timesteps < 1)
        throw ConfigError("'world.max_timesteps' must be >= 1");
    if (w.cas_base_range <= 0)
        throw ConfigError("'world.cas_base_range' must be > 0");
    return w;
}

RssConfig parse_rss(const json& j) {
    RssConfig r;
    Section s(j, "rss");
    s.get_to("response_time", r.response_time);
    s.get_to("accel_max", r.accel_max);
    s.get_to("brake_min", r.brake_min);
    s.get_to("brake_max", r.brake_max);
    if (s.has("front_velocity_mode")) {
        std::string mode;
        s.get_to("front_velocity_mode", mode);
        if (mode == "zero")
            r.front_velocity_mode = FrontVelocityMode::Zero;
        else if (mode == "projected")
            r.front_velocity_mode = FrontVelocityMode::Projected;
        else
            throw ConfigError(
                "'rss.front_velocity_mode' must be 'zero' or 'projected'");
    }
    s.reject_unknown();
    if (r.response_time < 0)
        throw ConfigError("'rss.response_time' must be >= 0");
    if (r.accel_max <= 0 || r.brake_min <= 0 || r.brake_max <= 0)
        throw ConfigError("'rss' accelerations must be > 0");
    return r;
}

RewardConfig parse_reward(const json& j) {
    RewardConfig r;
    Section s(j, "reward");
    s.get_to("d_max", r.d_max);
    s.get_to("collision_bonus", r.collision_bonus);
    s.get_to("challenging_threshold", r.challenging_threshold);
    s.reject_unknown();
    if (r.d_max <= 0) throw ConfigError("'reward.d_max' must be > 0");
    return r;
}

void parse_controller(const json& j, PolicyConfig& p,
                      ExplorationSchedule& e) {
    Section s(j, "controller");
    s.get_to("hidden", p.hidden);
    s.get_to("embed", p.embed);
    s.get_to("learning_rate", p.learning_rate);
    s.get_to("adam_beta1", p.adam_beta1);
    s.get_to("adam_beta2", p.adam_beta2);
    s.get_to("adam_eps", p.adam_eps);
    s.get_to("init_scale", p.init_scale);
    s.get_to("include_explored", p.include_explored);
    s.get_to("use_baseline", p.use_baseline);
    s.get_to("baseline_decay", p.baseline_decay);
    s.get_to("normalize_returns", p.normalize_returns);
    s.get_to("epsilon", e.epsilon);
    s.get_to("epsilon_decay", e.decay);
    s.get_to("epsilon_min", e.epsilon_min);
    s.reject_unknown();
    if (p.hidden < 1) throw ConfigError("'controller.hidden' must be >= 1");
    if (p.embed < 1) throw ConfigError("'controller.embed' must be >= 1");
    if (e.epsilon < 0 || e.epsilon > 1)
        throw ConfigError("'controller.epsilon' must be in [0, 1]");
}

void parse_search(const json& j, SearchConfig& c) {
    Section s(j, "search");
    if (s.has("mode")) {
        std::string mode;
        s.get_to("mode", mode);
        if (mode == "rl")
            c.mode = SearchMode::Rl;
        else if (mode == "random")
            c.mode = SearchMode::Random;
        else if (mode == "brute")
            c.mode = SearchMode::Brute;
        else
            throw ConfigError(
                "'search.mode' must be 'rl', 'random' or 'brute'");
    }
    s.get_to("episodes", c.max_episodes);
    s.get_to("batch", c.batch_size);
    s.get_to("seed", c.seed);
    s.get_to("brute_budget", c.brute_budget);
    if (s.has("execution")) {
        std::string ex;
        s.get_to("execution", ex);
        if (ex == "serial")
            c.execution = Execution::Serial;
        else if (ex == "parallel")
            c.execution = Execution::Parallel;
        else
            throw ConfigError(
                "'search.execution' must be 'serial' or 'parallel'");
    }
    if (c.max_episodes < 1)
        throw ConfigError("'search.episodes' must be >= 1");
    if (c.batch_size < 1) throw ConfigError("'search.batch' must be >= 1");
    s.reject_unknown();
}

SearchSpace parse_space(const json& j) {
    Section s(j, "space");
    std::uint64_t seed = 0;
    s.get_to("seed", seed);
    const json params = s.require("params");
    if (!params.is_array() || params.empty())
        throw ConfigError("'space.params' must be a non-empty array");
    std::vector<SampleSpec> specs;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string path = "space.params[" + std::to_string(i) + "]";
        Section ps(params[i], path);
        SampleSpec spec;
        if (!ps.has("name")) throw ConfigError("missing key '" + path + ".name'");
        ps.get_to("name", spec.name);
        ps.get_to("unit", spec.unit);
        std::string source;
        if (!ps.has("source"))
            throw ConfigError("missing key '" + path + ".source'");
        ps.get_to("source", source);
        if (source == "values") {
            spec.dist.source = ValueSource::Explicit;
            if (!ps.has("values"))
                throw ConfigError("missing key '" + path + ".values'");
            ps.get_to("values", spec.explicit_values);
        } else if (source == "grid" || source == "uniform") {
            spec.dist.source =
                source == "grid" ? ValueSource::Grid : ValueSource::Uniform;
            if (!ps.has("lo")) throw ConfigError("missing key '" + path + ".lo'");
            if (!ps.has("hi")) throw ConfigError("missing key '" + path + ".hi'");
            if (!ps.has("count"))
                throw ConfigError("missing key '" + path + ".count'");
            ps.get_to("lo", spec.dist.lo);
            ps.get_to("hi", spec.dist.hi);
            ps.get_to("count", spec.count);
        } else if (source == "normal") {
            spec.dist.source = ValueSource::Normal;
            if (!ps.has("mean"))
                throw ConfigError("missing key '" + path + ".mean'");
            if (!ps.has("sd")) throw ConfigError("missing key '" + path + ".sd'");
            if (!ps.has("count"))
                throw ConfigError("missing key '" + path + ".count'");
            ps.get_to("mean", spec.dist.mean);
            ps.get_to("sd", spec.dist.sd);
            ps.get_to("count", spec.count);
        } else {
            throw ConfigError("'" + path +
                              ".source' must be one of values, grid, "
                              "uniform, normal");
        }
        ps.reject_unknown();
        specs.push_back(std::move(spec));
    }
    return sample_space(specs, seed);
}

}  // namespace

SearchSpace RunConfig::make_space() const {
    if (custom_space) return *custom_space;
    const auto space = preset_by_name(preset);
    if (!space) throw ConfigError("unknown preset '" + preset + "'");
    return *space;
}

RunConfig load_config_text(const std::string& text,
                           const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": not valid JSON: " + e.what());
    }
    Section root(j, "");
    RunConfig cfg;
    if (root.has("preset")) root.get_to("preset", cfg.preset);
    if (root.has("space")) {
        cfg.custom_space = parse_space(root.require("space"));
        cfg.preset.clear();
    }
    if (root.has("world")) cfg.world = parse_world(root.require("world"));
    if (root.has("rss")) cfg.rss = parse_rss(root.require("rss"));
    if (root.has("reward")) cfg.reward = parse_reward(root.require("reward"));
    if (root.has("controller"))
        parse_controller(root.require("controller"), cfg.search.policy,
                         cfg.search.exploration);
    if (root.has("search")) parse_search(root.require("search"), cfg.search);
    // manifest bookkeeping keys are accepted and ignored on load
    root.has("tool_version");
    root.has("out_dir");
    root.reject_unknown();
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config_text(ss.str(), path);
}

std::string manifest_json(const RunConfig& cfg, const std::string& out_dir) {
    json j;
    j["tool_version"] = kToolVersion;
    j["out_dir"] = out_dir;
    if (cfg.custom_space) {
        json params = json::array();
        for (const auto& p : cfg.custom_space->params()) {
            // resolved spaces are written back as explicit value lists so
            // the manifest replays without resampling
            json pj;
            pj["name"] = p.name;
            pj["unit"] = p.unit;
            pj["source"] = "values";
            pj["values"] = p.values;
            params.push_back(pj);
        }
        j["space"] = {{"seed", cfg.custom_space->seed()}, {"params", params}};
    } else {
        j["preset"] = cfg.preset;
    }
    j["world"] = {{"dt", cfg.world.dt},
                  {"max_timesteps", cfg.world.max_timesteps},
                  {"crossing_x", cfg.world.crossing_x},
                  {"lane_half_width", cfg.world.lane_half_width},
                  {"ego_target_speed", cfg.world.ego_target_speed},
                  {"ego_accel", cfg.world.ego_accel},
                  {"cas_brake_decel", cfg.world.cas_brake_decel},
                  {"cas_base_range", cfg.world.cas_base_range},
                  {"weather_range_factor", cfg.world.weather_range_factor},
                  {"car_half_length", cfg.world.car_half_length},
                  {"car_half_width", cfg.world.car_half_width},
                  {"ped_speed_cap", cfg.world.ped_speed_cap},
                  {"end_margin", cfg.world.end_margin}};
    j["rss"] = {{"response_time", cfg.rss.response_time},
                {"accel_max", cfg.rss.accel_max},
                {"brake_min", cfg.rss.brake_min},
                {"brake_max", cfg.rss.brake_max},
                {"front_velocity_mode",
                 cfg.rss.front_velocity_mode == FrontVelocityMode::Zero
                     ? "zero"
                     : "projected"}};
    j["reward"] = {{"d_max", cfg.reward.d_max},
                   {"collision_bonus", cfg.reward.collision_bonus},
                   {"challenging_threshold",
                    cfg.reward.challenging_threshold}};
    j["controller"] = {{"hidden", cfg.search.policy.hidden},
                       {"embed", cfg.search.policy.embed},
                       {"learning_rate", cfg.search.policy.learning_rate},
                       {"adam_beta1", cfg.search.policy.adam_beta1},
                       {"adam_beta2", cfg.search.policy.adam_beta2},
                       {"adam_eps", cfg.search.policy.adam_eps},
                       {"init_scale", cfg.search.policy.init_scale},
                       {"include_explored",
                        cfg.search.policy.include_explored},
                       {"use_baseline", cfg.search.policy.use_baseline},
                       {"baseline_decay", cfg.search.policy.baseline_decay},
                       {"normalize_returns",
                        cfg.search.policy.normalize_returns},
                       {"epsilon", cfg.search.exploration.epsilon},
                       {"epsilon_decay", cfg.search.exploration.decay},
                       {"epsilon_min", cfg.search.exploration.epsilon_min}};
    j["search"] = {
        {"mode", to_string(cfg.search.mode)},
        {"episodes", cfg.search.max_episodes},
        {"batch", cfg.search.batch_size},
        {"seed", cfg.search.seed},
        {"brute_budget", cfg.search.brute_budget},
        {"execution",
         cfg.search.execution == Execution::Serial ? "serial" : "parallel"}};
    return j.dump(2) + "\n";
}

}  // namespace falsify
