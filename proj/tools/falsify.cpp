#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "falsify/config.hpp"
#include "falsify/csv.hpp"
#include "falsify/errors.hpp"
#include "falsify/search.hpp"

namespace fs = std::filesystem;
using namespace falsify;

namespace {

std::string default_out_dir(std::uint64_t seed) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    localtime_r(&tt, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "run-%04d%02d%02d-%02d%02d%02d-seed%llu",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                  tm.tm_min, tm.tm_sec,
                  static_cast<unsigned long long>(seed));
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name,
                       const std::string& file) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ConfigError("'" + file + "' has no column '" + name + "'");
    }
};

Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open report '" + path + "'");
    Csv csv;
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("'" + path + "' is empty");
    csv.header = split(line, ',');
    while (std::getline(in, line))
        if (!line.empty()) csv.rows.push_back(split(line, ','));
    return csv;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << contents;
}

int cmd_search(const RunConfig& cfg, const std::string& out_dir) {
    const SearchSpace space = cfg.make_space();
    const SimEvaluator evaluator(space, cfg.world, cfg.rss, cfg.reward);

    SearchReport report;
    Policy* trained = nullptr;
    std::optional<Policy> policy_out;
    switch (cfg.search.mode) {
        case SearchMode::Rl: {
            Policy p({1}, cfg.search.policy, 0);
            report = run_search(space, cfg.search, evaluator, &p);
            policy_out = std::move(p);
            trained = &*policy_out;
            break;
        }
        case SearchMode::Random:
            report = run_random(space, cfg.search, evaluator);
            break;
        case SearchMode::Brute:
            report = run_brute(space, cfg.search, evaluator);
            break;
    }

    fs::create_directories(out_dir);
    {
        std::ofstream os(fs::path(out_dir) / "episodes.csv",
                         std::ios::binary);
        write_episodes_csv(os, report, space);
    }
    {
        std::ofstream os(fs::path(out_dir) / "summary.txt", std::ios::binary);
        write_summary(os, report, space);
    }
    write_file(fs::path(out_dir) / "manifest.json",
               manifest_json(cfg, out_dir));
    if (trained) {
        std::ofstream os(fs::path(out_dir) / "policy.bin", std::ios::binary);
        trained->save(os);
    }

    std::ostringstream brief;
    write_summary(brief, report, space);
    std::cout << brief.str();
    std::cout << "outputs: " << out_dir << std::endl;
    return 0;
}

int cmd_replay(const RunConfig& cfg, const std::string& indices_arg,
               const std::string& values_arg, const std::string& out_dir) {
    const SearchSpace space = cfg.make_space();

    ScenarioAction action;
    if (!indices_arg.empty()) {
        std::vector<int> idx;
        for (const auto& tok : split(indices_arg, ','))
            idx.push_back(std::stoi(tok));
        try {
            action = space.resolve(idx);
        } catch (const std::out_of_range& e) {
            throw ConfigError(std::string("bad --indices: ") + e.what());
        }
    } else {
        std::vector<double> vals;
        for (const auto& tok : split(values_arg, ','))
            vals.push_back(std::stod(tok));
        const auto resolved = space.resolve_values(vals);
        if (!resolved)
            throw ConfigError(
                "--values does not match any sample in the search space");
        action = *resolved;
    }

    const SimEvaluator evaluator(space, cfg.world, cfg.rss, cfg.reward);
    const EpisodeTrace trace = evaluator.trace(action);
    const RewardBreakdown reward = total_reward(trace, cfg.reward);
    const ScenarioVerdict verdict = classify_scenario(trace, cfg.reward);

    fs::create_directories(out_dir);
    {
        std::ofstream os(fs::path(out_dir) / "trace.csv", std::ios::binary);
        write_trace_csv(os, trace);
    }
    {
        std::ofstream os(fs::path(out_dir) / "risk.csv", std::ios::binary);
        os << "t,high_risk,euclid_dist,rss_dmin\n";
        for (const auto& r : trace.records)
            os << r.t << ',' << (r.high_risk ? 1 : 0) << ','
               << g17(r.euclid_dist) << ',' << g17(r.rss_dmin) << '\n';
    }

    std::ostringstream sum;
    sum << "action:\n";
    for (std::size_t j = 0; j < space.size(); ++j)
        sum << "  " << space.param(j).name << ": " << g17(action.values[j])
            << " (index " << action.indices[j] << ")\n";
    sum << "timesteps: " << trace.records.size() << '\n';
    sum << "end_reason: " << to_string(trace.end_reason) << '\n';
    sum << "collision: " << (trace.collision ? 1 : 0) << '\n';
    sum << "highrisk_count: " << reward.highrisk_count << '\n';
    sum << "highrisk_fraction: " << g17(verdict.highrisk_fraction) << '\n';
    sum << "challenging: " << (verdict.challenging ? 1 : 0) << '\n';
    sum << "r_highrisk: " << g17(reward.r_highrisk) << '\n';
    sum << "r_distance: " << g17(reward.r_distance) << '\n';
    sum << "r_collision: " << g17(reward.r_collision) << '\n';
    sum << "total_reward: " << g17(reward.total) << '\n';
    write_file(fs::path(out_dir) / "summary.txt", sum.str());
    std::cout << sum.str();
    std::cout << "outputs: " << out_dir << std::endl;
    return 0;
}

int cmd_plotdata(const std::string& report_path, const std::string& kind,
                 const std::string& out_path) {
    const Csv csv = read_csv(report_path);
    std::ostringstream os;
    if (kind == "reward_curve") {
        const auto e = csv.column("episode", report_path);
        const auto t = csv.column("total", report_path);
        const auto m = csv.column("moving_avg100", report_path);
        os << "episode,reward,moving_avg_100\n";
        for (const auto& row : csv.rows)
            os << row[e] << ',' << row[t] << ',' << row[m] << '\n';
    } else if (kind == "risk_bars") {
        const auto e = csv.column("episode", report_path);
        const auto hi = csv.column("highrisk_count", report_path);
        const auto tot = csv.column("total_timesteps", report_path);
        os << "scenario_id,highrisk_count,lowrisk_count\n";
        for (const auto& row : csv.rows) {
            const long total = std::stol(row[tot]);
            const long high = std::stol(row[hi]);
            os << row[e] << ',' << high << ',' << (total - high) << '\n';
        }
    } else if (kind == "speed_trace") {
        const auto t = csv.column("t", report_path);
        const auto ev = csv.column("ego_v", report_path);
        const auto pv = csv.column("ped_v", report_path);
        os << "t,ego_v,ped_v\n";
        for (const auto& row : csv.rows)
            os << row[t] << ',' << row[ev] << ',' << row[pv] << '\n';
    } else {
        throw ConfigError("unknown plot kind '" + kind + "'");
    }
    if (out_path.empty())
        std::cout << os.str();
    else
        write_file(out_path, os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scenario falsification for a black-box collision "
                 "avoidance system"};
    app.require_subcommand(1);

    std::string config_path, preset, mode, out_dir;
    std::uint64_t seed = 0;
    std::int64_t episodes = 0;
    int batch = 0;
    bool serial = false;

    auto add_config_flags = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config or manifest");
        sub->add_option("--preset", preset, "search space preset "
                                            "(paper5 or paper7)");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--out", out_dir, "output directory");
    };

    CLI::App* search = app.add_subcommand("search", "run a falsification "
                                                    "search");
    add_config_flags(search);
    search->add_option("--mode", mode, "rl, random or brute");
    search->add_option("--episodes", episodes, "episode budget");
    search->add_option("--batch", batch, "controller update interval");
    search->add_flag("--serial", serial,
                     "single-threaded baseline evaluation");

    std::string indices_arg, values_arg;
    CLI::App* replay = app.add_subcommand("replay", "re-run one scenario "
                                                    "and export its trace");
    add_config_flags(replay);
    replay->add_option("--indices", indices_arg,
                       "comma-separated value indices, one per parameter");
    replay->add_option("--values", values_arg,
                       "comma-separated parameter values, matched exactly");

    std::string report_path, kind, plot_out;
    CLI::App* plotdata =
        app.add_subcommand("plotdata", "emit tidy CSV for one figure");
    plotdata->add_option("--report", report_path, "episodes.csv or trace.csv")
        ->required();
    plotdata->add_option("--kind", kind,
                         "reward_curve, risk_bars or speed_trace")
        ->required();
    plotdata->add_option("--out", plot_out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (plotdata->parsed())
            return cmd_plotdata(report_path, kind, plot_out);

        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        if (!preset.empty()) {
            if (!preset_by_name(preset))
                throw ConfigError("unknown preset '" + preset + "'");
            cfg.preset = preset;
            cfg.custom_space.reset();
        }
        if (search->count("--seed") || replay->count("--seed"))
            cfg.search.seed = seed;

        if (search->parsed()) {
            if (!mode.empty()) {
                if (mode == "rl")
                    cfg.search.mode = SearchMode::Rl;
                else if (mode == "random")
                    cfg.search.mode = SearchMode::Random;
                else if (mode == "brute")
                    cfg.search.mode = SearchMode::Brute;
                else
                    throw ConfigError("unknown --mode '" + mode + "'");
            }
            if (episodes > 0) cfg.search.max_episodes = episodes;
            if (batch > 0) cfg.search.batch_size = batch;
            if (serial) cfg.search.execution = Execution::Serial;
            if (out_dir.empty()) out_dir = default_out_dir(cfg.search.seed);
            return cmd_search(cfg, out_dir);
        }
        if (replay->parsed()) {
            if (indices_arg.empty() == values_arg.empty())
                throw ConfigError(
                    "replay needs exactly one of --indices or --values");
            if (out_dir.empty()) out_dir = default_out_dir(cfg.search.seed);
            return cmd_replay(cfg, indices_arg, values_arg, out_dir);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
