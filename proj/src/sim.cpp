#include "falsify/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "falsify/csv.hpp"
#include "falsify/errors.hpp"

namespace falsify {

std::string to_string(EndReason r) {
    switch (r) {
        case EndReason::Collision: return "collision";
        case EndReason::TimeElapsed: return "time_elapsed";
        case EndReason::DistancePassed: return "distance_passed";
    }
    return "unknown";
}

int EpisodeTrace::highrisk_count() const {
    int n = 0;
    for (const auto& r : records) n += r.high_risk ? 1 : 0;
    return n;
}

namespace {

double required_value(const ScenarioAction& action, const SearchSpace& space,
                      const std::string& name) {
    const auto i = space.index_of(name);
    if (!i)
        throw ConfigError("search space is missing parameter '" + name + "'");
    return action.values[*i];
}

}  // namespace

WorldState init_world(const ScenarioAction& action, const SearchSpace& space,
                      const WorldConfig& cfg) {
    WorldState s;
    s.ego_x = required_value(action, space, "ego-long-pos");
    s.ego_v = cfg.ego_target_speed;
    s.ped_x = cfg.crossing_x;
    s.ped_y = -required_value(action, space, "ped-long-pos");
    s.ped_v = required_value(action, space, "ped-vel");
    s.ped_accel = required_value(action, space, "ped-accel");
    const double weather = required_value(action, space, "weather");
    s.detection_range = std::max(
        0.0, cfg.cas_base_range * (1.0 - cfg.weather_range_factor * weather));
    if (const auto i = space.index_of("ped_speed_change")) {
        s.change_active = true;
        s.speed_change = action.values[*i];
        const auto j = space.index_of("ped_timesteps");
        if (!j)
            throw ConfigError(
                "search space has ped_speed_change without ped_timesteps");
        s.change_start_step = static_cast<int>(action.values[*j]);
    }
    return s;
}

double pedestrian_step(WorldState& s, const WorldConfig& cfg) {
    const double advanced = s.ped_v + s.ped_accel * cfg.dt;
    s.ped_v = std::clamp(advanced, 0.0, cfg.ped_speed_cap);
    double effective = s.ped_v;
    if (s.change_active && s.t >= s.change_start_step &&
        s.t < s.change_start_step + 5) {
        effective = std::clamp(advanced + s.speed_change, 0.0,
                               cfg.ped_speed_cap);
    }
    s.ped_y += effective * cfg.dt;
    return effective;
}

void ego_step(WorldState& s, SpeedCommand command, const WorldConfig& cfg) {
    const double accel = command == SpeedCommand::Accelerate
                             ? cfg.ego_accel
                             : -cfg.cas_brake_decel;
    s.ego_v = std::clamp(s.ego_v + accel * cfg.dt, 0.0, cfg.ego_target_speed);
    s.ego_x += s.ego_v * cfg.dt;
}

bool check_collision(const WorldState& s, const WorldConfig& cfg) {
    return std::fabs(s.ped_x - s.ego_x) <= cfg.car_half_length &&
           std::fabs(s.ped_y) <= cfg.car_half_width;
}

EpisodeTrace run_episode(const ScenarioAction& action,
                         const SearchSpace& space, const WorldConfig& cfg,
                         const RssConfig& rss, const Sut& sut) {
    WorldState s = init_world(action, space, cfg);
    EpisodeTrace trace;
    trace.records.reserve(64);
    trace.end_reason = EndReason::TimeElapsed;

    for (int t = 0; t < cfg.max_timesteps; ++t) {
        s.t = t;
        const double ped_v_eff = pedestrian_step(s, cfg);

        SutObservation obs;
        obs.ego_x = s.ego_x;
        obs.ego_y = 0.0;
        obs.ego_v = s.ego_v;
        obs.ped_x = s.ped_x;
        obs.ped_y = s.ped_y;
        obs.detection_range = s.detection_range;
        obs.lane_half_width = cfg.lane_half_width;
        obs.car_half_width = cfg.car_half_width;
        const SpeedCommand cmd = sut.control(obs);

        ego_step(s, cmd, cfg);

        TraceRecord rec;
        rec.t = t;
        rec.ego_x = s.ego_x;
        rec.ego_v = s.ego_v;
        rec.ped_x = s.ped_x;
        rec.ped_y = s.ped_y;
        rec.ped_v = ped_v_eff;
        rec.euclid_dist = std::hypot(s.ped_x - s.ego_x, s.ped_y);
        rec.rss_dmin = longitudinal_safe_distance(s.ego_v, 0.0, rss);
        // pedestrian crosses perpendicular to travel, so its longitudinal
        // speed component is zero in both front-velocity modes; "ahead"
        // is measured against the vehicle's rear edge so that contact
        // anywhere along the body stays risk-eligible
        const bool ped_ahead = s.ped_x > s.ego_x - cfg.car_half_length;
        rec.high_risk = classify_high_risk(rec.euclid_dist, s.ego_v, 0.0,
                                           ped_ahead, rss);
        rec.cas_detected = cmd == SpeedCommand::Brake;
        trace.records.push_back(rec);

        if (check_collision(s, cfg)) {
            trace.collision = true;
            trace.end_reason = EndReason::Collision;
            break;
        }
        if (s.ego_x > cfg.crossing_x + cfg.end_margin) {
            trace.end_reason = EndReason::DistancePassed;
            break;
        }
    }
    return trace;
}

EpisodeTrace run_episode(const ScenarioAction& action,
                         const SearchSpace& space, const WorldConfig& cfg,
                         const RssConfig& rss) {
    const auto cas = make_default_cas();
    return run_episode(action, space, cfg, rss, *cas);
}

void write_trace_csv(std::ostream& os, const EpisodeTrace& trace) {
    os << "t,ego_x,ego_v,ped_x,ped_y,ped_v,euclid_dist,rss_dmin,high_risk,"
          "cas_detected\n";
    for (const auto& r : trace.records) {
        os << r.t << ',' << g17(r.ego_x) << ',' << g17(r.ego_v) << ','
           << g17(r.ped_x) << ',' << g17(r.ped_y) << ',' << g17(r.ped_v)
           << ',' << g17(r.euclid_dist) << ',' << g17(r.rss_dmin) << ','
           << (r.high_risk ? 1 : 0) << ',' << (r.cas_detected ? 1 : 0)
           << '\n';
    }
}

}  // namespace falsify
