#ifndef FALSIFY_SIM_HPP
#define FALSIFY_SIM_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "falsify/param_space.hpp"
#include "falsify/rss.hpp"
#include "falsify/sut.hpp"

namespace falsify {

struct WorldConfig {
    double dt = 0.05;               // s
    int max_timesteps = 200;
    double crossing_x = 55.0;       // m, pedestrian crossing line
    double lane_half_width = 1.75;  // m
    double ego_target_speed = 8.33; // m/s
    double ego_accel = 2.0;         // m/s^2
    double cas_brake_decel = 3.0;   // m/s^2
    double cas_base_range = 10.0;   // m
    double weather_range_factor = 0.04;  // range loss per weather index
    double car_half_length = 2.2;   // m
    double car_half_width = 0.9;    // m
    double ped_speed_cap = 2.5;     // m/s
    double end_margin = 5.0;        // m past the crossing before episode ends
};

enum class EndReason { Collision, TimeElapsed, DistancePassed };

std::string to_string(EndReason r);

struct TraceRecord {
    int t = 0;
    double ego_x = 0.0;
    double ego_v = 0.0;
    double ped_x = 0.0;
    double ped_y = 0.0;
    double ped_v = 0.0;        // effective crossing speed used this step
    double euclid_dist = 0.0;
    double rss_dmin = 0.0;
    bool high_risk = false;
    bool cas_detected = false; // SUT commanded a brake this step
};

struct EpisodeTrace {
    std::vector<TraceRecord> records;
    bool collision = false;
    EndReason end_reason = EndReason::TimeElapsed;

    const TraceRecord& back() const { return records.back(); }
    int highrisk_count() const;
};

// Mutable state of one running episode.
struct WorldState {
    double ego_x = 0.0;
    double ego_v = 0.0;
    double ped_x = 0.0;
    double ped_y = 0.0;
    double ped_v = 0.0;          // base crossing speed (before injection)
    double ped_accel = 0.0;
    double detection_range = 0.0;
    // Speed-change injection (7-parameter preset); window is
    // [change_start_step, change_start_step + 5).
    bool change_active = false;
    double speed_change = 0.0;
    int change_start_step = 0;
    int t = 0;
};

// Places the ego and pedestrian from the resolved action. Parameters are
// looked up by name so pinned-down or reordered spaces keep working.
WorldState init_world(const ScenarioAction& action, const SearchSpace& space,
                      const WorldConfig& cfg);

// Advances the pedestrian one step and returns the effective crossing
// speed used (base speed plus injection offset, clamped to [0, cap]).
double pedestrian_step(WorldState& s, const WorldConfig& cfg);

// Applies the SUT's speed command to the ego.
void ego_step(WorldState& s, SpeedCommand command, const WorldConfig& cfg);

// Pedestrian inside the car rectangle, boundary inclusive. The ego
// travels along y = 0.
bool check_collision(const WorldState& s, const WorldConfig& cfg);

// Runs one full episode. Deterministic: equal inputs give equal traces.
EpisodeTrace run_episode(const ScenarioAction& action,
                         const SearchSpace& space, const WorldConfig& cfg,
                         const RssConfig& rss, const Sut& sut);

// Convenience overload against the stock CAS.
EpisodeTrace run_episode(const ScenarioAction& action,
                         const SearchSpace& space, const WorldConfig& cfg,
                         const RssConfig& rss);

// One CSV row per timestep, header mandatory, 17 significant digits so
// replays diff exactly.
void write_trace_csv(std::ostream& os, const EpisodeTrace& trace);

}  // namespace falsify

#endif
