#ifndef FALSIFY_RSS_HPP
#define FALSIFY_RSS_HPP

namespace falsify {

// Velocity assumed for the front object when classifying a timestep.
// Zero treats the pedestrian as a worst-case stationary obstacle;
// Projected uses the object's speed component along the ego travel axis.
enum class FrontVelocityMode { Zero, Projected };

struct RssConfig {
    double response_time = 0.3;  // s
    double accel_max = 2.0;      // m/s^2, rear agent acceleration during response
    double brake_min = 6.0;      // m/s^2, rear agent minimum braking
    double brake_max = 8.0;      // m/s^2, front object maximum braking
    FrontVelocityMode front_velocity_mode = FrontVelocityMode::Zero;
};

// Minimum longitudinal distance the rear agent needs to stop in time if
// the front object brakes abruptly; clamped at zero (a fast front object
// makes the raw expression negative). Throws std::domain_error on
// negative speeds.
double longitudinal_safe_distance(double v_rear, double v_front,
                                  const RssConfig& cfg);

// High-risk test for one timestep: the front object must be ahead and the
// measured distance below the safe distance. v_front_projected is the
// front object's velocity component along the ego travel axis; it is
// ignored in Zero mode.
bool classify_high_risk(double euclid_dist, double v_rear,
                        double v_front_projected, bool front_ahead,
                        const RssConfig& cfg);

}  // namespace falsify

#endif
