#include "falsify/rss.hpp"

#include <algorithm>
#include <stdexcept>

namespace falsify {

double longitudinal_safe_distance(double v_rear, double v_front,
                                  const RssConfig& cfg) {
    if (v_rear < 0.0 || v_front < 0.0)
        throw std::domain_error("speeds must be non-negative");
    const double rho = cfg.response_time;
    const double v_response = v_rear + rho * cfg.accel_max;
    const double raw = v_rear * rho + 0.5 * cfg.accel_max * rho * rho +
                       v_response * v_response / (2.0 * cfg.brake_min) -
                       v_front * v_front / (2.0 * cfg.brake_max);
    return std::max(0.0, raw);
}

bool classify_high_risk(double euclid_dist, double v_rear,
                        double v_front_projected, bool front_ahead,
                        const RssConfig& cfg) {
    if (!front_ahead) return false;
    const double v_front = cfg.front_velocity_mode == FrontVelocityMode::Zero
                               ? 0.0
                               : v_front_projected;
    return euclid_dist < longitudinal_safe_distance(v_rear, v_front, cfg);
}

}  // namespace falsify
