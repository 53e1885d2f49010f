#include "falsify/sut.hpp"

#include <cmath>

namespace falsify {

namespace {

class RangeTriggeredCas final : public Sut {
public:
    SpeedCommand control(const SutObservation& obs) const override {
        const bool ahead = obs.ped_x > obs.ego_x;
        const double dist =
            std::hypot(obs.ped_x - obs.ego_x, obs.ped_y - obs.ego_y);
        const bool in_range = dist <= obs.detection_range;
        const bool in_corridor =
            std::fabs(obs.ped_y) <= obs.lane_half_width + obs.car_half_width;
        return (ahead && in_range && in_corridor) ? SpeedCommand::Brake
                                                  : SpeedCommand::Accelerate;
    }
};

}  // namespace

std::unique_ptr<Sut> make_default_cas() {
    return std::make_unique<RangeTriggeredCas>();
}

}  // namespace falsify
