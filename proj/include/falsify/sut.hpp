#ifndef FALSIFY_SUT_HPP
#define FALSIFY_SUT_HPP

#include <memory>

namespace falsify {

// What the system under test is allowed to sense each timestep. The
// detection range already accounts for weather degradation.
struct SutObservation {
    double ego_x = 0.0;
    double ego_y = 0.0;
    double ego_v = 0.0;
    double ped_x = 0.0;
    double ped_y = 0.0;
    double detection_range = 0.0;  // m
    double lane_half_width = 0.0;  // m
    double car_half_width = 0.0;   // m
};

enum class SpeedCommand { Accelerate, Brake };

// Opaque speed controller under test. The search engine and simulator
// only ever see this interface; the stock collision-avoidance behavior
// lives behind make_default_cas() and is not otherwise reachable.
class Sut {
public:
    virtual ~Sut() = default;
    virtual SpeedCommand control(const SutObservation& obs) const = 0;
};

// The stock CAS: brakes when a pedestrian ahead is inside the detection
// range and the driving corridor, accelerates back to target otherwise.
std::unique_ptr<Sut> make_default_cas();

}  // namespace falsify

#endif
