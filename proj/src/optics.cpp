#include "meshinspect/optics.hpp"

#include "meshinspect/image.hpp"

namespace meshinspect {

void OpticsSpec::validate() const {
  if (!(f_objective > 0.0 && f_tube > 0.0 && f_internal > 0.0 && f_relay > 0.0)) {
    throw InvalidInput("optics: focal lengths must be > 0");
  }
  if (!(pixel_size > 0.0)) throw InvalidInput("optics: pixel_size must be > 0");
  if (!(screen_to_sensor_ratio > 0.0)) throw InvalidInput("optics: screen_to_sensor_ratio must be > 0");
  if (!(fov_diameter > 0.0)) throw InvalidInput("optics: fov_diameter must be > 0");
}

namespace optics {

double tube_ratio(const OpticsSpec& s) { return s.f_tube / s.f_objective; }
double relay_ratio(const OpticsSpec& s) { return s.f_internal / s.f_relay; }

double optical_magnification(const OpticsSpec& s) {
  s.validate();
  return tube_ratio(s) * relay_ratio(s);
}

double object_pixel_pitch(const OpticsSpec& s) { return s.pixel_size / optical_magnification(s); }

double digital_magnification(const OpticsSpec& s) {
  s.validate();
  return s.screen_to_sensor_ratio;
}

}  // namespace optics
}  // namespace meshinspect
