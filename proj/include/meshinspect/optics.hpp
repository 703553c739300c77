#pragma once

namespace meshinspect {

/// Focal lengths in mm, pixel size in um.
struct OpticsSpec {
  double f_objective = 30.0;
  double f_tube = 40.0;
  double f_internal = 5.43;
  double f_relay = 2.87;
  double pixel_size = 0.8;
  double screen_to_sensor_ratio = 18.0;  ///< digital magnification, informational
  double fov_diameter = 800.0;           ///< um, taken as given

  void validate() const;
};

namespace optics {

double tube_ratio(const OpticsSpec& s);   ///< f_tube / f_objective
double relay_ratio(const OpticsSpec& s);  ///< f_internal / f_relay

double optical_magnification(const OpticsSpec& s);

/// Sample-plane distance covered by one sensor pixel, um.
double object_pixel_pitch(const OpticsSpec& s);

double digital_magnification(const OpticsSpec& s);

}  // namespace optics
}  // namespace meshinspect
