#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "mvnav/error.hpp"

namespace mvnav {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kMu0 = 1.25663706212e-6;  // vacuum permeability, T m / A
inline constexpr double kGravity = 9.80665;        // m / s^2

struct Dipole {
  Vec3 moment = Vec3::Zero();    // A m^2
  Vec3 position = Vec3::Zero();  // m
};

// Raised when the robot comes closer to the driver magnet than the safety
// floor and would be pulled onto it.
class AdsorptionFault : public Error {
 public:
  using Error::Error;
};

struct MagnetConfig {
  double flux_density = 0.1;         // driver surface field at the pole, T
  double driver_diameter = 1e-3;     // m
  double robot_diameter = 1e-3;      // m
  double robot_density = 7500.0;     // kg / m^3 (sintered NdFeB)
  double robot_magnetization = 1e6;  // A / m
  double drag = 9.42e-6;             // N s / m (Stokes drag of a 1 mm sphere in water)
  double safety_floor = 1e-3;        // minimum centre separation, m
  double max_bracket = 1.0;          // upper end of the critical-distance search, m
};

// Superposition of point dipoles and a uniform background field.
class MagneticField {
 public:
  MagneticField() = default;
  explicit MagneticField(Dipole d) { dipoles_.push_back(d); }

  MagneticField& add(const Dipole& d) {
    dipoles_.push_back(d);
    return *this;
  }
  MagneticField& set_uniform(const Vec3& b) {
    uniform_ = b;
    return *this;
  }

  // Throws InputError when r coincides with a dipole.
  Vec3 field(const Vec3& r) const;
  // J(i, j) = dB_i / dr_j.
  Mat3 jacobian(const Vec3& r) const;

  const std::vector<Dipole>& dipoles() const { return dipoles_; }

 private:
  std::vector<Dipole> dipoles_;
  Vec3 uniform_ = Vec3::Zero();
};

// (mu0 / 4 pi) (3 (m . r^) r^ - m) / |r|^3 with r measured from the dipole.
Vec3 dipole_field(const Dipole& dipole, const Vec3& r);
Mat3 dipole_field_jacobian(const Dipole& dipole, const Vec3& r);

// F = (M . grad) B, i.e. the field Jacobian applied to M.
Vec3 dipole_force(const Vec3& robot_moment, const MagneticField& field, const Vec3& r);

// Point-dipole moment whose on-axis field at the pole (half a diameter from
// the centre) equals the configured flux density.
double driver_moment(const MagnetConfig& config);
double robot_moment(const MagnetConfig& config);
double robot_mass(const MagnetConfig& config);

// Separation at which the axial attraction between co-aligned driver and
// robot dipoles equals the robot's weight, by bisection to floating-point
// resolution. Throws InputError when the weight is outside the force range
// over [contact distance, max_bracket].
double critical_distance(const MagnetConfig& config);

// Axial force magnitude between the co-aligned driver and robot at `d`.
double axial_force(const MagnetConfig& config, double d);

// Returns true where the robot may be (collision predicate).
using PositionFilter = std::function<bool(const Vec3&)>;

// One overdamped step of a robot that aligns its moment with the local field
// and rides on its plane (z fixed): x <- x + (F_xy / drag) dt. A step into a
// blocked position leaves the robot where it was. Throws AdsorptionFault
// when the separation is below the safety floor.
Vec3 follow_step(const Vec3& robot, const Dipole& magnet, const MagnetConfig& config, double dt,
                 const PositionFilter& is_free = {});

}  // namespace mvnav
