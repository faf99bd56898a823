#include "mvnav/magnet.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mvnav {

namespace {

constexpr double kFieldConstant = kMu0 / (4.0 * std::numbers::pi);

Vec3 offset_from(const Dipole& dipole, const Vec3& r) {
  const Vec3 d = r - dipole.position;
  if (d.squaredNorm() == 0.0) throw InputError("field evaluated at the dipole location");
  return d;
}

}  // namespace

Vec3 dipole_field(const Dipole& dipole, const Vec3& r) {
  const Vec3 d = offset_from(dipole, r);
  const double n2 = d.squaredNorm();
  const double n = std::sqrt(n2);
  const double mr = dipole.moment.dot(d);
  return kFieldConstant * (3.0 * mr * d / (n2 * n2 * n) - dipole.moment / (n2 * n));
}

Mat3 dipole_field_jacobian(const Dipole& dipole, const Vec3& r) {
  const Vec3 d = offset_from(dipole, r);
  const Vec3& m = dipole.moment;
  const double n2 = d.squaredNorm();
  const double n5 = n2 * n2 * std::sqrt(n2);
  const double mr = m.dot(d);
  // dB_i/dr_j = 3k/r^5 (m_j r_i + m_i r_j + (m.r) delta_ij - 5 (m.r) r_i r_j / r^2)
  Mat3 j = d * m.transpose() + m * d.transpose() - (5.0 * mr / n2) * d * d.transpose();
  j.diagonal().array() += mr;
  return (3.0 * kFieldConstant / n5) * j;
}

Vec3 MagneticField::field(const Vec3& r) const {
  Vec3 b = uniform_;
  for (const auto& d : dipoles_) b += dipole_field(d, r);
  return b;
}

Mat3 MagneticField::jacobian(const Vec3& r) const {
  Mat3 j = Mat3::Zero();
  for (const auto& d : dipoles_) j += dipole_field_jacobian(d, r);
  return j;
}

Vec3 dipole_force(const Vec3& robot_moment, const MagneticField& field, const Vec3& r) {
  return field.jacobian(r) * robot_moment;
}

double driver_moment(const MagnetConfig& c) {
  // On-axis dipole field B = (mu0 / 2 pi) m / z^3 evaluated at the pole.
  const double z = 0.5 * c.driver_diameter;
  return 2.0 * std::numbers::pi * z * z * z * c.flux_density / kMu0;
}

namespace {
double robot_volume(const MagnetConfig& c) {
  const double r = 0.5 * c.robot_diameter;
  return 4.0 / 3.0 * std::numbers::pi * r * r * r;
}
}  // namespace

double robot_moment(const MagnetConfig& c) { return c.robot_magnetization * robot_volume(c); }
double robot_mass(const MagnetConfig& c) { return c.robot_density * robot_volume(c); }

double axial_force(const MagnetConfig& c, double d) {
  const MagneticField field(Dipole{Vec3(0, 0, driver_moment(c)), Vec3::Zero()});
  const Vec3 f = dipole_force(Vec3(0, 0, robot_moment(c)), field, Vec3(0, 0, d));
  return f.norm();
}

double critical_distance(const MagnetConfig& c) {
  if (c.flux_density <= 0 || c.driver_diameter <= 0 || c.robot_diameter <= 0 ||
      c.robot_magnetization <= 0 || c.robot_density < 0) {
    throw InputError("magnet configuration values must be positive");
  }
  const double weight = robot_mass(c) * kGravity;
  auto excess = [&](double d) { return axial_force(c, d) - weight; };

  double lo = 0.5 * (c.driver_diameter + c.robot_diameter);
  double hi = c.max_bracket;
  if (!(hi > lo)) throw InputError("critical-distance bracket is empty");
  if (excess(lo) < 0.0) {
    throw InputError("magnetic force is below the robot weight even at contact");
  }
  if (excess(hi) > 0.0) {
    throw InputError("magnetic force exceeds the robot weight across the whole bracket (up to " +
                     std::to_string(hi) + " m)");
  }
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return std::abs(excess(lo)) <= std::abs(excess(hi)) ? lo : hi;
}

Vec3 follow_step(const Vec3& robot, const Dipole& magnet, const MagnetConfig& c, double dt,
                 const PositionFilter& is_free) {
  const double sep = (robot - magnet.position).norm();
  if (sep < c.safety_floor) {
    throw AdsorptionFault("robot-magnet separation " + std::to_string(sep) +
                          " m is below the safety floor");
  }
  const MagneticField field(magnet);
  const Vec3 b = field.field(robot);
  const double bn = b.norm();
  if (bn == 0.0) return robot;
  const Vec3 moment = robot_moment(c) * b / bn;
  Vec3 f = dipole_force(moment, field, robot);
  f.z() = 0.0;  // balanced by the substrate
  const Vec3 next = robot + (dt / c.drag) * f;
  if (is_free && !is_free(next)) return robot;
  return next;
}

}  // namespace mvnav
