#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace meshfit {

// Bad or inconsistent configuration / CLI usage. Exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File system / serialization failures. Exit code 2.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical aborts: non-finite values, empty loss operands, degenerate
// geometry. Exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0, y = 0.0;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3& operator+=(Vec3& a, Vec3 b) { a = a + b; return a; }

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

inline double sqr(double v) { return v * v; }

constexpr double kPi = 3.14159265358979323846;

}  // namespace meshfit
