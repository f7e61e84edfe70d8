#ifndef PHIENV_TYPES_HPP_
#define PHIENV_TYPES_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace phienv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorKind {
  kInvalidArgument,
  kDimensionMismatch,
  kDomainViolation,
  kUnknownId,
  kMissingCapability,
  kNoTwistInverse,
  kOutsideRange,
  kMultiValued,
  kSolverFailure,
  kNotSpd,
  kConfig,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kDimensionMismatch: return "dimension_mismatch";
    case ErrorKind::kDomainViolation: return "domain_violation";
    case ErrorKind::kUnknownId: return "unknown_id";
    case ErrorKind::kMissingCapability: return "missing_capability";
    case ErrorKind::kNoTwistInverse: return "no_twist_inverse";
    case ErrorKind::kOutsideRange: return "outside_range";
    case ErrorKind::kMultiValued: return "multi_valued";
    case ErrorKind::kSolverFailure: return "solver_failure";
    case ErrorKind::kNotSpd: return "not_spd";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

// All library failures are reported through this exception; kind() lets
// callers (and tests) distinguish the failure class without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// One coordinate of an axis-aligned box. Infinite bounds are always open.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool lo_open = true;
  bool hi_open = true;

  static Interval closed(double lo, double hi) { return {lo, hi, false, false}; }
  static Interval open(double lo, double hi) { return {lo, hi, true, true}; }
  static Interval real_line() { return {}; }

  bool contains(double t) const {
    if (std::isnan(t)) return false;
    bool lo_ok = lo_open ? t > lo : t >= lo;
    bool hi_ok = hi_open ? t < hi : t <= hi;
    return lo_ok && hi_ok;
  }
  bool interior_contains(double t) const { return t > lo && t < hi; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
};

class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Interval> faces) : faces_(std::move(faces)) {}

  static Box uniform(std::size_t n, Interval iv) {
    return Box(std::vector<Interval>(n, iv));
  }
  static Box closed(const Vector& lo, const Vector& hi) {
    std::vector<Interval> f(static_cast<std::size_t>(lo.size()));
    for (Eigen::Index i = 0; i < lo.size(); ++i) f[i] = Interval::closed(lo[i], hi[i]);
    return Box(std::move(f));
  }
  static Box closed_cube(std::size_t n, double lo, double hi) {
    return uniform(n, Interval::closed(lo, hi));
  }

  std::size_t dim() const { return faces_.size(); }
  const Interval& operator[](std::size_t i) const { return faces_[i]; }
  Interval& operator[](std::size_t i) { return faces_[i]; }

  bool contains(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != faces_.size()) return false;
    for (std::size_t i = 0; i < faces_.size(); ++i)
      if (!faces_[i].contains(x[static_cast<Eigen::Index>(i)])) return false;
    return true;
  }
  bool interior_contains(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != faces_.size()) return false;
    for (std::size_t i = 0; i < faces_.size(); ++i)
      if (!faces_[i].interior_contains(x[static_cast<Eigen::Index>(i)])) return false;
    return true;
  }
  bool bounded() const {
    for (const auto& f : faces_)
      if (!f.bounded()) return false;
    return true;
  }
  bool empty() const {
    for (const auto& f : faces_) {
      if (f.lo > f.hi) return true;
      if (f.lo == f.hi && (f.lo_open || f.hi_open)) return true;
    }
    return false;
  }

  Vector lower() const {
    Vector v(static_cast<Eigen::Index>(faces_.size()));
    for (std::size_t i = 0; i < faces_.size(); ++i) v[i] = faces_[i].lo;
    return v;
  }
  Vector upper() const {
    Vector v(static_cast<Eigen::Index>(faces_.size()));
    for (std::size_t i = 0; i < faces_.size(); ++i) v[i] = faces_[i].hi;
    return v;
  }

  // Componentwise clamp onto the closure of the box.
  Vector clamp(const Vector& x) const {
    Vector y = x;
    for (std::size_t i = 0; i < faces_.size(); ++i)
      y[i] = std::min(std::max(y[i], faces_[i].lo), faces_[i].hi);
    return y;
  }

  // Intersection of two boxes of equal dimension; the tighter bound wins,
  // and on ties a face is open if it is open in either box.
  Box intersect(const Box& other) const {
    if (other.dim() != dim())
      throw Error(ErrorKind::kDimensionMismatch, "box intersection");
    std::vector<Interval> f(faces_.size());
    for (std::size_t i = 0; i < faces_.size(); ++i) {
      const Interval& a = faces_[i];
      const Interval& b = other.faces_[i];
      Interval r;
      if (a.lo > b.lo) { r.lo = a.lo; r.lo_open = a.lo_open; }
      else if (b.lo > a.lo) { r.lo = b.lo; r.lo_open = b.lo_open; }
      else { r.lo = a.lo; r.lo_open = a.lo_open || b.lo_open; }
      if (a.hi < b.hi) { r.hi = a.hi; r.hi_open = a.hi_open; }
      else if (b.hi < a.hi) { r.hi = b.hi; r.hi_open = b.hi_open; }
      else { r.hi = a.hi; r.hi_open = a.hi_open || b.hi_open; }
      f[i] = r;
    }
    return Box(std::move(f));
  }

 private:
  std::vector<Interval> faces_;
};

inline void require_dim(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n)
    throw Error(ErrorKind::kDimensionMismatch,
                std::string(what) + ": expected dimension " + std::to_string(n) +
                    ", got " + std::to_string(v.size()));
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace phienv

#endif  // PHIENV_TYPES_HPP_
