#ifndef PHIENV_SAMPLING_HPP_
#define PHIENV_SAMPLING_HPP_

// Deterministic point sets: tensor grids and randomly shifted Halton
// sequences. Everything is a pure function of (box, count, seed).

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "phienv/types.hpp"

namespace phienv {

namespace detail {

inline constexpr std::array<int, 24> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                                41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

inline double radical_inverse(std::uint64_t index, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

}  // namespace detail

// Halton points in [0,1)^d with a Cranley-Patterson rotation drawn from seed.
class HaltonSequence {
 public:
  HaltonSequence(std::size_t dim, std::uint64_t seed) : shift_(static_cast<Eigen::Index>(dim)) {
    if (dim > detail::kPrimes.size())
      throw Error(ErrorKind::kInvalidArgument, "Halton dimension too large");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Eigen::Index i = 0; i < shift_.size(); ++i) shift_[i] = seed == 0 ? 0.0 : u(rng);
  }

  Vector operator()(std::uint64_t index) const {
    Vector p(shift_.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      double t = detail::radical_inverse(index + 1, detail::kPrimes[static_cast<std::size_t>(i)]) + shift_[i];
      p[i] = t - std::floor(t);
    }
    return p;
  }

 private:
  Vector shift_;
};

// count points inside a bounded box (faces treated as closed).
inline std::vector<Vector> sample_box(const Box& box, std::size_t count, std::uint64_t seed) {
  if (!box.bounded()) throw Error(ErrorKind::kInvalidArgument, "sample_box needs a bounded box");
  const Vector lo = box.lower(), hi = box.upper();
  HaltonSequence seq(box.dim(), seed);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(lo + seq(k).cwiseProduct(hi - lo));
  return out;
}

// count points in the closed ball B(center, radius), by rejection from the
// enclosing cube. The center itself is never returned.
inline std::vector<Vector> sample_ball(const Vector& center, double radius, std::size_t count,
                                       std::uint64_t seed) {
  HaltonSequence seq(static_cast<std::size_t>(center.size()), seed);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::uint64_t k = 0; out.size() < count; ++k) {
    const Vector u = 2.0 * seq(k).array() - 1.0;
    const double r = u.norm();
    if (r <= 1.0 && r > 0.0) out.push_back(center + radius * u);
    if (k > 1000 * (count + 10)) break;
  }
  return out;
}

// Tensor grid with points_per_dim nodes per coordinate, endpoints included.
inline std::vector<Vector> tensor_grid(const Box& box, std::size_t points_per_dim) {
  if (!box.bounded()) throw Error(ErrorKind::kInvalidArgument, "tensor_grid needs a bounded box");
  if (points_per_dim < 2) throw Error(ErrorKind::kInvalidArgument, "grid needs >= 2 points per dim");
  const std::size_t n = box.dim();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= points_per_dim;
  const Vector lo = box.lower(), hi = box.upper();
  std::vector<Vector> out;
  out.reserve(total);
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t k = 0; k < total; ++k) {
    Vector p(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(idx[i]) / static_cast<double>(points_per_dim - 1);
      p[static_cast<Eigen::Index>(i)] = lo[static_cast<Eigen::Index>(i)] +
                                        t * (hi[static_cast<Eigen::Index>(i)] - lo[static_cast<Eigen::Index>(i)]);
    }
    out.push_back(std::move(p));
    for (std::size_t i = 0; i < n; ++i) {
      if (++idx[i] < points_per_dim) break;
      idx[i] = 0;
    }
  }
  return out;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k)
    out[k] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  return out;
}

}  // namespace phienv

#endif  // PHIENV_SAMPLING_HPP_
