#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "landtriage/dataset.hpp"

namespace landtriage::sim {

// mt19937_64 with hand-rolled draws. The engine is specified exactly by the
// standard but the distributions are not, so outputs would differ across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  std::size_t index(std::size_t n);
  bool chance(double p);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 gen_;
};

// P(true positive | score). Accepted forms: "pl:s0=p0,s1=p1,..." (piecewise linear,
// flat outside the knots) and "const:p".
class TprCurve {
 public:
  TprCurve() = default;
  static TprCurve parse(std::string_view spec);
  double operator()(double score) const;
  bool monotone() const;
  const std::string& spec() const { return spec_; }

 private:
  std::vector<std::pair<double, double>> knots_{{0.0, 0.02}, {0.5, 0.08}, {0.8, 0.35}, {1.0, 0.45}};
  std::string spec_ = "pl:0=0.02,0.5=0.08,0.8=0.35,1=0.45";
};

struct SimParams {
  std::uint64_t seed = 42;
  int facilities = 40;
  int runs = 8;
  int verifiers = 0;  // 0: one per five facilities, at least two
  TprCurve curve;
  double followup_rate = 0.72;
  double visibility_rate = 0.77;
  double accept_true = 0.8;
  double accept_false = 0.12;
};

// Random trial: facilities on a jittered grid, verifiers at random homes, and
// detections whose truth is drawn from the curve at their score. Routing is
// emulated with the engine's own rules so assignment ids line up on import.
Dataset simulate(const SimParams& p);

// The bundled field-trial dataset: synthetic raw records built so that the
// engine's reports reproduce the 2023 field-trial aggregates.
Dataset trial2023();

}  // namespace landtriage::sim
