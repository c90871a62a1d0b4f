#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ousb/ou_process.hpp"

namespace ousb {

struct MetricReport {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;  // MC standard error where applicable
  int n_x = 0;
  int n_y = 0;
  bool approximate = false;
};

// Squared Bures-Wasserstein distance
// ||a-b||^2 + tr A + tr B - 2 tr (A^{1/2} B A^{1/2})^{1/2}.
double bw2(const Gaussian& g1, const Gaussian& g2);

// Energy distance 2 E||X-Y|| - E||X-X'|| - E||Y-Y'|| (V-statistic).
double energy_distance(const Matrix& x, const Matrix& y);

// Earth mover's distance with Euclidean ground cost and uniform weights.
// Exact for N*M <= 1e6 (assignment solver when N == M, min-cost flow
// otherwise); entropic approximation (eps = 1e-3, no debiasing) above that,
// flagged in the report.
double emd(const Matrix& x, const Matrix& y);
MetricReport emd_report(const Matrix& x, const Matrix& y);

using TimeVaryingField = std::function<Vector(double, const Vector&)>;
using GaussianPath = std::function<Gaussian(double)>;

// Monte-Carlo L2(law) error between two vector fields, averaged over `times`;
// n_mc samples per time.
MetricReport force_error(const TimeVaryingField& f1, const TimeVaryingField& f2,
                         const GaussianPath& law, const std::vector<double>& times, int n_mc,
                         uint64_t seed);

// Mean and unbiased covariance with 1e-8 I jitter.
Gaussian fit_gaussian(const Matrix& samples);

}  // namespace ousb
