// Summary statistics used by the verification reports.
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace g2link {

double mean(std::span<const double> v);
double stddev(std::span<const double> v);
double median(std::span<const double> v);
/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::span<const double> v, double q);
double max_abs(std::span<const double> v);

/// Pearson product-moment correlation.
double pmcc(std::span<const double> x, std::span<const double> y);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r = 0.0;
};
/// Least-squares fit y = slope * x + intercept.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<std::size_t> counts;
};
/// Equal-width bins over [min, max] of the data.
Histogram histogram(std::span<const double> v, int bins);

/// Long-format CSV: component,bin,lo,hi,count.
void write_histograms_csv(std::ostream& os, const std::vector<std::string>& names, const std::vector<Histogram>& h);

}  // namespace g2link
