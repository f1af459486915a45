#include "g2link/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace g2link {

namespace {

void require_nonempty(std::span<const double> v, const char* what) {
  if (v.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
}

}  // namespace

double mean(std::span<const double> v) {
  require_nonempty(v, "mean");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

double quantile(std::span<const double> v, double q) {
  require_nonempty(v, "quantile");
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double median(std::span<const double> v) { return quantile(v, 0.5); }

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double pmcc(std::span<const double> x, std::span<const double> y) { return linear_fit(x, y).r; }

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: need two equal-length series");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r = (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
  return f;
}

Histogram histogram(std::span<const double> v, int bins) {
  require_nonempty(v, "histogram");
  if (bins < 1) throw std::invalid_argument("histogram: bins must be positive");
  Histogram h;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  h.lo = *lo;
  h.hi = *hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  const double width = (h.hi - h.lo) / bins;
  for (double x : v) {
    int b = width > 0.0 ? static_cast<int>((x - h.lo) / width) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

void write_histograms_csv(std::ostream& os, const std::vector<std::string>& names, const std::vector<Histogram>& hs) {
  os << "component,bin,lo,hi,count\n" << std::setprecision(12);
  for (std::size_t c = 0; c < hs.size(); ++c) {
    const auto& h = hs[c];
    const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b)
      os << names[c] << ',' << b << ',' << h.lo + width * static_cast<double>(b) << ','
         << h.lo + width * static_cast<double>(b + 1) << ',' << h.counts[b] << '\n';
  }
}

}  // namespace g2link
