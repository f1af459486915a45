#include "g2link/ned.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>

namespace g2link {

AltForm ned_from_stencil(std::span<const AltForm> plus, std::span<const AltForm> minus, double eps) {
  if (plus.size() != 7 || minus.size() != 7) throw std::invalid_argument("stencil must have 7 axes");
  const int k = plus[0].degree();
  const int n = plus[0].dim();
  AltForm out(n, k + 1);
  const auto& masks = MultiIndex::subsets(n, k + 1);
  const double inv = 1.0 / (2.0 * eps);
  for (std::size_t r = 0; r < masks.size(); ++r) {
    double acc = 0.0;
    int j = 0;
    for (std::uint32_t m = masks[r]; m; m &= m - 1, ++j) {
      const int axis = std::countr_zero(m);
      const int sub = MultiIndex::rank(n, masks[r] & ~(1u << axis));
      const double diff = plus[axis][sub] - minus[axis][sub];
      acc += (j & 1) ? -diff : diff;
    }
    out[r] = acc * inv;
  }
  return out;
}

AltForm ned(const FormEvaluator& f, const Vec7& p, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("ned: eps must be positive");
  if (f.degree >= 7) throw std::invalid_argument("ned: degree must be < 7");
  std::array<AltForm, 7> plus, minus;
  for (int i = 0; i < 7; ++i) {
    for (int dir : {+1, -1}) {
      Vec7 q = p;
      q[i] += dir * eps;
      AltForm value;
      try {
        value = f.eval(q);
      } catch (const std::exception& ex) {
        throw NedError(i, dir, ex.what());
      }
      if (value.dim() != 7 || value.degree() != f.degree) throw NedError(i, dir, "evaluator returned wrong shape");
      for (double c : value.coeffs())
        if (!std::isfinite(c)) throw NedError(i, dir, "non-finite value");
      (dir > 0 ? plus : minus)[i] = std::move(value);
    }
  }
  return ned_from_stencil(plus, minus, eps);
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Collapse: return "collapse";
    case Regime::Spike: return "spike";
    case Regime::Plateau: return "plateau";
    case Regime::Transition: return "transition";
  }
  return "?";
}

bool SweepResult::well_ordered() const {
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (!(entries[i].eps > entries[i - 1].eps)) return false;
  return true;
}

bool SweepResult::has(Regime r) const {
  return std::any_of(entries.begin(), entries.end(), [r](const SweepEntry& e) { return e.regime == r; });
}

std::vector<Regime> SweepResult::regime_sequence() const {
  std::vector<Regime> seq;
  for (const auto& e : entries) {
    if (e.regime == Regime::Transition) continue;
    if (seq.empty() || seq.back() != e.regime) seq.push_back(e.regime);
  }
  return seq;
}

void SweepResult::write_csv(std::ostream& os) const {
  os << "epsilon,median_norm,failures,regime\n";
  os << std::setprecision(17);
  for (const auto& e : entries)
    os << e.eps << ',' << e.median_norm << ',' << e.failures << ',' << regime_name(e.regime) << '\n';
}

void label_regimes(SweepResult& result) {
  auto& en = result.entries;
  for (auto& e : en) e.regime = Regime::Transition;
  if (en.empty()) return;
  const double top = en.back().eps;
  // Plateau: the top decade of eps, when its medians are within 20% of each other.
  std::vector<std::size_t> top_decade;
  for (std::size_t i = 0; i < en.size(); ++i)
    if (en[i].eps >= top / 10.0 * (1.0 - 1e-12)) top_decade.push_back(i);
  if (top_decade.size() >= 2) {
    double lo = en[top_decade.front()].median_norm, hi = lo;
    for (auto i : top_decade) {
      lo = std::min(lo, en[i].median_norm);
      hi = std::max(hi, en[i].median_norm);
    }
    const double mid = 0.5 * (lo + hi);
    if (mid > 0.0 && (hi - lo) / mid < 0.2) {
      for (auto i : top_decade) en[i].regime = Regime::Plateau;
      // Extend the plateau downwards while values stay within the band.
      for (std::size_t i = top_decade.front(); i-- > 0;) {
        if (std::abs(en[i].median_norm - mid) / mid < 0.1) en[i].regime = Regime::Plateau;
        else break;
      }
    }
  }
  for (std::size_t i = 0; i < en.size(); ++i) {
    if (en[i].median_norm < 1e-10) {
      en[i].regime = Regime::Collapse;
      continue;
    }
    if (en[i].regime == Regime::Plateau) continue;
    if (i > 0 && i + 1 < en.size() && en[i].median_norm > 10.0 * en[i - 1].median_norm &&
        en[i].median_norm > 10.0 * en[i + 1].median_norm)
      en[i].regime = Regime::Spike;
  }
}

SweepResult epsilon_sweep(std::span<const AnchoredEvaluator> points, std::span<const double> eps_list,
                          const FormNorm& norm_fn) {
  if (points.empty() || eps_list.empty()) throw std::invalid_argument("epsilon_sweep: empty input");
  SweepResult result;
  std::vector<double> norms;
  for (double eps : eps_list) {
    SweepEntry entry;
    entry.eps = eps;
    norms.clear();
    for (std::size_t i = 0; i < points.size(); ++i) {
      try {
        const AltForm d = ned(points[i].f, points[i].p, eps);
        norms.push_back(norm_fn ? norm_fn(d, i) : d.coeff_norm());
      } catch (const NedError&) {
        ++entry.failures;
      }
    }
    if (norms.empty()) {
      entry.median_norm = std::nan("");
    } else {
      const auto mid = norms.begin() + static_cast<std::ptrdiff_t>(norms.size() / 2);
      std::nth_element(norms.begin(), mid, norms.end());
      double med = *mid;
      if (norms.size() % 2 == 0) {
        const double lower = *std::max_element(norms.begin(), mid);
        med = 0.5 * (med + lower);
      }
      entry.median_norm = med;
    }
    result.entries.push_back(entry);
  }
  std::sort(result.entries.begin(), result.entries.end(),
            [](const SweepEntry& a, const SweepEntry& b) { return a.eps < b.eps; });
  label_regimes(result);
  return result;
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) throw std::invalid_argument("log_grid: bad range");
  const int steps = static_cast<int>(std::lround(std::log10(hi / lo) * per_decade));
  std::vector<double> out;
  for (int i = 0; i <= steps; ++i) out.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
  return out;
}

}  // namespace g2link
