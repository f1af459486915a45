#include "g2link/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "g2link/random.hpp"

namespace g2link {

BaseMetricFn network_source(std::shared_ptr<const CorrectionNet> net) {
  if (!net) throw std::invalid_argument("network_source: no network");
  return [net](const CVec5& Z, Patch p) { return predict_metric(*net, Z, p); };
}

std::vector<double> fibre_angles(std::uint64_t seed, std::uint64_t base_index, int thetas) {
  if (thetas < 1) throw std::invalid_argument("thetas must be >= 1");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double offset = two_pi * hash_uniform(seed ^ 0xF1B7E, base_index);
  std::vector<double> out;
  for (int j = 0; j < thetas; ++j) out.push_back(std::fmod(offset + two_pi * j / thetas, two_pi));
  return out;
}

G2Construction construction_for(const DatasetHeader& header, std::shared_ptr<const CorrectionNet> net) {
  G2Construction cons;
  cons.c_eta = header.c_eta;
  cons.lambda = header.lambda;
  if (header.mode == DatasetMode::NN) cons.base_metric = network_source(std::move(net));
  return cons;
}

Dataset build_dataset(std::span<const QuinticPoint> base, const BuildConfig& cfg,
                      std::shared_ptr<const CorrectionNet> net, BuildReport* report) {
  if (base.empty()) throw std::invalid_argument("build_dataset: no base points");
  if (cfg.mode == DatasetMode::NN && !net) throw std::invalid_argument("build_dataset: NN mode needs a CY metric model");
  BuildReport rep;
  const std::size_t ncal = std::min(cfg.calibration_points, base.size());
  rep.c_eta = calibrate_contact_scale(base.first(ncal), cfg.calibration_eps);

  G2Construction cons;
  cons.c_eta = rep.c_eta;
  if (cfg.mode == DatasetMode::NN) cons.base_metric = network_source(net);
  {
    std::vector<HermitianMetric3> gs;
    std::vector<HoloVolSample> cs;
    gs.reserve(base.size());
    cs.reserve(base.size());
    for (const auto& p : base) {
      const CVec5 Z = affine_representative(p.z, p.patch);
      gs.push_back(cons.base_metric(Z, p.patch));
      cs.push_back({holo_coefficient_affine(Z, p.patch)});
    }
    rep.normalization = normalize_upsilon(gs, cs);
  }
  cons.lambda = rep.normalization.lambda;

  Dataset d;
  d.header.mode = cfg.mode;
  d.header.base_points = base.size();
  d.header.thetas = static_cast<std::uint32_t>(cfg.thetas);
  d.header.c_eta = rep.c_eta;
  d.header.lambda = cons.lambda;
  d.header.seed = cfg.seed;
  d.samples.reserve(base.size() * static_cast<std::size_t>(cfg.thetas));
  std::vector<G2Sample> batch;
  for (std::size_t i = 0; i < base.size(); ++i) {
    batch.clear();
    try {
      for (double theta : fibre_angles(cfg.seed, i, cfg.thetas)) {
        const LinkPoint lp = lift_to_link(base[i], theta);
        const LocalG2 l = local_g2(lp.chart(), lp.coords, cons);
        G2Sample s = build_g2_sample(lp, l.omega, l.re_u, l.im_u, l.eta);
        s.base_index = i;
        batch.push_back(s);
      }
    } catch (const ChartError&) {
      ++rep.skipped_base_points;
      continue;
    } catch (const DegenerateForm&) {
      ++rep.skipped_base_points;
      continue;
    }
    d.samples.insert(d.samples.end(), batch.begin(), batch.end());
  }
  d.header.records = d.samples.size();
  if (report) *report = rep;
  return d;
}

RecordChart record_chart(const G2Sample& s) {
  CVec5 z;
  for (int m = 0; m < 5; ++m) z(m) = cd(s.input19[m], s.input19[5 + m]);
  const Patch p{static_cast<int>(s.input19[17]), static_cast<int>(s.input19[18])};
  const CVec5 Z = affine_representative(z, p);
  const LinkChart chart(p, Z(p.e));
  return {chart, chart.coordinates_of(z)};
}

}  // namespace g2link
