#include "g2link/verify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace g2link {

Summary Summary::of(std::span<const double> v) {
  Summary s;
  s.count = v.size();
  if (v.empty()) return s;
  s.mean = g2link::mean(v);
  s.sd = stddev(v);
  s.median = g2link::median(v);
  s.max = *std::max_element(v.begin(), v.end());
  return s;
}

WedgeCheck wedge_check(std::span<const G2Sample> samples) {
  WedgeCheck out;
  for (const auto& s : samples) {
    const AltForm phi(7, 3, {s.phi.begin(), s.phi.end()});
    const AltForm psi_s(7, 4, {s.psi.begin(), s.psi.end()});
    const G2Metric gm = metric_from_3form(phi);
    const AltForm psi = hodge_star(phi, gm.metric, gm.orientation);
    const double vol = gm.orientation * gm.volume_density;
    out.ratio.push_back(wedge(phi, psi)[0] / vol);
    out.ratio_structural.push_back(wedge(phi, psi_s)[0] / vol);
    out.hodge_gap.push_back((psi - psi_s).coeff_norm() / psi_s.coeff_norm());
    const auto lower = gm.metric.lower_triangle();
    for (std::size_t k = 0; k < lower.size(); ++k)
      out.max_stored_metric_error = std::max(out.max_stored_metric_error, std::abs(lower[k] - s.g[k]));
    if (gm.metric.is_positive_definite()) ++out.positive_definite;
  }
  return out;
}

ContactCheck contact_check(std::span<const G2Sample> samples, const G2Construction& cons, double eps) {
  ContactCheck out;
  for (const auto& s : samples) {
    const RecordChart rc = record_chart(s);
    try {
      const FormEvaluator f = local_form_evaluator(rc.chart, cons, LocalForm::Eta);
      const AltForm deta = ned(f, rc.coords, eps);
      const AltForm eta = f.eval(rc.coords);
      out.value.push_back(std::abs(wedge(eta, wedge(deta, wedge(deta, deta)))[0]));
    } catch (const NedError&) {
      ++out.failures;
    }
  }
  return out;
}

Summary TorsionStats::dphi_ratio() const {
  std::vector<double> r;
  for (std::size_t i = 0; i < dphi_norm.size(); ++i) r.push_back(dphi_norm[i] / ww_norm[i]);
  return Summary::of(r);
}

Summary TorsionStats::dpsi() const { return Summary::of(dpsi_norm); }

FormPairFactory exact_forms(const G2Construction& cons) {
  return [cons](const LinkChart& chart) {
    return FormPair{local_form_evaluator(chart, cons, LocalForm::Phi), local_form_evaluator(chart, cons, LocalForm::Psi)};
  };
}

FormPairFactory model_forms(std::shared_ptr<const DenseModel> form_model, std::shared_ptr<const DenseModel> metric_model,
                            double c_eta) {
  return [form_model, metric_model, c_eta](const LinkChart& chart) {
    auto inputs = [chart, c_eta](const Vec7& u) {
      const ChartPoint cp = chart.evaluate(u);
      return make_input19(cp.x, c_eta * round_contact_pullback(cp.x, cp.J), chart.patch());
    };
    FormPair fp;
    fp.phi.degree = 3;
    fp.phi.chart = 5 * chart.patch().a + chart.patch().e;
    fp.phi.eval = [form_model, inputs](const Vec7& u) { return predict_phi(*form_model, inputs(u)); };
    fp.psi.degree = 4;
    fp.psi.chart = fp.phi.chart;
    fp.psi.eval = [form_model, metric_model, inputs](const Vec7& u) {
      const auto in = inputs(u);
      const AltForm phi = predict_phi(*form_model, in);
      const MetricTensor g = predict_metric(*metric_model, in);
      const int orientation = g2_b_matrix(phi).determinant() < 0.0 ? 1 : -1;
      return hodge_star(phi, g, orientation);
    };
    return fp;
  };
}

TorsionStats torsion_check(std::span<const G2Sample> samples, const FormPairFactory& forms, double eps) {
  TorsionStats t;
  t.eps = eps;
  double sq = 0.0;
  std::size_t nsq = 0;
  for (const auto& s : samples) {
    const RecordChart rc = record_chart(s);
    const FormPair fp = forms(rc.chart);
    AltForm dphi, dpsi, psi, phi;
    try {
      dphi = ned(fp.phi, rc.coords, eps);
      dpsi = ned(fp.psi, rc.coords, eps);
      phi = fp.phi.eval(rc.coords);
      psi = fp.psi.eval(rc.coords);
    } catch (const std::exception&) {
      ++t.failures;
      continue;
    }
    const AltForm omega(7, 2, {s.omega.begin(), s.omega.end()});
    const AltForm ww = wedge(omega, omega);
    const AltForm diff = dphi - ww;
    t.dphi_norm.push_back(dphi.coeff_norm());
    t.ww_norm.push_back(ww.coeff_norm());
    t.dphi_minus_ww.push_back(diff.coeff_norm());
    t.dpsi_norm.push_back(dpsi.coeff_norm());
    t.psi_norm.push_back(psi.coeff_norm());
    t.phi_norm.push_back(phi.coeff_norm());
    sq += diff.as_eigen().squaredNorm();
    nsq += diff.size();
    ++t.points;
  }
  t.mse_dphi_ww = nsq ? sq / static_cast<double>(nsq) : std::nan("");
  return t;
}

RegressorEval evaluate_regressor(const DenseModel& model, std::span<const G2Sample> test) {
  RegressorEval ev;
  ev.normalized_mse = normalized_mse(model, test);
  std::vector<std::array<double, 19>> inputs;
  inputs.reserve(test.size());
  for (const auto& s : test) inputs.push_back(s.input19);
  const Eigen::MatrixXd raw = predict_raw(model, inputs);
  const int width = model.kind == ModelKind::Form ? 35 : 28;
  std::vector<std::vector<double>> truth(width), pred(width);
  std::size_t pd = 0;
  for (std::size_t c = 0; c < test.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    if (model.kind == ModelKind::Form) {
      for (int k = 0; k < 35; ++k) {
        truth[k].push_back(test[c].phi[k]);
        pred[k].push_back(raw(k, col));
      }
    } else {
      const MetricTensor g = metric_from_cholesky(std::span<const double>(raw.col(col).data(), 28));
      if (g.eigenvalues().minCoeff() > 0.0) ++pd;
      const auto lower = g.lower_triangle();
      for (int k = 0; k < 28; ++k) {
        truth[k].push_back(test[c].g[k]);
        pred[k].push_back(lower[k]);
      }
    }
  }
  ev.min_component_pmcc = 1.0;
  for (int k = 0; k < width; ++k) {
    const bool constant = stddev(truth[k]) < 1e-12;
    ev.component_constant.push_back(constant);
    const double r = constant ? std::nan("") : pmcc(truth[k], pred[k]);
    ev.component_pmcc.push_back(r);
    if (!constant) ev.min_component_pmcc = std::min(ev.min_component_pmcc, r);
  }
  if (model.kind == ModelKind::Metric) ev.positive_definite_fraction = static_cast<double>(pd) / static_cast<double>(test.size());
  return ev;
}

std::vector<double> model_wedge_ratio(const DenseModel& form_model, const DenseModel& metric_model,
                                      std::span<const G2Sample> samples) {
  std::vector<std::array<double, 19>> inputs;
  for (const auto& s : samples) inputs.push_back(s.input19);
  const Eigen::MatrixXd phis = predict_raw(form_model, inputs);
  const Eigen::MatrixXd chol = predict_raw(metric_model, inputs);
  std::vector<double> out;
  for (Eigen::Index c = 0; c < phis.cols(); ++c) {
    const AltForm phi(7, 3, std::vector<double>(phis.col(c).data(), phis.col(c).data() + 35));
    const MetricTensor g = metric_from_cholesky(std::span<const double>(chol.col(c).data(), 28));
    const int orientation = g2_b_matrix(phi).determinant() < 0.0 ? 1 : -1;
    const AltForm psi = hodge_star(phi, g, orientation);
    out.push_back(wedge(phi, psi)[0] / (orientation * std::sqrt(g.matrix().determinant())));
  }
  return out;
}

VolumeCheck volume_check(std::span<const G2Sample> samples) {
  std::vector<double> x, y;
  for (const auto& s : samples) {
    x.push_back(s.vol_cy);
    y.push_back(s.vol_g2);
  }
  return {linear_fit(x, y)};
}

void write_component_histograms(std::ostream& phi_csv, std::ostream& g_csv, std::span<const G2Sample> samples, int bins) {
  std::vector<std::string> names;
  std::vector<Histogram> hs;
  const auto& masks = MultiIndex::subsets(7, 3);
  for (int k = 0; k < 35; ++k) {
    std::string name = "phi_";
    for (int i : MultiIndex::indices(masks[k])) name += std::to_string(i + 1);
    std::vector<double> v;
    for (const auto& s : samples) v.push_back(s.phi[k]);
    names.push_back(name);
    hs.push_back(histogram(v, bins));
  }
  write_histograms_csv(phi_csv, names, hs);
  names.clear();
  hs.clear();
  int k = 0;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j <= i; ++j, ++k) {
      std::vector<double> v;
      for (const auto& s : samples) v.push_back(s.g[k]);
      names.push_back("g_" + std::to_string(i + 1) + std::to_string(j + 1));
      hs.push_back(histogram(v, bins));
    }
  write_histograms_csv(g_csv, names, hs);
}

std::vector<AnchoredEvaluator> sweep_points(std::span<const G2Sample> samples, const FormPairFactory& forms,
                                            SweepForm which) {
  std::vector<AnchoredEvaluator> out;
  for (const auto& s : samples) {
    const RecordChart rc = record_chart(s);
    const FormPair fp = forms(rc.chart);
    out.push_back({which == SweepForm::Phi ? fp.phi : fp.psi, rc.coords});
  }
  return out;
}

std::vector<AnchoredEvaluator> kahler_sweep_points(std::span<const G2Sample> samples, const G2Construction& cons) {
  std::vector<AnchoredEvaluator> out;
  for (const auto& s : samples) {
    const RecordChart rc = record_chart(s);
    out.push_back({local_form_evaluator(rc.chart, cons, LocalForm::Omega), rc.coords});
  }
  return out;
}

}  // namespace g2link
