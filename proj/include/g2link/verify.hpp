// Checks run on a G2 dataset and, optionally, on trained regressors.
#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "g2link/dataset.hpp"
#include "g2link/ned.hpp"
#include "g2link/pipeline.hpp"
#include "g2link/regressor.hpp"
#include "g2link/stats.hpp"

namespace g2link {

struct Summary {
  double mean = 0.0, sd = 0.0, median = 0.0, max = 0.0;
  std::size_t count = 0;
  static Summary of(std::span<const double> v);
};

/// phi ^ psi / vol(g_phi) with psi = *phi, plus the same ratio with the
/// stored (structural) psi and the relative gap between the two 4-forms.
struct WedgeCheck {
  std::vector<double> ratio;
  std::vector<double> ratio_structural;
  std::vector<double> hodge_gap;
  double max_stored_metric_error = 0.0;
  std::size_t positive_definite = 0;
};
WedgeCheck wedge_check(std::span<const G2Sample> samples);

/// |eta ^ (d eta)^3| with d eta from NED at step eps.
struct ContactCheck {
  std::vector<double> value;
  std::size_t failures = 0;
};
ContactCheck contact_check(std::span<const G2Sample> samples, const G2Construction& cons, double eps);

struct TorsionStats {
  double eps = 0.0;
  std::size_t points = 0;
  std::size_t failures = 0;
  std::vector<double> dphi_norm, ww_norm, dphi_minus_ww, dpsi_norm, psi_norm, phi_norm;
  double mse_dphi_ww = 0.0;
  Summary dphi_ratio() const;  // |d phi| / |omega ^ omega|
  Summary dpsi() const;
};

/// Evaluators for phi and psi at chart coordinates.
struct FormPair {
  FormEvaluator phi, psi;
};
using FormPairFactory = std::function<FormPair(const LinkChart&)>;

FormPairFactory exact_forms(const G2Construction& cons);
/// phi from the form model, psi = *_{g} phi with g from the metric model;
/// model inputs use the exact contact form at each stencil point.
FormPairFactory model_forms(std::shared_ptr<const DenseModel> form_model, std::shared_ptr<const DenseModel> metric_model,
                            double c_eta);

/// d phi against omega ^ omega (omega from the stored record) and d psi.
TorsionStats torsion_check(std::span<const G2Sample> samples, const FormPairFactory& forms, double eps);

struct RegressorEval {
  double normalized_mse = 0.0;
  std::vector<double> component_pmcc;  // phi components, or g components for the metric model
  std::vector<bool> component_constant;
  double min_component_pmcc = 0.0;
  double positive_definite_fraction = 1.0;
};
RegressorEval evaluate_regressor(const DenseModel& model, std::span<const G2Sample> test);

/// Model-predicted phi ^ *phi / vol on the given samples.
std::vector<double> model_wedge_ratio(const DenseModel& form_model, const DenseModel& metric_model,
                                      std::span<const G2Sample> samples);

struct VolumeCheck {
  LinearFit fit;  // vol_g2 = slope * vol_cy + intercept
};
VolumeCheck volume_check(std::span<const G2Sample> samples);

/// Histograms of the 35 phi and 28 g components.
void write_component_histograms(std::ostream& phi_csv, std::ostream& g_csv, std::span<const G2Sample> samples,
                                int bins = 60);

/// Anchored evaluators of one form at the given records, for epsilon sweeps.
enum class SweepForm { Phi, Psi };
std::vector<AnchoredEvaluator> sweep_points(std::span<const G2Sample> samples, const FormPairFactory& forms,
                                            SweepForm which);
/// Anchored evaluators of the base Kaehler form.
std::vector<AnchoredEvaluator> kahler_sweep_points(std::span<const G2Sample> samples, const G2Construction& cons);

}  // namespace g2link
