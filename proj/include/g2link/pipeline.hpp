// Stage functions shared by the command-line tool and the test suites.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>

#include "g2link/cy_metric.hpp"
#include "g2link/dataset.hpp"
#include "g2link/link.hpp"

namespace g2link {

/// Base metric predicted by a trained correction network.
BaseMetricFn network_source(std::shared_ptr<const CorrectionNet> net);

struct BuildConfig {
  DatasetMode mode = DatasetMode::FS;
  int thetas = 5;
  std::uint64_t seed = 0;
  std::size_t calibration_points = 1000;
  double calibration_eps = 1e-4;
};

struct BuildReport {
  double c_eta = 0.0;
  UpsilonNormalization normalization;
  std::size_t skipped_base_points = 0;
};

/// Fibre angles for base point i: evenly spaced with an offset drawn per point.
std::vector<double> fibre_angles(std::uint64_t seed, std::uint64_t base_index, int thetas);

/// Calibrates c_eta, normalises Upsilon against the chosen base metric and
/// builds `thetas` records per base point.  `net` is required in NN mode.
Dataset build_dataset(std::span<const QuinticPoint> base, const BuildConfig& cfg,
                      std::shared_ptr<const CorrectionNet> net = nullptr, BuildReport* report = nullptr);

/// The construction a dataset was built with.
G2Construction construction_for(const DatasetHeader& header, std::shared_ptr<const CorrectionNet> net = nullptr);

/// Chart and chart coordinates of a stored record, recovered from its
/// ambient coordinates and patch.
struct RecordChart {
  LinkChart chart;
  Vec7 coords;
};
RecordChart record_chart(const G2Sample& s);

}  // namespace g2link
