// Binary files for sampled base points and G2 datasets, and the
// deterministic train/validation/test split.
//
// All numbers are little-endian; reals are 8-byte IEEE doubles.  A 64-bit
// FNV-1a checksum over the payload is stored in the header.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "g2link/link.hpp"
#include "g2link/quintic.hpp"

namespace g2link {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kPointsVersion = 1;
inline constexpr std::uint32_t kDatasetVersion = 1;
/// Reals per dataset record.
inline constexpr std::size_t kRecordReals = 35 + 35 + 28 + 21 + 7 + 19 + 3 + 3;

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

struct PointsFile {
  std::uint64_t seed = 0;
  std::uint64_t lines = 0;
  std::uint64_t redrawn_lines = 0;
  std::vector<QuinticPoint> points;
};

void write_points(const std::string& path, const PointsFile& f);
PointsFile read_points(const std::string& path);

enum class DatasetMode : std::uint32_t { FS = 0, NN = 1 };
const char* mode_name(DatasetMode m);
DatasetMode parse_mode(const std::string& s);

struct DatasetHeader {
  DatasetMode mode = DatasetMode::FS;
  std::uint64_t records = 0;
  std::uint64_t base_points = 0;
  std::uint32_t thetas = 0;
  std::string chart_order{kChartOrder};
  double c_eta = 0.0;
  cd lambda = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t checksum = 0;
};

struct Dataset {
  DatasetHeader header;
  std::vector<G2Sample> samples;
};

std::array<double, kRecordReals> pack_record(const G2Sample& s);
G2Sample unpack_record(std::span<const double, kRecordReals> r);

/// Writes the dataset; header.records and header.checksum are filled in.
void write_dataset(const std::string& path, Dataset& d);
Dataset read_dataset(const std::string& path);

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

struct SplitFractions {
  double train = 0.9, val = 0.05, test = 0.05;
  static SplitFractions parse(const std::string& s);  // "0.9:0.05:0.05"
};

/// Pure function of (seed, index).
Split assign_split(std::uint64_t seed, std::uint64_t index, const SplitFractions& f);

struct SplitView {
  std::vector<G2Sample> train, val, test;
};
SplitView split_dataset(std::span<const G2Sample> samples, std::uint64_t seed, const SplitFractions& f);

}  // namespace g2link
