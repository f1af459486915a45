#include "g2link/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "g2link/random.hpp"

namespace g2link {

namespace {

constexpr std::uint32_t kPointsMagic = 0x54503247;   // "G2PT"
constexpr std::uint32_t kDatasetMagic = 0x53443247;  // "G2DS"

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::string path) : bytes_(b), path_(std::move(path)) {}
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return get<double>(); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  const std::uint8_t* here() const { return bytes_.data() + pos_; }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError(path_ + ": truncated file");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
  std::string path_;
};

std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void dump(const std::string& path, const std::vector<std::uint8_t>& header, const std::vector<std::uint8_t>& payload) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path);
  os.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  os.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!os) throw FormatError("failed writing " + path);
}

void check_version(const std::string& path, std::uint32_t found, std::uint32_t expected) {
  if (found != expected)
    throw FormatError(path + ": format version " + std::to_string(found) + " but this build reads version " +
                      std::to_string(expected) + "; regenerate the file with the current tool");
}

}  // namespace

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h) {
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_points(const std::string& path, const PointsFile& f) {
  Writer payload;
  for (const auto& p : f.points) {
    for (int i = 0; i < 5; ++i) payload.f64(p.z(i).real());
    for (int i = 0; i < 5; ++i) payload.f64(p.z(i).imag());
    payload.u32(static_cast<std::uint32_t>(p.patch.a));
    payload.u32(static_cast<std::uint32_t>(p.patch.e));
    payload.f64(p.weight);
  }
  Writer head;
  head.u32(kPointsMagic);
  head.u32(kPointsVersion);
  head.u64(f.points.size());
  head.u64(f.seed);
  head.u64(f.lines);
  head.u64(f.redrawn_lines);
  head.u64(fnv1a(payload.bytes));
  dump(path, head.bytes, payload.bytes);
}

PointsFile read_points(const std::string& path) {
  const auto bytes = slurp(path);
  Reader r(bytes, path);
  if (r.u32() != kPointsMagic) throw FormatError(path + " is not a points file");
  check_version(path, r.u32(), kPointsVersion);
  PointsFile f;
  const auto n = r.u64();
  f.seed = r.u64();
  f.lines = r.u64();
  f.redrawn_lines = r.u64();
  const auto checksum = r.u64();
  if (fnv1a(std::span(r.here(), r.remaining())) != checksum) throw FormatError(path + ": checksum mismatch");
  constexpr std::size_t kPointBytes = 11 * 8 + 2 * 4;
  if (r.remaining() != n * kPointBytes) throw FormatError(path + ": point count does not match header");
  f.points.resize(n);
  for (auto& p : f.points) {
    double re[5], im[5];
    for (double& v : re) v = r.f64();
    for (double& v : im) v = r.f64();
    for (int i = 0; i < 5; ++i) p.z(i) = cd(re[i], im[i]);
    p.patch.a = static_cast<int>(r.u32());
    p.patch.e = static_cast<int>(r.u32());
    p.weight = r.f64();
  }
  return f;
}

const char* mode_name(DatasetMode m) { return m == DatasetMode::FS ? "fs" : "nn"; }

DatasetMode parse_mode(const std::string& s) {
  if (s == "fs" || s == "FS") return DatasetMode::FS;
  if (s == "nn" || s == "NN") return DatasetMode::NN;
  throw std::invalid_argument("unknown dataset mode '" + s + "' (expected fs or nn)");
}

std::array<double, kRecordReals> pack_record(const G2Sample& s) {
  std::array<double, kRecordReals> r{};
  auto it = r.begin();
  it = std::copy(s.phi.begin(), s.phi.end(), it);
  it = std::copy(s.psi.begin(), s.psi.end(), it);
  it = std::copy(s.g.begin(), s.g.end(), it);
  it = std::copy(s.omega.begin(), s.omega.end(), it);
  it = std::copy(s.eta.begin(), s.eta.end(), it);
  it = std::copy(s.input19.begin(), s.input19.end(), it);
  *it++ = s.vol_g2;
  *it++ = s.vol_cy;
  *it++ = s.theta;
  *it++ = s.patch.a;
  *it++ = s.patch.e;
  *it++ = static_cast<double>(s.base_index);
  return r;
}

G2Sample unpack_record(std::span<const double, kRecordReals> r) {
  G2Sample s;
  auto it = r.begin();
  auto take = [&it](auto& arr) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(arr.size()), arr.begin());
    it += static_cast<std::ptrdiff_t>(arr.size());
  };
  take(s.phi);
  take(s.psi);
  take(s.g);
  take(s.omega);
  take(s.eta);
  take(s.input19);
  s.vol_g2 = *it++;
  s.vol_cy = *it++;
  s.theta = *it++;
  s.patch.a = static_cast<int>(*it++);
  s.patch.e = static_cast<int>(*it++);
  s.base_index = static_cast<std::uint64_t>(*it++);
  return s;
}

void write_dataset(const std::string& path, Dataset& d) {
  Writer payload;
  payload.bytes.reserve(d.samples.size() * kRecordReals * 8);
  for (const auto& s : d.samples) {
    const auto r = pack_record(s);
    payload.raw(r.data(), r.size() * sizeof(double));
  }
  d.header.records = d.samples.size();
  d.header.checksum = fnv1a(payload.bytes);
  Writer head;
  head.u32(kDatasetMagic);
  head.u32(kDatasetVersion);
  head.u32(static_cast<std::uint32_t>(d.header.mode));
  head.u64(d.header.records);
  head.u64(d.header.base_points);
  head.u32(d.header.thetas);
  head.str(d.header.chart_order);
  head.f64(d.header.c_eta);
  head.f64(d.header.lambda.real());
  head.f64(d.header.lambda.imag());
  head.u64(d.header.seed);
  head.u32(static_cast<std::uint32_t>(kRecordReals));
  head.u64(d.header.checksum);
  dump(path, head.bytes, payload.bytes);
}

Dataset read_dataset(const std::string& path) {
  const auto bytes = slurp(path);
  Reader r(bytes, path);
  if (r.u32() != kDatasetMagic) throw FormatError(path + " is not a G2 dataset file");
  check_version(path, r.u32(), kDatasetVersion);
  Dataset d;
  const auto mode = r.u32();
  if (mode > 1) throw FormatError(path + ": unknown dataset mode");
  d.header.mode = static_cast<DatasetMode>(mode);
  d.header.records = r.u64();
  d.header.base_points = r.u64();
  d.header.thetas = r.u32();
  d.header.chart_order = r.str();
  d.header.c_eta = r.f64();
  const double lre = r.f64();
  const double lim = r.f64();
  d.header.lambda = cd(lre, lim);
  d.header.seed = r.u64();
  if (r.u32() != kRecordReals) throw FormatError(path + ": record width does not match this build");
  d.header.checksum = r.u64();
  if (d.header.chart_order != kChartOrder) throw FormatError(path + ": unexpected chart order " + d.header.chart_order);
  if (r.remaining() != d.header.records * kRecordReals * 8)
    throw FormatError(path + ": record count does not match header");
  if (fnv1a(std::span(r.here(), r.remaining())) != d.header.checksum) throw FormatError(path + ": checksum mismatch");
  d.samples.reserve(d.header.records);
  std::array<double, kRecordReals> buf{};
  for (std::uint64_t i = 0; i < d.header.records; ++i) {
    std::memcpy(buf.data(), r.here(), sizeof buf);
    r.skip(sizeof buf);
    d.samples.push_back(unpack_record(buf));
  }
  return d;
}

SplitFractions SplitFractions::parse(const std::string& s) {
  std::stringstream ss(s);
  std::string part;
  std::vector<double> v;
  while (std::getline(ss, part, ':')) v.push_back(std::stod(part));
  if (v.size() != 3) throw std::invalid_argument("split must look like 0.9:0.05:0.05");
  for (double x : v)
    if (!(x >= 0.0)) throw std::invalid_argument("split fractions must be non-negative");
  if (std::abs(v[0] + v[1] + v[2] - 1.0) > 1e-9) throw std::invalid_argument("split fractions must sum to 1");
  return {v[0], v[1], v[2]};
}

Split assign_split(std::uint64_t seed, std::uint64_t index, const SplitFractions& f) {
  const double u = hash_uniform(seed ^ 0x5E1170, index);
  if (u < f.train) return Split::Train;
  if (u < f.train + f.val) return Split::Val;
  return Split::Test;
}

SplitView split_dataset(std::span<const G2Sample> samples, std::uint64_t seed, const SplitFractions& f) {
  SplitView v;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    switch (assign_split(seed, i, f)) {
      case Split::Train: v.train.push_back(samples[i]); break;
      case Split::Val: v.val.push_back(samples[i]); break;
      case Split::Test: v.test.push_back(samples[i]); break;
    }
  }
  return v;
}

}  // namespace g2link
