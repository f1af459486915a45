#include "g2link/mlp.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace g2link {

namespace detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("unexpected end of file");
  return v;
}

double read_f64(std::istream& is) {
  double v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("unexpected end of file");
  return v;
}

}  // namespace detail

template class Mlp<float>;
template class Mlp<double>;
template struct Adam<float>;
template struct Adam<double>;

}  // namespace g2link
