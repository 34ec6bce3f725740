#include "riverweb/lattice_field.hpp"

#include <cmath>
#include <string>

namespace riverweb {

FieldConfig::FieldConfig(double p, std::uint64_t seed, std::int64_t search_cap)
    : p_(p), seed_(seed), search_cap_(search_cap), threshold_(0) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("field probability must satisfy 0 < p < 1, got " + std::to_string(p));
  if (search_cap < 1) throw DomainError("search cap must be positive");
  threshold_ = static_cast<std::uint64_t>(std::ldexp(p, 53));
}

}  // namespace riverweb
