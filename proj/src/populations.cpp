#include "rydchain/populations.hpp"

#include <numeric>

#include "rydchain/errors.hpp"

namespace rydchain {

template <class Alphabet>
ProductDistribution<Alphabet>::ProductDistribution(std::size_t n_atoms, std::vector<double> values)
    : n_atoms_(n_atoms), values_(std::move(values)) {
  if (values_.size() != ipow(base, n_atoms_))
    throw ContractError("distribution size does not match " + std::to_string(n_atoms_) + " atoms");
}

template <class Alphabet>
double ProductDistribution<Alphabet>::total() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

template <class Alphabet>
std::size_t ProductDistribution<Alphabet>::index_of(std::span<const std::size_t> digits) const {
  if (digits.size() != n_atoms_) throw ContractError("digit count does not match atom count");
  std::size_t index = 0;
  for (std::size_t d : digits) {
    if (d >= base) throw ContractError("digit out of range");
    index = index * base + d;
  }
  return index;
}

template <class Alphabet>
std::size_t ProductDistribution<Alphabet>::index_of(std::string_view label) const {
  if (label.size() != n_atoms_) throw ContractError("label '" + std::string(label) + "' has wrong length");
  std::size_t index = 0;
  for (char c : label) {
    const auto d = Alphabet::symbols.find(c);
    if (d == std::string_view::npos) throw ContractError("unknown symbol in label '" + std::string(label) + "'");
    index = index * base + d;
  }
  return index;
}

template <class Alphabet>
std::string ProductDistribution<Alphabet>::label(std::size_t index) const {
  std::string out(n_atoms_, '?');
  for (std::size_t atom = n_atoms_; atom-- > 0;) {
    out[atom] = Alphabet::symbols[index % base];
    index /= base;
  }
  return out;
}

template class ProductDistribution<LevelAlphabet>;
template class ProductDistribution<ReadoutAlphabet>;
template class ProductDistribution<RecaptureAlphabet>;

}  // namespace rydchain
