#pragma once

#include <string>
#include <vector>

#include "hfrisk/pipeline.hpp"
#include "hfrisk/random.hpp"

namespace fixture {

/// Balanced split where column 0 separates the classes and every other
/// column is standard normal noise. Already on a standardized scale.
inline hfrisk::DatasetSplit separable_split(std::size_t dim, std::uint64_t seed, std::size_t n_train = 400,
                                            std::size_t n_eval = 200) {
  hfrisk::Rng rng(seed);
  auto make = [&](std::size_t n, const std::string& prefix) {
    std::vector<hfrisk::LabeledSample> out;
    for (std::size_t i = 0; i < n; ++i) {
      const bool label = i % 2 == 0;
      hfrisk::FeatureVector x(dim);
      for (auto& v : x) v = rng.normal();
      x[0] = (label ? 1.5 : -1.5) + 0.5 * rng.normal();
      out.push_back({prefix + std::to_string(i), hfrisk::Date::from_serial(static_cast<int>(i)), x, label});
    }
    return out;
  };
  hfrisk::DatasetSplit s;
  s.train = make(n_train, "t");
  s.validation = make(n_eval, "v");
  s.test = make(n_eval, "x");
  return s;
}

}  // namespace fixture
