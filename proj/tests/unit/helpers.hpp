#pragma once

#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "roughsim/error.hpp"
#include "roughsim/random.hpp"
#include "roughsim/surface.hpp"

namespace testing_util {

// Runs `body` and checks it throws roughsim::Error of the given kind.
template <typename Body>
void expect_error(Body&& body, roughsim::ErrorKind kind) {
  try {
    body();
    ADD_FAILURE() << "expected " << roughsim::to_string(kind) << " error";
  } catch (const roughsim::Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

inline roughsim::HeightField gaussian_field(std::size_t n, double length, std::uint64_t seed,
                                            double scale = 1.0) {
  roughsim::Rng rng(seed);
  std::vector<double> z(n * n);
  for (auto& v : z) v = scale * rng.normal();
  return roughsim::HeightField(n, length, std::move(z));
}

inline roughsim::HeightField rmd_field(int k, double hurst, double sigma0, std::uint64_t seed,
                                       double length = 1000.0) {
  roughsim::SurfaceSpec spec;
  spec.iterations = k;
  spec.hurst = hurst;
  spec.sigma0_um = sigma0;
  spec.seed = seed;
  spec.scan_length_um = length;
  return roughsim::shift_to_datum(roughsim::rmd_generate(spec));
}

}  // namespace testing_util
