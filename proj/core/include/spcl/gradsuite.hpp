#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace spcl {

struct GradCaseResult {
  std::string name;
  std::size_t instances = 0;
  double max_error = 0.0;  // largest grad_check error over the instances
};

// Finite-difference audit of every training objective on random seeded
// instances: icl, bcl, sup, unsup, the weighted composite, and the composite
// through a small network (gradient with respect to the input image).
std::vector<GradCaseResult> run_gradient_suite(std::size_t instances, std::uint64_t seed);

}  // namespace spcl
