#pragma once

#include <functional>
#include <string>
#include <vector>

namespace tscale {

struct SelfTestCase {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Built-in duality-identity and solver-oracle checks. `report` is called
/// after each case.
std::vector<SelfTestCase> run_selftest(const std::function<void(const SelfTestCase&)>& report = {});

}  // namespace tscale
