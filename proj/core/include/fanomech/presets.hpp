#pragma once

#include "fanomech/scenario.hpp"

#include <string>
#include <vector>

namespace fanomech {

/// Every built-in scenario, in a fixed order.
const std::vector<Scenario>& presets();

/// Throws ValidationError for unknown names.
const Scenario& preset(const std::string& name);

std::vector<std::string> preset_names();

}  // namespace fanomech
