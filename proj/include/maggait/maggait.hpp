// Umbrella header.
#pragma once

#include "core.hpp"
#include "magnetostatics.hpp"
#include "rig.hpp"
#include "robot.hpp"
#include "field_model.hpp"
#include "gait.hpp"
#include "control.hpp"
#include "scenario.hpp"
#include "config.hpp"
#include "io.hpp"
#include "teleop.hpp"

namespace maggait {

inline constexpr const char* kVersion = "0.1.0";

} // namespace maggait
