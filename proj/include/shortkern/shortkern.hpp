#pragma once

#include "shortkern/error.hpp"
#include "shortkern/kernel_engine.hpp"
#include "shortkern/krr.hpp"
#include "shortkern/operator_core.hpp"
#include "shortkern/random.hpp"
#include "shortkern/shorting_dynamics.hpp"
#include "shortkern/task_energy.hpp"
#include "shortkern/tolerances.hpp"
#include "shortkern/trajectory.hpp"
