#pragma once

#include "bearings/control_global.hpp"
#include "bearings/control_local.hpp"
#include "bearings/distance_rigidity.hpp"
#include "bearings/errors.hpp"
#include "bearings/framework.hpp"
#include "bearings/graph.hpp"
#include "bearings/linalg.hpp"
#include "bearings/rigidity.hpp"
#include "bearings/rng.hpp"
#include "bearings/sim.hpp"
#include "bearings/so3.hpp"
#include "bearings/spec_io.hpp"
#include "bearings/target.hpp"
#include "bearings/trace_io.hpp"
