#pragma once

// Umbrella header.

#include "satnet/constants.hpp"
#include "satnet/error.hpp"
#include "satnet/log.hpp"
#include "satnet/geometry.hpp"
#include "satnet/records.hpp"
#include "satnet/topology.hpp"
#include "satnet/statestore.hpp"
#include "satnet/placement.hpp"
#include "satnet/dataplane.hpp"
#include "satnet/scenario.hpp"
#include "satnet/orchestrator.hpp"
