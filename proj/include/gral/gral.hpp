#pragma once

#include "gral/epoch.hpp"
#include "gral/error.hpp"
#include "gral/experiment.hpp"
#include "gral/graph.hpp"
#include "gral/io.hpp"
#include "gral/localizer.hpp"
#include "gral/metrics.hpp"
#include "gral/package.hpp"
#include "gral/position.hpp"
#include "gral/propagation.hpp"
#include "gral/simulator.hpp"
#include "gral/version.hpp"
