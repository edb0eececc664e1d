#pragma once

#include "faa/bench.hpp"
#include "faa/driver.hpp"
#include "faa/edge_coloring.hpp"
#include "faa/exact.hpp"
#include "faa/graph.hpp"
#include "faa/mps.hpp"
#include "faa/rng.hpp"
#include "faa/schedule.hpp"
#include "faa/statevector.hpp"
