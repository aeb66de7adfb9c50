#pragma once

#include "saopt/config.hpp"
#include "saopt/forest.hpp"
#include "saopt/harness.hpp"
#include "saopt/metrics.hpp"
#include "saopt/nsga.hpp"
#include "saopt/operators.hpp"
#include "saopt/parallel.hpp"
#include "saopt/rng.hpp"
#include "saopt/sims.hpp"
#include "saopt/surrogate.hpp"
#include "saopt/types.hpp"
