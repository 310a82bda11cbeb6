#pragma once

#include "hglue/config.hpp"
#include "hglue/core/error.hpp"
#include "hglue/core/rng.hpp"
#include "hglue/core/schedule.hpp"
#include "hglue/core/state.hpp"
#include "hglue/core/tolerances.hpp"
#include "hglue/core/units.hpp"
#include "hglue/diagnostics.hpp"
#include "hglue/exactness.hpp"
#include "hglue/geometry.hpp"
#include "hglue/glue.hpp"
#include "hglue/integrators.hpp"
#include "hglue/io.hpp"
#include "hglue/kernel.hpp"
#include "hglue/lattice.hpp"
#include "hglue/observables.hpp"
#include "hglue/parallel.hpp"
#include "hglue/potentials.hpp"
