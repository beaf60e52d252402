#pragma once

#include "vortexflow/core.hpp"
#include "vortexflow/measure.hpp"
#include "vortexflow/transport.hpp"
#include "vortexflow/simplex.hpp"
#include "vortexflow/flat_norm.hpp"
#include "vortexflow/kernels.hpp"
#include "vortexflow/test_functions.hpp"
#include "vortexflow/rng.hpp"
#include "vortexflow/wiener_sheet.hpp"
#include "vortexflow/particles.hpp"
#include "vortexflow/transport_maps.hpp"
#include "vortexflow/analysis.hpp"
#include "vortexflow/config.hpp"
#include "vortexflow/cli.hpp"
