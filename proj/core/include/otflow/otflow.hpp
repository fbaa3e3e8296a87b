#pragma once

#include "otflow/error.hpp"
#include "otflow/features.hpp"
#include "otflow/flow_io.hpp"
#include "otflow/grid.hpp"
#include "otflow/image_io.hpp"
#include "otflow/initflow.hpp"
#include "otflow/matching.hpp"
#include "otflow/metrics.hpp"
#include "otflow/numeric.hpp"
#include "otflow/parallel.hpp"
#include "otflow/pipeline.hpp"
#include "otflow/refine.hpp"
#include "otflow/supervise.hpp"
#include "otflow/synth.hpp"
#include "otflow/visualize.hpp"
