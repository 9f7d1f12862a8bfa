#pragma once

// Umbrella header for the DTS toolkit: train a UDA classifier, pseudo-label
// the target domain, fit a class-conditional diffusion model on it, sample
// synthetic target data with a fast second-order solver, augment the source
// and retrain.

#include "dts/cdpm.hpp"
#include "dts/checkpoint.hpp"
#include "dts/config.hpp"
#include "dts/dataset.hpp"
#include "dts/error.hpp"
#include "dts/matrix.hpp"
#include "dts/metrics.hpp"
#include "dts/mlp.hpp"
#include "dts/optimizer.hpp"
#include "dts/pipeline.hpp"
#include "dts/report.hpp"
#include "dts/rng.hpp"
#include "dts/schedule.hpp"
#include "dts/solver.hpp"
#include "dts/synthetic.hpp"
#include "dts/uda.hpp"
