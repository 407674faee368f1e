#pragma once

#include "mlpart/dp_solver.hpp"
#include "mlpart/error.hpp"
#include "mlpart/hermite.hpp"
#include "mlpart/io.hpp"
#include "mlpart/losses.hpp"
#include "mlpart/metric_model.hpp"
#include "mlpart/ncuts.hpp"
#include "mlpart/partition.hpp"
#include "mlpart/spectral.hpp"
#include "mlpart/synth.hpp"
#include "mlpart/trainer.hpp"
