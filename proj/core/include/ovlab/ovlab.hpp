#pragma once

#include "ovlab/dataset.hpp"
#include "ovlab/early_stop.hpp"
#include "ovlab/error.hpp"
#include "ovlab/loss_decomp.hpp"
#include "ovlab/matrix.hpp"
#include "ovlab/nn.hpp"
#include "ovlab/optimizer.hpp"
#include "ovlab/ov_metric.hpp"
#include "ovlab/rng.hpp"
#include "ovlab/stats.hpp"
#include "ovlab/trace_io.hpp"
#include "ovlab/training.hpp"
