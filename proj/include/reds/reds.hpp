#pragma once

#include "reds/errors.hpp"
#include "reds/domain.hpp"
#include "reds/kernels.hpp"
#include "reds/gp.hpp"
#include "reds/trace.hpp"
#include "reds/algorithm.hpp"
#include "reds/baselines.hpp"
#include "reds/benchmarks.hpp"
#include "reds/theory.hpp"
#include "reds/harness/config.hpp"
#include "reds/harness/experiment.hpp"
#include "reds/harness/report.hpp"
